#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "calkin/dyadic.hpp"
#include "calkin/opmodel.hpp"
#include "calkin/seqcore.hpp"
#include "calkin/transfer.hpp"

namespace calkin {

/// Value of a partially defined functional. OutsideDomain is an answer, not
/// an error.
struct EvalResult {
  bool defined = false;
  bool exact = true;
  Rational value{0};
  double approx = 0;
  Rational imag{0};
  std::string reason;
  /// Set for functionals whose trace value depends on the chosen representation.
  bool representation_dependent = false;

  static EvalResult exact_value(const Rational& v) {
    EvalResult r;
    r.defined = true;
    r.value = v;
    r.approx = to_double(v);
    return r;
  }
  static EvalResult float_value(double v) {
    EvalResult r;
    r.defined = true;
    r.exact = false;
    r.approx = v;
    r.value = from_double(v);
    return r;
  }
  static EvalResult outside(std::string why) {
    EvalResult r;
    r.reason = std::move(why);
    return r;
  }
  friend bool operator==(const EvalResult& a, const EvalResult& b) {
    if (a.defined != b.defined) return false;
    if (!a.defined) return true;
    return a.value == b.value && a.imag == b.imag;
  }
};

/// theta(x) = psi(y) with y_n = 2^n x_n.
struct Theta {
  enum class Kind { Summation, LimitPlus, LimitMinus, CesaroPlus, CesaroMinus, WeightedSum };
  Kind kind = Kind::Summation;
  /// WeightedSum: c_n = primitive(n) - primitive(n + 1), with the limits of
  /// the primitive at -inf and +inf, so constant tails telescope exactly.
  std::function<Rational(long)> primitive;
  Rational primitive_minus_inf{0};
  Rational primitive_plus_inf{0};

  Rational weight(long n) const { return primitive(n) - primitive(n + 1); }

  static Theta summation() { return {Kind::Summation, {}, 0, 0}; }
  static Theta limit_plus() { return {Kind::LimitPlus, {}, 0, 0}; }
  static Theta limit_minus() { return {Kind::LimitMinus, {}, 0, 0}; }
  static Theta cesaro_plus() { return {Kind::CesaroPlus, {}, 0, 0}; }
  static Theta cesaro_minus() { return {Kind::CesaroMinus, {}, 0, 0}; }
};

inline const char* theta_name(Theta::Kind k) {
  switch (k) {
    case Theta::Kind::Summation: return "summation";
    case Theta::Kind::LimitPlus: return "limplus";
    case Theta::Kind::LimitMinus: return "limminus";
    case Theta::Kind::CesaroPlus: return "cesaro+";
    case Theta::Kind::CesaroMinus: return "cesaro-";
    case Theta::Kind::WeightedSum: return "counterexample";
  }
  return "?";
}

/// c_n = 2^n / ((1 + 2^n)(1 + 2^(n+1))) = 1/(1 + 2^n) - 1/(1 + 2^(n+1)).
inline Theta counterexample_theta() {
  Theta t;
  t.kind = Theta::Kind::WeightedSum;
  t.primitive = [](long n) { return Rational(1 / (1 + pow2(n))); };
  t.primitive_minus_inf = 1;
  t.primitive_plus_inf = 0;
  return t;
}

inline Theta theta_by_name(const std::string& name) {
  if (name == "summation") return Theta::summation();
  if (name == "limplus") return Theta::limit_plus();
  if (name == "limminus") return Theta::limit_minus();
  if (name == "cesaro+") return Theta::cesaro_plus();
  if (name == "cesaro-") return Theta::cesaro_minus();
  if (name == "counterexample") return counterexample_theta();
  throw Error(ErrorCode::InvalidArgument, "unknown functional '" + name + "'");
}

namespace detail {

/// sum_{d >= 1} q^d for 0 < q < 1.
inline Rational geometric_series(const Rational& q) { return q / (1 - q); }

inline EvalResult limit_toward_plus(const DyadicSequence& x) {
  const Tail& t = x.right();
  if (t.zero) return EvalResult::exact_value(0);
  const Rational q = 2 * t.r;
  if (q < 1) return EvalResult::exact_value(0);
  if (q == 1) return EvalResult::exact_value(t.c * pow2(x.hi()));
  return EvalResult::outside("2^n x_n diverges as n -> +inf");
}

inline EvalResult limit_toward_minus(const DyadicSequence& x) {
  const Tail& t = x.left();
  if (t.zero) return EvalResult::exact_value(0);
  const Rational q = t.r / 2;
  if (q < 1) return EvalResult::exact_value(0);
  if (q == 1) return EvalResult::exact_value(t.c * pow2(x.lo()));
  return EvalResult::outside("2^n x_n diverges as n -> -inf");
}

inline EvalResult summation(const DyadicSequence& x) {
  Rational s = 0;
  for (long n = x.lo(); n <= x.hi(); ++n) s += pow2(n) * x.at(n);
  if (!x.left().zero) {
    const Rational q = x.left().r / 2;
    if (q >= 1) return EvalResult::outside("sum of 2^n |x_n| diverges toward -inf");
    s += x.left().c * pow2(x.lo()) * geometric_series(q);
  }
  if (!x.right().zero) {
    const Rational q = 2 * x.right().r;
    if (q >= 1) return EvalResult::outside("sum of 2^n |x_n| diverges toward +inf");
    s += x.right().c * pow2(x.hi()) * geometric_series(q);
  }
  return EvalResult::exact_value(s);
}

/// sum over d >= 1 of weight(n(d)) * c r^d, by floating summation.
inline double weighted_tail(const Theta& th, long start, int dir, const Tail& t) {
  long double s = 0;
  const long double c = to_double(t.c), r = to_double(t.r);
  long double rd = 1;
  for (long d = 1; d <= 20000; ++d) {
    rd *= r;
    const long double term = static_cast<long double>(to_double(th.weight(start + dir * d))) * c * rd;
    s += term;
    if (d > 64 && std::fabs(static_cast<double>(term)) <= 1e-22 * std::fabs(static_cast<double>(s))) break;
  }
  return static_cast<double>(s);
}

inline EvalResult weighted_sum(const Theta& th, const DyadicSequence& x) {
  Rational s = 0;
  for (long n = x.lo(); n <= x.hi(); ++n)
    if (x.at(n) != 0) s += th.weight(n) * x.at(n);
  bool exact = true;
  double extra = 0;
  const Tail& l = x.left();
  if (!l.zero) {
    // weights decay like 2^n toward -inf
    if (l.r >= 2) return EvalResult::outside("weighted series diverges toward -inf");
    if (l.r == 1) {
      s += l.c * (th.primitive_minus_inf - th.primitive(x.lo()));
    } else {
      exact = false;
      extra += weighted_tail(th, x.lo(), -1, l);
    }
  }
  const Tail& r = x.right();
  if (!r.zero) {
    if (r.r == 1) {
      s += r.c * (th.primitive(x.hi() + 1) - th.primitive_plus_inf);
    } else {
      exact = false;
      extra += weighted_tail(th, x.hi(), 1, r);
    }
  }
  if (exact) return EvalResult::exact_value(s);
  return EvalResult::float_value(to_double(s) + extra);
}

}  // namespace detail

/// Cesaro means of 2^n x_n agree with the limits on closed-form data: a
/// geometric tail of y either converges (ratio <= 1) or grows, and then so do
/// its means.
inline EvalResult theta_eval(const Theta& th, const DyadicSequence& x) {
  switch (th.kind) {
    case Theta::Kind::Summation: return detail::summation(x);
    case Theta::Kind::LimitPlus:
    case Theta::Kind::CesaroPlus: return detail::limit_toward_plus(x);
    case Theta::Kind::LimitMinus:
    case Theta::Kind::CesaroMinus: return detail::limit_toward_minus(x);
    case Theta::Kind::WeightedSum: return detail::weighted_sum(th, x);
  }
  return EvalResult::outside("unknown functional");
}

struct InvarianceCase {
  DyadicSequence x;
  EvalResult at_x;
  EvalResult at_half_shift;
  bool comparable = false;
  bool equal = false;
};

struct InvarianceReport {
  std::vector<InvarianceCase> cases;
  bool all_equal = true;
  std::size_t compared = 0;
};

inline InvarianceReport invariance_probe(const Theta& th, const std::vector<DyadicSequence>& samples) {
  InvarianceReport rep;
  for (const auto& x : samples) {
    InvarianceCase c{x, theta_eval(th, x), theta_eval(th, half_shift(x))};
    c.comparable = c.at_x.defined && c.at_half_shift.defined;
    if (c.comparable) {
      ++rep.compared;
      c.equal = c.at_x.exact && c.at_half_shift.exact ? c.at_x.value == c.at_half_shift.value
                                                      : std::abs(c.at_x.approx - c.at_half_shift.approx) <= 1e-12;
      if (!c.equal) rep.all_equal = false;
    }
    rep.cases.push_back(std::move(c));
  }
  return rep;
}

/// phi(X) = theta({2^-k tau(X_k)}).
inline EvalResult trace_eval(const Theta& th, const DyadicRep& rep) {
  EvalResult r = theta_eval(th, rep.coefficients);
  if (r.defined && rep.coefficients_imag != DyadicSequence::zero()) {
    EvalResult im = theta_eval(th, rep.coefficients_imag);
    if (!im.defined) return im;
    r.imag = im.value;
    r.exact = r.exact && im.exact;
  }
  // limits ignore finitely many terms, so rounding in them cannot matter
  const bool limit = th.kind != Theta::Kind::Summation && th.kind != Theta::Kind::WeightedSum;
  if (!rep.exact && !(limit && rep.coefficients.finitely_supported() && rep.coefficients_imag.finitely_supported()))
    r.exact = false;
  r.representation_dependent = th.kind == Theta::Kind::WeightedSum;
  return r;
}

inline EvalResult trace_eval(const Theta& th, const Operator& x) { return trace_eval(th, decompose(x)); }

using TraceFunctional = std::function<EvalResult(const Operator&)>;

/// theta(x) = phi(diag x).
inline EvalResult theta_from_phi(const TraceFunctional& phi, const DyadicSequence& x,
                                 const EmbedTarget& target = std::nullopt) {
  return phi(diag_embed(x, target));
}

/// The functional f -> integral of f / (1 + t)^2 on the function model.
inline EvalResult resolvent_weight_trace(const Operator& x) {
  if (!x.is_commutative())
    throw Error(ErrorCode::InvalidArgument, "defined on the function model only");
  const StepFunction& f = x.function();
  const Theta th = counterexample_theta();
  // the cells [2^n, 2^(n+1)) carry weight c_n, so tails are weighted series
  Rational s = 0;
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.values().size(); ++i)
    s += f.values()[i] * (1 / (1 + bp[i]) - 1 / (1 + bp[i + 1]));
  EvalResult out = EvalResult::exact_value(0);
  auto add = [&](const EvalResult& e) {
    if (!out.defined) return;
    if (!e.defined) {
      out = e;
      return;
    }
    out.exact = out.exact && e.exact;
    out.approx += e.approx;
    out.value += e.value;
  };
  if (const auto& z = f.zero_tail())
    add(theta_eval(th, DyadicSequence(z->lo, {Rational(0)}, Tail::Geometric(z->c, z->r), Tail::Zero())));
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric)
    add(theta_eval(th, DyadicSequence(t.hi, {Rational(0)}, Tail::Zero(), Tail::Geometric(t.c, t.r))));
  else if (t.v != 0)
    s += t.v / (1 + f.tN());
  if (!out.defined) return out;
  if (out.exact) return EvalResult::exact_value(out.value + s);
  return EvalResult::float_value(out.approx + to_double(s));
}

struct ClassifyReport {
  bool supported_at_plus_inf = true;
  bool supported_at_minus_inf = true;
  bool positive = true;
  bool normalised = false;
  EvalResult at_chi_z;
};

inline ClassifyReport classify(const Theta& th) {
  ClassifyReport rep;
  auto vanishes = [&](const DyadicSequence& x) {
    EvalResult e = theta_eval(th, x);
    return e.defined && (e.exact ? e.value == 0 : e.approx == 0);
  };
  for (long a = -8; a <= 8; ++a) {
    if (!vanishes(DyadicSequence::indicator_below(a))) rep.supported_at_plus_inf = false;
    if (!vanishes(DyadicSequence::indicator_above(a))) rep.supported_at_minus_inf = false;
  }
  // sums, limits, means and positive weights are all monotone
  rep.positive = true;
  rep.at_chi_z = theta_eval(th, DyadicSequence::constant(1));
  rep.normalised = rep.at_chi_z.defined && rep.at_chi_z.value == 1;
  return rep;
}

struct PhiAvIdentityReport {
  EvalResult direct;
  EvalResult averaged;
  bool equal = false;
  std::optional<Rational> margin;
};

/// Compares phi(X) with phi(diag Phi_av mu(X)).
inline PhiAvIdentityReport phi_av_identity_check(const Theta& th, const Operator& x) {
  PhiAvIdentityReport rep;
  rep.direct = trace_eval(th, x);
  DyadicSequence av = x.is_commutative() ? phi_av(x.function()) : phi_av(singular_value_function(x));
  rep.averaged = trace_eval(th, diag_embed(av));
  if (rep.direct.defined && rep.averaged.defined) {
    rep.margin = rep.direct.value - rep.averaged.value;
    rep.equal = rep.direct.exact && rep.averaged.exact ? *rep.margin == 0
                                                       : std::abs(rep.direct.approx - rep.averaged.approx) <= 1e-9;
  } else {
    rep.equal = rep.direct.defined == rep.averaged.defined;
  }
  return rep;
}

}  // namespace calkin
