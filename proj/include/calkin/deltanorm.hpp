#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "calkin/opmodel.hpp"
#include "calkin/random.hpp"
#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"
#include "calkin/transfer.hpp"

namespace calkin {

using HighFloat = boost::multiprecision::cpp_bin_float_50;

inline HighFloat to_high(const Rational& q) {
  return HighFloat(q.get_num().get_str()) / HighFloat(q.get_den().get_str());
}

/// Exact b-th root of q when it is rational.
inline std::optional<Rational> exact_root(const Rational& q, unsigned long b) {
  if (q < 0) return std::nullopt;
  if (b == 1) return q;
  Integer n, d;
  if (mpz_root(n.get_mpz_t(), q.get_num_mpz_t(), b) == 0) return std::nullopt;
  if (mpz_root(d.get_mpz_t(), q.get_den_mpz_t(), b) == 0) return std::nullopt;
  Rational r(n, d);
  r.canonicalize();
  return r;
}

/// q^p for q >= 0 and rational p > 0, exact whenever the result is rational.
struct PowerValue {
  bool exact = true;
  Rational value{0};
  HighFloat approx{0};
};

inline PowerValue rational_power(const Rational& q, const Rational& p) {
  PowerValue out;
  if (q == 0) return out;
  const unsigned long b = p.get_den().get_ui();
  const long a = p.get_num().get_si();
  if (auto root = exact_root(q, b)) {
    out.value = pow(*root, a);
    out.approx = to_high(out.value);
    return out;
  }
  out.exact = false;
  out.approx = boost::multiprecision::pow(to_high(q), to_high(p));
  return out;
}

/// A Delta-norm from a closed family with a declared quasi-triangle constant.
struct DeltaNorm {
  enum class Kind { Lp, Linf, Sum };
  Kind kind = Kind::Lp;
  Rational p{1};
  std::shared_ptr<const DeltaNorm> first, second;

  static DeltaNorm lp(const Rational& p) {
    if (p <= 0) throw Error(ErrorCode::InvalidArgument, "p must be positive");
    return {Kind::Lp, p, nullptr, nullptr};
  }
  static DeltaNorm linf() { return {Kind::Linf, Rational(0), nullptr, nullptr}; }
  static DeltaNorm sum(const DeltaNorm& a, const DeltaNorm& b) {
    return {Kind::Sum, Rational(0), std::make_shared<DeltaNorm>(a), std::make_shared<DeltaNorm>(b)};
  }

  /// ||x + y|| <= C (||x|| + ||y||). For p < 1 the p-integral is subadditive.
  Rational constant() const {
    if (kind == Kind::Sum) return max(first->constant(), second->constant());
    return 1;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Lp: return p == 1 ? "l1" : "lp:" + (p.get_den() == 1 ? p.get_num().get_str() : p.get_str());
      case Kind::Linf: return "linf";
      case Kind::Sum: return "sum(" + first->name() + "," + second->name() + ")";
    }
    return "?";
  }
};

/// "l1", "linf", "lp:p" with rational p, or "sum:A,B".
inline DeltaNorm parse_norm(const std::string& text) {
  if (text == "l1") return DeltaNorm::lp(1);
  if (text == "linf") return DeltaNorm::linf();
  if (text.rfind("lp:", 0) == 0) return DeltaNorm::lp(parse_rational(text.substr(3)));
  if (text.rfind("sum:", 0) == 0) {
    const std::string rest = text.substr(4);
    // split at the top-level comma
    int depth = 0;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest.compare(i, 4, "sum:") == 0) ++depth;
      if (rest[i] == ',') {
        if (depth == 0) return DeltaNorm::sum(parse_norm(rest.substr(0, i)), parse_norm(rest.substr(i + 1)));
        --depth;
      }
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown norm '" + text + "'");
}

struct NormValue {
  bool infinite = false;
  bool exact = true;
  Rational value{0};
  HighFloat approx{0};

  double to_double() const { return infinite ? HUGE_VAL : approx.convert_to<double>(); }

  static NormValue from_power(const PowerValue& v) {
    NormValue n;
    n.exact = v.exact;
    n.value = v.value;
    n.approx = v.approx;
    return n;
  }
  static NormValue exact_value(const Rational& v) {
    NormValue n;
    n.value = v;
    n.approx = to_high(v);
    return n;
  }
  static NormValue inf() {
    NormValue n;
    n.infinite = true;
    return n;
  }

  friend NormValue operator+(const NormValue& a, const NormValue& b) {
    if (a.infinite || b.infinite) return inf();
    NormValue n;
    n.exact = a.exact && b.exact;
    n.value = a.value + b.value;
    n.approx = a.approx + b.approx;
    if (n.exact) n.approx = to_high(n.value);
    return n;
  }
  NormValue scaled(const PowerValue& s) const {
    if (infinite) return *this;
    NormValue n;
    n.exact = exact && s.exact;
    n.value = value * s.value;
    n.approx = approx * s.approx;
    if (n.exact) n.approx = to_high(n.value);
    return n;
  }
};

/// Exact equality when both sides are exact, else relative 1e-12.
inline bool same_norm(const NormValue& a, const NormValue& b, double rel = 1e-12) {
  if (a.infinite || b.infinite) return a.infinite == b.infinite;
  if (a.exact && b.exact) return a.value == b.value;
  HighFloat diff = boost::multiprecision::abs(a.approx - b.approx);
  HighFloat scale = std::max(HighFloat(1), boost::multiprecision::abs(a.approx));
  return diff <= HighFloat(rel) * scale;
}

inline bool norm_le(const NormValue& a, const NormValue& b, double rel = 1e-12) {
  if (b.infinite) return true;
  if (a.infinite) return false;
  if (a.exact && b.exact) return a.value <= b.value;
  return a.approx <= b.approx + HighFloat(rel) * std::max(HighFloat(1), boost::multiprecision::abs(b.approx));
}

namespace detail {

/// A sum of weighted powers, accumulated exactly as long as possible.
struct PowerSum {
  NormValue total = NormValue::exact_value(0);
  void add(const Rational& weight, const PowerValue& v) {
    PowerValue w;
    w.value = weight;
    w.approx = to_high(weight);
    total = total + NormValue::from_power(v).scaled(w);
  }
  /// A * sum_{d >= 1} q^d with q = ratio^p * factor; infinite unless q < 1.
  void add_geometric(const Rational& A, const PowerValue& amp, const Rational& ratio, const Rational& p,
                     const Rational& factor) {
    if (total.infinite) return;
    PowerValue rp = rational_power(ratio, p);
    if (rp.exact) {
      Rational q = rp.value * factor;
      if (q >= 1) {
        total = NormValue::inf();
        return;
      }
      PowerValue s;
      s.value = A * q / (1 - q);
      s.approx = to_high(s.value);
      total = total + NormValue::from_power(amp).scaled(s);
      return;
    }
    HighFloat q = rp.approx * to_high(factor);
    if (q >= 1) {
      total = NormValue::inf();
      return;
    }
    PowerValue s;
    s.exact = false;
    s.approx = to_high(A) * q / (1 - q);
    total = total + NormValue::from_power(amp).scaled(s);
  }
};

inline NormValue finish_lp(const NormValue& integral, const Rational& p) {
  if (integral.infinite || p < 1) return integral;
  const Rational inv = 1 / p;
  if (integral.exact) return NormValue::from_power(rational_power(integral.value, inv));
  NormValue n;
  n.exact = false;
  n.approx = boost::multiprecision::pow(integral.approx, to_high(inv));
  return n;
}

inline NormValue function_norm(const DeltaNorm& N, const StepFunction& f) {
  if (N.kind == DeltaNorm::Kind::Sum) return function_norm(*N.first, f) + function_norm(*N.second, f);
  if (N.kind == DeltaNorm::Kind::Linf) {
    Rational s = 0;
    for (const auto& v : f.values()) s = max(s, abs(v));
    if (const auto& z = f.zero_tail()) {
      if (z->r > 1) return NormValue::inf();
      s = max(s, abs(z->cell(z->lo - 1)));
    }
    const InfinityTail& t = f.infinity_tail();
    s = max(s, t.geometric ? abs(t.cell(t.hi + 1)) : abs(t.v));
    return NormValue::exact_value(s);
  }
  PowerSum sum;
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.values().size(); ++i)
    sum.add(bp[i + 1] - bp[i], rational_power(abs(f.values()[i]), N.p));
  if (const auto& z = f.zero_tail()) {
    // cell lo - d has value |c| r^d and length 2^(lo - d)
    sum.add_geometric(pow2(z->lo), rational_power(abs(z->c), N.p), z->r, N.p, Rational(1, 2));
  }
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) {
    sum.add_geometric(pow2(t.hi), rational_power(abs(t.c), N.p), t.r, N.p, Rational(2));
  } else if (t.v != 0) {
    return NormValue::inf();
  }
  return finish_lp(sum.total, N.p);
}

inline NormValue sequence_norm(const DeltaNorm& N, const DyadicSequence& x) {
  if (N.kind == DeltaNorm::Kind::Sum) return sequence_norm(*N.first, x) + sequence_norm(*N.second, x);
  if (N.kind == DeltaNorm::Kind::Linf) {
    Rational s = 0;
    for (long n = x.lo(); n <= x.hi(); ++n) s = max(s, abs(x.at(n)));
    if (!x.left().zero) {
      if (x.left().r > 1) return NormValue::inf();
      s = max(s, abs(x.left().at(1)));
    }
    if (!x.right().zero) s = max(s, abs(x.right().at(1)));
    return NormValue::exact_value(s);
  }
  // sum_n 2^n |x_n|^p
  PowerSum sum;
  for (long n = x.lo(); n <= x.hi(); ++n) sum.add(pow2(n), rational_power(abs(x.at(n)), N.p));
  if (!x.left().zero)
    sum.add_geometric(pow2(x.lo()), rational_power(abs(x.left().c), N.p), x.left().r, N.p, Rational(1, 2));
  if (!x.right().zero)
    sum.add_geometric(pow2(x.hi()), rational_power(abs(x.right().c), N.p), x.right().r, N.p, Rational(2));
  return finish_lp(sum.total, N.p);
}

}  // namespace detail

inline NormValue norm_eval(const DeltaNorm& N, const StepFunction& f) { return detail::function_norm(N, f); }
inline NormValue norm_eval(const DeltaNorm& N, const DyadicSequence& x) { return detail::sequence_norm(N, x); }
/// Operators are measured through mu(X).
inline NormValue norm_eval(const DeltaNorm& N, const Operator& x) {
  if (x.is_commutative()) return detail::function_norm(N, x.function());
  NormValue v = detail::function_norm(N, singular_value_function(x));
  if (!x.is_exact()) v.exact = false;
  return v;
}

/// ||D(Phi X)||: depends on X only through mu(2^n, X).
inline NormValue stable_norm(const DeltaNorm& N, const Operator& x) {
  return detail::function_norm(N, pietsch_D(phi_op(x)));
}

struct ConstantsReport {
  Rational declared_C{1};
  double worst_triangle_function = 0;
  double worst_triangle_sequence = 0;
  double worst_triangle_operator = 0;
  double worst_shift = 0;          // ||S_+ x|| / (2C ||x||)
  double worst_dilation[4] = {0, 0, 0, 0};  // ||sigma_{2^k} f|| / ((2C)^k ||f||)
  double l1_shift_ratio_min = HUGE_VAL;     // ||S_+ x|| / ||x||, L1 equality case
  long trials = 0;

  bool ok(double tol = 1e-12) const {
    bool good = worst_triangle_function <= 1 + tol && worst_triangle_sequence <= 1 + tol &&
                worst_triangle_operator <= 1 + tol && worst_shift <= 1 + tol;
    for (double d : worst_dilation) good = good && d <= 1 + tol;
    return good;
  }
};

inline ConstantsReport constants_report(const DeltaNorm& N, long trials, std::uint64_t seed = 0) {
  ConstantsReport rep;
  rep.declared_C = N.constant();
  rep.trials = trials;
  const double C = to_double(rep.declared_C);
  Rng g(seed);
  auto ratio = [](const NormValue& num, double den) {
    if (num.infinite || den == 0) return 0.0;
    return num.to_double() / den;
  };
  for (long t = 0; t < trials; ++t) {
    StepFunction f = random_step(g), h = random_step(g);
    rep.worst_triangle_function =
        std::max(rep.worst_triangle_function,
                 ratio(norm_eval(N, f + h), C * (norm_eval(N, f).to_double() + norm_eval(N, h).to_double())));
    for (int k = 1; k <= 4; ++k) {
      double bound = std::pow(2 * C, k) * norm_eval(N, f).to_double();
      rep.worst_dilation[k - 1] = std::max(rep.worst_dilation[k - 1], ratio(norm_eval(N, dilate(f, pow2(k))), bound));
    }
    SequenceOptions so;
    so.tails = false;
    DyadicSequence x = random_sequence(g, so), y = random_sequence(g, so);
    NormValue nx = norm_eval(N, x);
    rep.worst_triangle_sequence = std::max(
        rep.worst_triangle_sequence, ratio(norm_eval(N, x + y), C * (nx.to_double() + norm_eval(N, y).to_double())));
    NormValue ns = norm_eval(N, shift(x, 1));
    rep.worst_shift = std::max(rep.worst_shift, ratio(ns, 2 * C * nx.to_double()));
    if (nx.to_double() > 0) rep.l1_shift_ratio_min = std::min(rep.l1_shift_ratio_min, ns.to_double() / nx.to_double());
    BlockOptions bo;
    bo.max_dim = 4;
    BlockAlgebra alg = random_algebra(g, bo);
    Operator X = random_block_operator(g, alg, bo), Y = random_block_operator(g, alg, bo);
    rep.worst_triangle_operator =
        std::max(rep.worst_triangle_operator,
                 ratio(norm_eval(N, X + Y), C * (norm_eval(N, X).to_double() + norm_eval(N, Y).to_double())));
  }
  return rep;
}

}  // namespace calkin
