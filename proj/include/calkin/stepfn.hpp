#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "calkin/rational.hpp"

namespace calkin {

/// Dyadic geometric behaviour near zero: c * r^(lo-n) on [2^n, 2^(n+1)) for n < lo.
struct ZeroTail {
  Rational c;
  Rational r;
  long lo = 0;

  Rational cell(long n) const { return c * pow(r, lo - n); }
  friend bool operator==(const ZeroTail& a, const ZeroTail& b) {
    return a.c == b.c && a.r == b.r && a.lo == b.lo;
  }
};

/// Behaviour on [t_N, inf): either a constant, or c * r^(n-hi) on
/// [2^n, 2^(n+1)) for n > hi with 0 < r < 1 (then t_N = 2^(hi+1)).
struct InfinityTail {
  bool geometric = false;
  Rational v{0};
  Rational c{0};
  Rational r{1};
  long hi = 0;

  static InfinityTail Constant(const Rational& v) {
    InfinityTail t;
    t.v = v;
    return t;
  }
  static InfinityTail Geometric(const Rational& c, const Rational& r, long hi) {
    if (r <= 0) throw Error(ErrorCode::InvalidArgument, "tail ratio must be positive");
    if (r > 1) throw Error(ErrorCode::InvalidArgument, "growing tail at infinity");
    if (c == 0) return Constant(0);
    InfinityTail t;
    t.geometric = true;
    t.c = c;
    t.r = r;
    t.hi = hi;
    return t;
  }
  Rational cell(long n) const { return geometric ? Rational(c * pow(r, n - hi)) : v; }
  Rational start() const { return pow2(hi + 1); }
};

namespace detail {

/// sum_{n=n1}^{n2} q^n, where a missing bound means an infinite range.
inline Extended geometric_range_sum(const Rational& q, std::optional<long> n1,
                                    std::optional<long> n2) {
  if (n1 && n2 && *n2 < *n1) return Extended(Rational(0));
  if (!n1) {
    if (q <= 1) return Extended::infinity();
    // sum_{n <= n2} q^n = q^n2 * q / (q - 1)
    return Extended(Rational(pow(q, *n2) * q / (q - 1)));
  }
  if (!n2) {
    if (q >= 1) return Extended::infinity();
    return Extended(Rational(pow(q, *n1) / (1 - q)));
  }
  if (q == 1) return Extended(Rational(*n2 - *n1 + 1));
  return Extended(Rational(pow(q, *n1) * (pow(q, *n2 - *n1 + 1) - 1) / (q - 1)));
}

inline Extended scaled(const Rational& a, const Extended& e) {
  if (a == 0) return Extended(Rational(0));
  if (e.is_infinite()) return Extended::infinity(a > 0 ? e.infinity_sign() : -e.infinity_sign());
  return Extended(Rational(a * e.value()));
}

/// Integral over [a, b] of the cell family A * rho^n on [2^n, 2^(n+1)), for
/// cells nmin..nmax (missing bound = unbounded). a may be 0, b may be infinite.
inline Extended dyadic_family_integral(const Rational& A, const Rational& rho,
                                       std::optional<long> nmin, std::optional<long> nmax,
                                       const Rational& a, const std::optional<Rational>& b) {
  if (A == 0) return Extended(Rational(0));
  Rational lo_t = a;
  if (nmin) lo_t = max(lo_t, pow2(*nmin));
  std::optional<Rational> hi_t = b;
  if (nmax) {
    Rational cap = pow2(*nmax + 1);
    hi_t = hi_t ? min(*hi_t, cap) : cap;
  }
  if (hi_t && *hi_t <= lo_t) return Extended(Rational(0));
  auto val = [&](long n) { return Rational(A * pow(rho, n)); };
  Extended total(Rational(0));
  std::optional<long> full_from, full_to;
  if (lo_t > 0) {
    long na = floor_log2(lo_t);
    if (hi_t && floor_log2(*hi_t) == na) return Extended(Rational((*hi_t - lo_t) * val(na)));
    if (lo_t != pow2(na)) {
      total = total + Extended(Rational((pow2(na + 1) - lo_t) * val(na)));
      full_from = na + 1;
    } else {
      full_from = na;
    }
  }
  if (hi_t) {
    long nb = floor_log2(*hi_t);
    if (*hi_t != pow2(nb)) total = total + Extended(Rational((*hi_t - pow2(nb)) * val(nb)));
    full_to = nb - 1;
  }
  // full cells: A * (2 rho)^n
  total = total + scaled(A, geometric_range_sum(Rational(2 * rho), full_from, full_to));
  return total;
}

}  // namespace detail

/// Right-continuous piecewise-constant function on (0, inf) with exact
/// breakpoints, an optional dyadic geometric tail at 0 and a tail at infinity.
class StepFunction {
 public:
  StepFunction() : breakpoints_{Rational(0)} {}

  StepFunction(std::optional<ZeroTail> zero_tail, std::vector<Rational> breakpoints,
               std::vector<Rational> values, InfinityTail inf = InfinityTail::Constant(0))
      : zero_tail_(std::move(zero_tail)), breakpoints_(std::move(breakpoints)),
        values_(std::move(values)), inf_(std::move(inf)) {
    validate();
    canonicalize();
  }

  /// Finite pieces from 0 plus a constant tail.
  static StepFunction pieces(std::vector<Rational> breakpoints, std::vector<Rational> values,
                             const Rational& v_inf = 0) {
    return StepFunction(std::nullopt, std::move(breakpoints), std::move(values),
                        InfinityTail::Constant(v_inf));
  }
  /// value * chi_[a, b).
  static StepFunction indicator(const Rational& a, const Rational& b, const Rational& value = 1) {
    if (a == 0) return pieces({Rational(0), b}, {value});
    return pieces({Rational(0), a, b}, {Rational(0), value});
  }
  static StepFunction constant(const Rational& v) { return pieces({Rational(0)}, {}, v); }

  const std::optional<ZeroTail>& zero_tail() const noexcept { return zero_tail_; }
  const std::vector<Rational>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<Rational>& values() const noexcept { return values_; }
  const InfinityTail& infinity_tail() const noexcept { return inf_; }
  /// Constant value at infinity (0 for geometric tails).
  Rational v_inf() const { return inf_.geometric ? Rational(0) : inf_.v; }
  const Rational& t0() const { return breakpoints_.front(); }
  const Rational& tN() const { return breakpoints_.back(); }
  /// f is in the compact-type class iff it vanishes at infinity.
  bool is_compact() const { return v_inf() == 0; }

  Rational at(const Rational& t) const {
    if (t <= 0) throw Error(ErrorCode::InvalidArgument, "step functions live on (0, inf)");
    if (t < t0()) return zero_tail_->cell(floor_log2(t));
    if (t >= tN()) return inf_.geometric ? inf_.cell(floor_log2(t)) : inf_.v;
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }
  Rational operator()(const Rational& t) const { return at(t); }

  /// Points such that f is constant between consecutive ones, below the first
  /// one and above the last one modulo the dyadic tail cells, which are sampled
  /// explicitly over [2^from, 2^to].
  std::vector<Rational> dyadic_grid(long from, long to) const {
    std::set<Rational> pts;
    for (const auto& b : breakpoints_)
      if (b > 0) pts.insert(b);
    if (zero_tail_)
      for (long n = from; n <= zero_tail_->lo; ++n) pts.insert(pow2(n));
    if (inf_.geometric)
      for (long n = inf_.hi + 1; n <= to; ++n) pts.insert(pow2(n));
    return {pts.begin(), pts.end()};
  }

  /// Smallest / largest exponent worth sampling to compare the tails.
  long low_exponent() const {
    long e = zero_tail_ ? zero_tail_->lo : 0;
    for (const auto& b : breakpoints_)
      if (b > 0) e = std::min(e, floor_log2(b));
    return e - 2;
  }
  long high_exponent() const {
    long e = inf_.geometric ? inf_.hi + 1 : 0;
    for (const auto& b : breakpoints_)
      if (b > 0) e = std::max(e, floor_log2(b) + 1);
    return e + 2;
  }

  friend bool operator==(const StepFunction& f, const StepFunction& g) {
    long lo = std::min(f.low_exponent(), g.low_exponent());
    long hi = std::max(f.high_exponent(), g.high_exponent());
    std::set<Rational> pts;
    for (const auto& p : f.dyadic_grid(lo, hi)) pts.insert(p);
    for (const auto& p : g.dyadic_grid(lo, hi)) pts.insert(p);
    for (long n : {lo, lo + 1, hi, hi + 1}) pts.insert(pow2(n));
    for (const auto& p : pts)
      if (f.at(p) != g.at(p)) return false;
    return true;
  }
  friend bool operator!=(const StepFunction& f, const StepFunction& g) { return !(f == g); }

 private:
  void validate() {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size() + 1)
      throw Error(ErrorCode::InvalidArgument, "need one more breakpoint than values");
    for (auto& b : breakpoints_) b.canonicalize();
    for (auto& v : values_) v.canonicalize();
    for (std::size_t i = 1; i < breakpoints_.size(); ++i)
      if (!(breakpoints_[i - 1] < breakpoints_[i]))
        throw Error(ErrorCode::InvalidArgument, "breakpoints must increase strictly");
    if (zero_tail_) {
      if (zero_tail_->r <= 0) throw Error(ErrorCode::InvalidArgument, "zero tail ratio must be positive");
      if (breakpoints_.front() != pow2(zero_tail_->lo))
        throw Error(ErrorCode::InvalidArgument, "first breakpoint must be 2^lo with a zero tail");
    } else if (breakpoints_.front() != 0) {
      throw Error(ErrorCode::InvalidArgument, "first breakpoint must be 0 without a zero tail");
    }
    if (inf_.geometric && breakpoints_.back() != inf_.start())
      throw Error(ErrorCode::InvalidArgument, "last breakpoint must be 2^(hi+1) with a geometric tail");
  }

  void canonicalize() {
    if (zero_tail_ && zero_tail_->c == 0) {
      breakpoints_.insert(breakpoints_.begin(), Rational(0));
      values_.insert(values_.begin(), Rational(0));
      zero_tail_.reset();
    }
    if (zero_tail_ && zero_tail_->r == 1) {
      breakpoints_.insert(breakpoints_.begin(), Rational(0));
      values_.insert(values_.begin(), zero_tail_->c);
      zero_tail_.reset();
    }
    if (inf_.geometric && inf_.r == 1) inf_ = InfinityTail::Constant(inf_.c);
    // absorb single dyadic cells that continue a geometric tail
    while (zero_tail_ && !values_.empty() && breakpoints_[1] == pow2(zero_tail_->lo + 1) &&
           values_.front() == zero_tail_->c) {
      zero_tail_->c /= zero_tail_->r;
      zero_tail_->lo += 1;
      breakpoints_.erase(breakpoints_.begin());
      values_.erase(values_.begin());
    }
    while (inf_.geometric && !values_.empty() &&
           breakpoints_[breakpoints_.size() - 2] == pow2(inf_.hi) && values_.back() == inf_.c) {
      inf_.c /= inf_.r;
      inf_.hi -= 1;
      breakpoints_.pop_back();
      values_.pop_back();
    }
    std::vector<Rational> bp{breakpoints_.front()};
    std::vector<Rational> vals;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!vals.empty() && vals.back() == values_[i]) {
        bp.back() = breakpoints_[i + 1];
      } else {
        vals.push_back(values_[i]);
        bp.push_back(breakpoints_[i + 1]);
      }
    }
    if (!inf_.geometric)
      while (!vals.empty() && vals.back() == inf_.v) {
        vals.pop_back();
        bp.pop_back();
      }
    breakpoints_ = std::move(bp);
    values_ = std::move(vals);
  }

  std::optional<ZeroTail> zero_tail_;
  std::vector<Rational> breakpoints_;
  std::vector<Rational> values_;
  InfinityTail inf_;
};

inline std::ostream& operator<<(std::ostream& os, const StepFunction& f) {
  os << "{";
  if (f.zero_tail())
    os << "zero_tail " << to_string(f.zero_tail()->c) << "*" << to_string(f.zero_tail()->r)
       << "^(" << f.zero_tail()->lo << "-n); ";
  for (std::size_t i = 0; i < f.values().size(); ++i)
    os << "[" << to_string(f.breakpoints()[i]) << "," << to_string(f.breakpoints()[i + 1])
       << "):" << to_string(f.values()[i]) << " ";
  if (f.infinity_tail().geometric)
    os << "inf_tail " << to_string(f.infinity_tail().c) << "*" << to_string(f.infinity_tail().r)
       << "^(n-" << f.infinity_tail().hi << ")";
  else
    os << "v_inf " << to_string(f.infinity_tail().v);
  return os << "}";
}

/// Applies op to every value of f, tails included. op must commute with the
/// geometric tail structure (scaling by a nonzero factor, absolute value).
template <class Op>
StepFunction map_values(const StepFunction& f, Op op) {
  std::optional<ZeroTail> z = f.zero_tail();
  if (z) z->c = op(z->c);
  std::vector<Rational> v;
  for (const auto& q : f.values()) v.push_back(op(q));
  InfinityTail t = f.infinity_tail();
  if (t.geometric)
    t.c = op(t.c);
  else
    t.v = op(t.v);
  return StepFunction(z, f.breakpoints(), std::move(v), t);
}

inline StepFunction scale(const Rational& alpha, const StepFunction& f) {
  if (alpha == 0) return StepFunction();
  return map_values(f, [&](const Rational& q) { return Rational(alpha * q); });
}

inline StepFunction abs(const StepFunction& f) {
  return map_values(f, [](const Rational& q) { return abs(q); });
}

/// sigma_s f (t) = f(t / s).
inline StepFunction dilate(const StepFunction& f, const Rational& s) {
  if (s <= 0) throw Error(ErrorCode::InvalidArgument, "dilation factor must be positive");
  std::optional<long> k = exact_log2(s);
  if ((f.zero_tail() || f.infinity_tail().geometric) && !k)
    throw Error(ErrorCode::NonDyadicDilation, "geometric tails need a power-of-two dilation");
  std::optional<ZeroTail> z = f.zero_tail();
  if (z) z->lo += *k;
  InfinityTail t = f.infinity_tail();
  if (t.geometric) t.hi += *k;
  std::vector<Rational> bp;
  for (const auto& b : f.breakpoints()) bp.push_back(b * s);
  return StepFunction(z, std::move(bp), f.values(), t);
}

/// Lebesgue measure of {|f| > s}, s >= 0.
inline Extended distribution(const StepFunction& f, const Rational& s) {
  if (s < 0) throw Error(ErrorCode::InvalidArgument, "distribution needs s >= 0");
  Rational total = 0;
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.values().size(); ++i)
    if (abs(f.values()[i]) > s) total += bp[i + 1] - bp[i];
  if (const auto& z = f.zero_tail()) {
    const Rational c = abs(z->c);
    if (z->r > 1) {
      long n = z->lo;  // cells below n exceed s
      while (c * pow(z->r, z->lo - n + 1) <= s) --n;
      total += pow2(n);
    } else {
      // r < 1: the cells n_s..lo-1 exceed s
      if (s == 0) {
        total += pow2(z->lo);
      } else {
        long n = z->lo - 1;
        while (c * pow(z->r, z->lo - n) > s) --n;
        total += pow2(z->lo) - pow2(n + 1);
      }
    }
  }
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) {
    const Rational c = abs(t.c);
    if (s == 0) return Extended::infinity();
    long n = t.hi + 1;
    while (c * pow(t.r, n - t.hi) > s) ++n;
    total += pow2(n) - pow2(t.hi + 1);
  } else if (abs(t.v) > s) {
    return Extended::infinity();
  }
  return Extended(total);
}

/// Integral of f over [a, b]; b = nullopt means infinity. Divergent parts
/// are reported as signed infinities.
inline Extended integrate(const StepFunction& f, const Rational& a,
                          const std::optional<Rational>& b = std::nullopt) {
  if (a < 0 || (b && *b < a)) throw Error(ErrorCode::InvalidArgument, "need 0 <= a <= b");
  Extended total(Rational(0));
  if (const auto& z = f.zero_tail()) {
    // c r^(lo-n) = (c r^lo) (1/r)^n
    total = total + detail::dyadic_family_integral(Rational(z->c * pow(z->r, z->lo)),
                                                   Rational(1 / z->r), std::nullopt,
                                                   z->lo - 1, a, b);
  }
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    Rational l = max(bp[i], a);
    Rational r = b ? min(bp[i + 1], *b) : bp[i + 1];
    if (l < r) total = total + Extended(Rational((r - l) * f.values()[i]));
  }
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) {
    total = total + detail::dyadic_family_integral(Rational(t.c * pow(t.r, -t.hi)), t.r,
                                                   t.hi + 1, std::nullopt, a, b);
  } else if (t.v != 0) {
    Rational l = max(f.tN(), a);
    if (!b) {
      total = total + Extended::infinity(t.v > 0 ? 1 : -1);
    } else if (l < *b) {
      total = total + Extended(Rational((*b - l) * t.v));
    }
  }
  return total;
}

/// Pointwise sum. Tails must combine into a single closed form.
inline StepFunction add(const StepFunction& f, const StepFunction& g) {
  // zero tail of the sum
  std::optional<ZeroTail> z;
  const auto& zf = f.zero_tail();
  const auto& zg = g.zero_tail();
  if (zf && zg) {
    if (zf->r != zg->r) throw Error(ErrorCode::IncompatibleTails, "zero tails with different ratios");
    long lo = std::min(zf->lo, zg->lo);
    Rational c = zf->c * pow(zf->r, zf->lo - lo) + zg->c * pow(zg->r, zg->lo - lo);
    if (c != 0) z = ZeroTail{c, zf->r, lo};
  } else if (zf || zg) {
    const auto& tail = zf ? zf : zg;
    const StepFunction& other = zf ? g : f;
    if (other.at(pow2(other.low_exponent())) != 0)
      throw Error(ErrorCode::IncompatibleTails, "geometric zero tail plus a nonzero constant");
    // other vanishes on (0, t1): keep the tail below min(2^lo, t1)
    long lo = tail->lo;
    if (other.breakpoints().size() > 1)
      while (pow2(lo) > other.breakpoints()[1]) --lo;
    z = ZeroTail{Rational(tail->c * pow(tail->r, tail->lo - lo)), tail->r, lo};
  }
  // tail at infinity
  const InfinityTail& tf = f.infinity_tail();
  const InfinityTail& tg = g.infinity_tail();
  InfinityTail inf;
  if (!tf.geometric && !tg.geometric) {
    inf = InfinityTail::Constant(tf.v + tg.v);
  } else if (tf.geometric && tg.geometric) {
    if (tf.r != tg.r) throw Error(ErrorCode::IncompatibleTails, "infinity tails with different ratios");
    long hi = std::max(tf.hi, tg.hi);
    Rational c = tf.c * pow(tf.r, hi - tf.hi) + tg.c * pow(tg.r, hi - tg.hi);
    if (c == 0)
      throw Error(ErrorCode::IncompatibleTails, "cancelling geometric tails at infinity");
    inf = InfinityTail::Geometric(c, tf.r, hi);
  } else {
    const InfinityTail& geo = tf.geometric ? tf : tg;
    const StepFunction& other = tf.geometric ? g : f;
    if (other.v_inf() != 0)
      throw Error(ErrorCode::IncompatibleTails, "geometric infinity tail plus a nonzero constant");
    long hi = geo.hi;
    while (pow2(hi + 1) < other.tN()) ++hi;
    inf = InfinityTail::Geometric(Rational(geo.c * pow(geo.r, hi - geo.hi)), geo.r, hi);
  }
  Rational start = z ? pow2(z->lo) : Rational(0);
  Rational end = inf.geometric ? inf.start() : max(f.tN(), g.tN());
  long lo_e = z ? z->lo : 0, hi_e = inf.geometric ? inf.hi + 1 : 0;
  std::set<Rational> pts{start, end};
  for (const auto& p : f.dyadic_grid(lo_e, hi_e))
    if (p > start && p < end) pts.insert(p);
  for (const auto& p : g.dyadic_grid(lo_e, hi_e))
    if (p > start && p < end) pts.insert(p);
  std::vector<Rational> bp(pts.begin(), pts.end());
  std::vector<Rational> vals;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    // right-continuous: sample at the left endpoint (midpoint if it is 0)
    Rational probe = bp[i] == 0 ? Rational(bp[i + 1] / 2) : bp[i];
    vals.push_back(f.at(probe) + g.at(probe));
  }
  return StepFunction(z, std::move(bp), std::move(vals), inf);
}

inline StepFunction operator+(const StepFunction& f, const StepFunction& g) { return add(f, g); }
inline StepFunction operator-(const StepFunction& f, const StepFunction& g) {
  return add(f, scale(Rational(-1), g));
}

namespace detail {

/// Exact access to f* without materializing infinitely many tail cells.
/// Levels of |f| are kept as value -> measure; geometric tail cells are pulled
/// in lazily whenever they could exceed a queried level.
class Rearranger {
 public:
  explicit Rearranger(const StepFunction& f) {
    const InfinityTail& t = f.infinity_tail();
    floor_ = t.geometric ? Rational(0) : abs(t.v);
    const auto& bp = f.breakpoints();
    for (std::size_t i = 0; i < f.values().size(); ++i)
      add_level(abs(f.values()[i]), bp[i + 1] - bp[i]);
    if (t.geometric) {
      geo_ = true;
      gc_ = abs(t.c);
      gr_ = t.r;
      ghi_ = t.hi;
      gm_ = t.hi;
    }
    if (const auto& z = f.zero_tail()) {
      const Rational c = abs(z->c);
      if (z->r > 1) {
        Rational other = floor_;
        if (!levels_.empty()) other = max(other, levels_.begin()->first);
        if (geo_) other = max(other, Rational(gc_ * gr_));
        long n0 = z->lo;
        while (c * pow(z->r, z->lo - n0 + 1) <= other) {
          add_level(Rational(c * pow(z->r, z->lo - n0 + 1)), pow2(n0 - 1));
          --n0;
        }
        prefix_ = true;
        pc_ = c;
        pr_ = z->r;
        plo_ = z->lo;
        pn0_ = n0;
      } else if (floor_ > 0) {
        for (long n = z->lo - 1; c * pow(z->r, z->lo - n) > floor_; --n)
          add_level(Rational(c * pow(z->r, z->lo - n)), pow2(n));
      } else {
        small_ = true;
        sc_ = c;
        sr_ = z->r;
        slo_ = z->lo;
        sn1_ = z->lo;
      }
    }
  }

  bool has_prefix() const { return prefix_; }
  /// Prefix cells n < prefix_end() carry prefix_cell(n) in f* exactly.
  long prefix_end() const { return pn0_; }
  Rational prefix_cell(long n) const { return pc_ * pow(pr_, plo_ - n); }
  Rational prefix_measure() const { return prefix_ ? pow2(pn0_) : Rational(0); }
  const Rational& floor() const { return floor_; }
  bool accumulating() const { return small_; }
  bool geometric_infinity() const { return geo_; }

  /// f*(t), t > 0.
  Rational value_at(const Rational& t) {
    if (t <= 0) throw Error(ErrorCode::InvalidArgument, "f* is evaluated on (0, inf)");
    if (prefix_ && t < pow2(pn0_)) return prefix_cell(floor_log2(t));
    const Rational tp = t - prefix_measure();
    for (;;) {
      const Rational U = upper();
      Rational cum = 0;
      bool need = false;
      for (const auto& [v, len] : levels_) {
        if (U > v) {
          need = true;
          break;
        }
        cum += len;
        if (tp < cum) return v;
      }
      if (!need) {
        if (U == 0) return floor_;
        if (small_ && !geo_ && tp >= cum + pow2(sn1_)) return floor_;
      }
      materialize_next();
    }
  }

  /// Integral of f* over [a, b] (b = nullopt for infinity), exact.
  Extended integral(const Rational& a, const std::optional<Rational>& b) {
    if (a < 0 || (b && *b < a)) throw Error(ErrorCode::InvalidArgument, "need 0 <= a <= b");
    Extended total(Rational(0));
    const Rational P = prefix_measure();
    if (prefix_ && a < P) {
      Rational hi = b ? min(*b, P) : P;
      total = total + dyadic_family_integral(Rational(pc_ * pow(pr_, plo_)), Rational(1 / pr_),
                                             std::nullopt, pn0_ - 1, a, hi);
    }
    if (!b) {
      if (floor_ > 0) return total + Extended::infinity();
      if (geo_) {
        if (2 * gr_ >= 1) return total + Extended::infinity();
      }
      Extended rest = rest_total();
      Rational from = max(a - P, Rational(0));
      return total + rest - Extended(rest_to(from));
    }
    if (*b > P) total = total + Extended(Rational(rest_to(*b - P) - rest_to(max(a - P, Rational(0)))));
    return total;
  }

  /// Sorted levels after materializing until the top level is certain.
  const std::map<Rational, Rational, std::greater<>>& levels() const { return levels_; }

  /// Materializes until the largest level of |f| outside the prefix is
  /// explicit; returns false when there is no such level.
  bool ensure_top() {
    while (upper() > (levels_.empty() ? Rational(0) : levels_.begin()->first)) materialize_next();
    return !levels_.empty();
  }

  /// Materializes symbolic cells until every remaining one is <= v.
  void materialize_above(const Rational& v) {
    while (upper() > v) materialize_next();
  }
  Rational upper() const {
    Rational u = 0;
    if (small_) u = sc_ * pow(sr_, slo_ - sn1_ + 1);
    if (geo_) u = max(u, Rational(gc_ * pow(gr_, gm_ + 1 - ghi_)));
    return u;
  }
  long geo_materialized_to() const { return gm_; }
  Rational geo_cell(long n) const { return gc_ * pow(gr_, n - ghi_); }
  Rational materialized_measure() const {
    Rational m = 0;
    for (const auto& [v, len] : levels_) m += len;
    return m;
  }
  /// Measure of {|f| > 0} when finite (no geometric infinity tail, floor 0).
  Rational positive_measure() const {
    Rational m = prefix_measure() + materialized_measure();
    if (small_) m += pow2(sn1_);
    return m;
  }

  /// f* as a step function, when it has a closed form.
  StepFunction rearranged() {
    if (small_)
      throw Error(ErrorCode::NonRepresentable,
                  "rearranged levels accumulate at a finite point (zero tail ratio < 1)");
    std::optional<ZeroTail> z;
    Rational t = 0;
    if (prefix_) {
      z = ZeroTail{Rational(pc_ * pow(pr_, plo_ - pn0_)), pr_, pn0_};
      t = pow2(pn0_);
    }
    if (geo_) {
      if (!levels_.empty()) materialize_above(std::prev(levels_.end())->first);
      if (t + materialized_measure() != pow2(gm_ + 1))
        throw Error(ErrorCode::NonRepresentable,
                    "geometric tail at infinity slides into a gap of the finite region");
    }
    std::vector<Rational> bp{t};
    std::vector<Rational> vals;
    for (const auto& [v, len] : levels_) {
      t += len;
      bp.push_back(t);
      vals.push_back(v);
    }
    InfinityTail inf = geo_ ? InfinityTail::Geometric(geo_cell(gm_), gr_, gm_)
                            : InfinityTail::Constant(floor_);
    return StepFunction(z, std::move(bp), std::move(vals), inf);
  }

 private:
  void add_level(const Rational& v, const Rational& len) {
    if (v <= floor_ || len == 0) return;
    levels_[v] += len;
  }

  void materialize_next() {
    Rational us = small_ ? Rational(sc_ * pow(sr_, slo_ - sn1_ + 1)) : Rational(0);
    Rational ug = geo_ ? Rational(gc_ * pow(gr_, gm_ + 1 - ghi_)) : Rational(0);
    if (small_ && us >= ug) {
      add_level(us, pow2(sn1_ - 1));
      --sn1_;
    } else if (geo_) {
      add_level(ug, pow2(gm_ + 1));
      ++gm_;
    } else {
      throw Error(ErrorCode::InvalidArgument, "nothing left to materialize");
    }
  }

  /// Integral of the non-prefix part of f* over [0, s].
  Rational rest_to(const Rational& s) {
    if (s <= 0) return 0;
    const Rational v = value_at(s + prefix_measure());
    Rational cum = 0, area = 0;
    for (const auto& [lv, len] : levels_) {
      if (lv <= v) break;
      cum += len;
      area += lv * len;
    }
    area += v * (s - cum);
    if (v == 0 && small_) area += small_integral();
    return area;
  }

  /// Total integral of the non-prefix part (floor 0); infinite if the
  /// geometric infinity tail diverges.
  Extended rest_total() {
    Rational area = 0;
    for (const auto& [lv, len] : levels_) area += lv * len;
    if (small_) area += small_integral();
    if (geo_) {
      Extended g = geometric_range_sum(Rational(2 * gr_), gm_ + 1, std::nullopt);
      if (g.is_infinite()) return Extended::infinity();
      area += gc_ * pow(gr_, -ghi_) * g.value();
    }
    return Extended(area);
  }

  Rational small_integral() const {
    // sum_{n < sn1} sc sr^(slo-n) 2^n
    Extended s = geometric_range_sum(Rational(2 / sr_), std::nullopt, sn1_ - 1);
    return sc_ * pow(sr_, slo_) * s.value();
  }

  std::map<Rational, Rational, std::greater<>> levels_;
  Rational floor_{0};
  bool prefix_ = false;
  Rational pc_, pr_;
  long plo_ = 0, pn0_ = 0;
  bool small_ = false;
  Rational sc_, sr_;
  long slo_ = 0, sn1_ = 0;
  bool geo_ = false;
  Rational gc_, gr_;
  long ghi_ = 0, gm_ = 0;
};

}  // namespace detail

/// f*, the nonincreasing right-continuous rearrangement of |f|.
inline StepFunction decreasing_rearrangement(const StepFunction& f) {
  return detail::Rearranger(f).rearranged();
}

/// f*(t) for t > 0, exact even when f* has no step-function closed form.
inline Rational rearranged_value(const StepFunction& f, const Rational& t) {
  return detail::Rearranger(f).value_at(t);
}

/// Integral of f* over [a, b].
inline Extended rearranged_integral(const StepFunction& f, const Rational& a,
                                    const std::optional<Rational>& b) {
  return detail::Rearranger(f).integral(a, b);
}

inline bool is_nonincreasing(const StepFunction& f) {
  // a tail c r^(lo-n) grows toward 0 iff c > 0 and r > 1, or c < 0 and r < 1
  if (const auto& z = f.zero_tail(); z && ((z->c > 0) != (z->r > 1))) return false;
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric && t.c < 0) return false;
  long lo = f.low_exponent(), hi = f.high_exponent();
  auto pts = f.dyadic_grid(lo, hi);
  pts.insert(pts.begin(), pow2(lo));
  pts.push_back(pow2(hi + 1));
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (f.at(pts[i]) > f.at(pts[i - 1])) return false;
  return true;
}

}  // namespace calkin
