#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"

namespace calkin {

/// Dx = sum_n x_n chi_[2^n, 2^(n+1)).
inline StepFunction pietsch_D(const DyadicSequence& x) {
  const long lo = x.lo(), hi = x.hi();
  std::optional<ZeroTail> zero;
  std::vector<Rational> bp;
  std::vector<Rational> vals;
  if (x.left().zero) {
    bp.push_back(Rational(0));
    vals.push_back(Rational(0));
  } else {
    zero = ZeroTail{x.left().c, x.left().r, lo};
  }
  for (long n = lo; n <= hi; ++n) {
    bp.push_back(pow2(n));
    vals.push_back(x.at(n));
  }
  bp.push_back(pow2(hi + 1));
  InfinityTail inf;
  const Tail& r = x.right();
  if (r.zero)
    inf = InfinityTail::Constant(0);
  else if (r.r == 1)
    inf = InfinityTail::Constant(r.c);
  else
    inf = InfinityTail::Geometric(r.c, r.r, hi);
  return StepFunction(zero, std::move(bp), std::move(vals), inf);
}

namespace detail {

/// Left end and left tail shared by Phi and Phi_av: both equal f* on the
/// prefix cells, and the top level of |f| near 0 otherwise.
inline std::optional<std::pair<long, Tail>> left_frame(Rearranger& R) {
  if (R.has_prefix()) {
    long L = R.prefix_end();
    return std::pair{L, Tail::Geometric(R.prefix_cell(L), R.prefix_cell(L - 1) / R.prefix_cell(L))};
  }
  if (!R.ensure_top()) return std::nullopt;
  const auto& [M, m] = *R.levels().begin();
  return std::pair{floor_log2(m) - 1, Tail::Constant(M)};
}

}  // namespace detail

/// Phi f = { f*(2^n) }.
inline DyadicSequence phi_sample(const StepFunction& f) {
  detail::Rearranger R(f);
  auto left = detail::left_frame(R);
  if (!left) {
    // f* is the constant floor
    return R.floor() == 0 ? DyadicSequence::zero() : DyadicSequence::constant(R.floor());
  }
  long L = left->first;
  Tail ltail = left->second;
  long H;
  Tail rtail;
  if (R.geometric_infinity()) {
    // past 2^(hi+2) the tail cells dominate everything from the finite region
    const InfinityTail& t = f.infinity_tail();
    H = t.hi + 1;
    rtail = Tail::Geometric(Rational(abs(t.c) * pow(t.r, H - t.hi)), t.r);
  } else if (R.floor() > 0) {
    Rational T = R.prefix_measure() + R.materialized_measure();
    H = T == 0 ? L : ceil_log2(T);
    rtail = Tail::Constant(R.floor());
  } else {
    H = ceil_log2(R.positive_measure());
    rtail = Tail::Zero();
  }
  const long lo = std::min(L, H), hi = std::max(L, H);
  std::vector<Rational> v;
  for (long n = lo; n <= hi; ++n) v.push_back(R.value_at(pow2(n)));
  // tails were anchored at L and H; re-anchor them at the window ends
  if (lo < L && !ltail.zero) ltail.c = ltail.c * pow(ltail.r, L - lo);
  if (hi > H && !rtail.zero) rtail.c = rtail.c * pow(rtail.r, hi - H);
  return DyadicSequence(lo, std::move(v), ltail, rtail);
}

/// Phi_av f = { 2^-n * integral of f* over [2^n, 2^(n+1)) }.
inline DyadicSequence phi_av(const StepFunction& f) {
  detail::Rearranger R(f);
  auto left = detail::left_frame(R);
  if (!left) return R.floor() == 0 ? DyadicSequence::zero() : DyadicSequence::constant(R.floor());
  long L = left->first;
  Tail ltail = left->second;
  long H;
  Tail rtail;
  if (R.geometric_infinity()) {
    if (R.accumulating())
      throw Error(ErrorCode::NonClosedForm, "cell averages mix both geometric tails");
    if (!R.levels().empty()) R.materialize_above(std::prev(R.levels().end())->first);
    const long m = R.geo_materialized_to();
    if (R.prefix_measure() + R.materialized_measure() != pow2(m + 1))
      throw Error(ErrorCode::NonClosedForm,
                  "geometric tail at infinity is not aligned with dyadic cells of f*");
    H = m + 1;
    rtail = Tail::Geometric(R.geo_cell(H), f.infinity_tail().r);
  } else if (R.floor() > 0) {
    Rational T = R.prefix_measure() + R.materialized_measure();
    H = T == 0 ? L : ceil_log2(T);
    rtail = Tail::Constant(R.floor());
  } else {
    H = ceil_log2(R.positive_measure());
    rtail = Tail::Zero();
  }
  const long lo = std::min(L, H), hi = std::max(L, H);
  std::vector<Rational> v;
  for (long n = lo; n <= hi; ++n)
    v.push_back(R.integral(pow2(n), pow2(n + 1)).value() / pow2(n));
  if (lo < L && !ltail.zero) ltail.c = ltail.c * pow(ltail.r, L - lo);
  if (hi > H && !rtail.zero) rtail.c = rtail.c * pow(rtail.r, hi - H);
  return DyadicSequence(lo, std::move(v), ltail, rtail);
}

/// a_k = 2^-k * integral of f over [2^k, 2^(k+1)) (f itself, not f*).
inline DyadicSequence cell_averages(const StepFunction& f) {
  long L, H;
  Tail left, right;
  if (const auto& z = f.zero_tail()) {
    L = z->lo;
    left = Tail::Geometric(z->c, z->r);
  } else {
    const Rational first = f.breakpoints().size() > 1 ? f.breakpoints()[1] : Rational(1);
    L = floor_log2(first) - 1;
    left = Tail::Constant(f.values().empty() ? f.v_inf() : f.values().front());
  }
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) {
    H = t.hi;
    right = Tail::Geometric(t.c, t.r);
  } else {
    H = f.tN() > 0 ? ceil_log2(f.tN()) - 1 : L;
    right = Tail::Constant(t.v);
  }
  const long lo = std::min(L, H), hi = std::max(L, H);
  std::vector<Rational> v;
  for (long n = lo; n <= hi; ++n) v.push_back(integrate(f, pow2(n), pow2(n + 1)).value() / pow2(n));
  if (lo < L && !left.zero) left.c = left.c * pow(left.r, L - lo);
  if (hi > H && !right.zero) right.c = right.c * pow(right.r, hi - H);
  return DyadicSequence(lo, std::move(v), left, right);
}

namespace detail {

/// ess sup of |f| over [t, inf).
inline Rational sup_from(const StepFunction& f, const Rational& t) {
  Rational s = 0;
  const auto& bp = f.breakpoints();
  for (std::size_t i = 0; i < f.values().size(); ++i)
    if (bp[i + 1] > t) s = max(s, abs(f.values()[i]));
  if (const auto& z = f.zero_tail(); z && t < pow2(z->lo)) {
    if (z->r > 1)
      s = max(s, abs(z->cell(floor_log2(t))));
    else
      s = max(s, abs(z->cell(z->lo - 1)));
  }
  const InfinityTail& it = f.infinity_tail();
  if (it.geometric)
    s = max(s, abs(it.cell(std::max(it.hi + 1, floor_log2(max(t, f.tN()))))));
  else
    s = max(s, abs(it.v));
  return s;
}

}  // namespace detail

/// s_m = ess sup of |f| over [2^m, inf).
inline DyadicSequence tail_sup(const StepFunction& f) {
  long L, H;
  Tail right;
  std::optional<Tail> growing;
  if (const auto& z = f.zero_tail()) {
    L = z->lo - 1;
    if (z->r > 1) {
      // near 0 the cell at 2^m itself is the supremum once it beats the rest
      const Rational rest = detail::sup_from(f, pow2(z->lo));
      while (abs(z->cell(L)) < rest) --L;
      growing = Tail::Geometric(abs(z->cell(L)), z->r);
    }
  } else {
    const Rational first = f.breakpoints().size() > 1 ? f.breakpoints()[1] : Rational(1);
    L = floor_log2(first) - 1;
  }
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) {
    H = t.hi;
    right = Tail::Geometric(abs(t.c), t.r);
  } else {
    H = f.tN() > 0 ? ceil_log2(f.tN()) : L;
    right = Tail::Constant(abs(t.v));
  }
  const long lo = std::min(L, H), hi = std::max(L, H);
  std::vector<Rational> v;
  for (long n = lo; n <= hi; ++n) v.push_back(detail::sup_from(f, pow2(n)));
  Tail left = Tail::Constant(v.front());
  if (growing) {
    left = *growing;
    if (lo < L) left.c = left.c * pow(left.r, L - lo);
  }
  if (hi > H && !right.zero) right.c = right.c * pow(right.r, hi - H);
  return DyadicSequence(lo, std::move(v), left, right);
}

/// f <= g almost everywhere, decided exactly: finitely many comparisons on a
/// window and the tails compared as geometric sequences of cell values.
inline bool pointwise_le(const StepFunction& f, const StepFunction& g) {
  const long L = std::min(f.low_exponent(), g.low_exponent());
  const long H = std::max(f.high_exponent(), g.high_exponent());
  std::set<Rational> pts{pow2(L)};
  for (const auto* h : {&f, &g})
    for (const auto& p : h->dyadic_grid(L, H))
      if (p >= pow2(L) && p < pow2(H)) pts.insert(p);
  for (const auto& p : pts)
    if (f.at(p) > g.at(p)) return false;
  auto left = [&](const StepFunction& h) {
    if (const auto& z = h.zero_tail()) return Tail::Geometric(z->cell(L), z->r);
    return Tail::Constant(h.at(pow2(L)));
  };
  auto right = [&](const StepFunction& h) {
    const InfinityTail& t = h.infinity_tail();
    if (t.geometric) return Tail::Geometric(t.cell(H - 1), t.r);
    return Tail::Constant(t.v);
  };
  return pointwise_le(DyadicSequence(L, {Rational(0)}, left(f)), DyadicSequence(L, {Rational(0)}, left(g))) &&
         pointwise_le(DyadicSequence(H - 1, {Rational(0)}, Tail::Zero(), right(f)),
                      DyadicSequence(H - 1, {Rational(0)}, Tail::Zero(), right(g)));
}

}  // namespace calkin
