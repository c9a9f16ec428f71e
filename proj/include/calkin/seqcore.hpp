#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "calkin/rational.hpp"

namespace calkin {

enum class IndexSet { Z, ZPlus, ZMinus };

inline const char* index_set_name(IndexSet s) {
  switch (s) {
    case IndexSet::Z: return "Z";
    case IndexSet::ZPlus: return "Z+";
    case IndexSet::ZMinus: return "Z-";
  }
  return "Z";
}

/// Closed-form tail of a two-sided sequence: zero, or c * r^d where d >= 1 is
/// the distance from the adjacent window end. r == 1 is a constant tail.
struct Tail {
  bool zero = true;
  Rational c{0};
  Rational r{1};

  static Tail Zero() { return {}; }
  static Tail Geometric(const Rational& c, const Rational& r) {
    if (r <= 0) throw Error(ErrorCode::InvalidArgument, "tail ratio must be positive");
    if (c == 0) return Zero();
    return Tail{false, c, r};
  }
  static Tail Constant(const Rational& c) { return Geometric(c, Rational(1)); }

  bool is_constant() const { return !zero && r == 1; }

  /// Value at distance d from the window end (d = 0 extrapolates onto the end).
  Rational at(long d) const { return zero ? Rational(0) : Rational(c * pow(r, d)); }

  friend bool operator==(const Tail& a, const Tail& b) {
    if (a.zero || b.zero) return a.zero == b.zero;
    return a.c == b.c && a.r == b.r;
  }
};

/// Element of S(Z): an explicit window lo..hi plus geometric tails on both sides.
class DyadicSequence {
 public:
  DyadicSequence() : DyadicSequence(0, {Rational(0)}) {}

  DyadicSequence(long lo, std::vector<Rational> values, Tail left = Tail::Zero(),
                 Tail right = Tail::Zero(), IndexSet index_set = IndexSet::Z)
      : lo_(lo), values_(std::move(values)), left_(std::move(left)), right_(std::move(right)),
        index_set_(index_set) {
    if (values_.empty()) throw Error(ErrorCode::InvalidArgument, "empty window");
    if (!right_.zero && right_.r > 1)
      throw Error(ErrorCode::InvalidArgument, "right tail ratio must be <= 1 (bounded at +inf)");
    check_index_set();
    canonicalize();
  }

  static DyadicSequence zero(IndexSet s = IndexSet::Z) {
    return DyadicSequence(0, {Rational(0)}, Tail::Zero(), Tail::Zero(), s);
  }
  /// e_n: one at index n.
  static DyadicSequence unit(long n) { return DyadicSequence(n, {Rational(1)}); }
  /// chi_Z scaled by c.
  static DyadicSequence constant(const Rational& c) {
    return DyadicSequence(0, {c}, Tail::Constant(c), Tail::Constant(c));
  }
  /// Indicator of {n : n < a}.
  static DyadicSequence indicator_below(long a) {
    return DyadicSequence(a - 1, {Rational(1)}, Tail::Constant(1), Tail::Zero());
  }
  /// Indicator of {n : n > a}.
  static DyadicSequence indicator_above(long a) {
    return DyadicSequence(a + 1, {Rational(1)}, Tail::Zero(), Tail::Constant(1));
  }

  long lo() const noexcept { return lo_; }
  long hi() const noexcept { return lo_ + static_cast<long>(values_.size()) - 1; }
  const std::vector<Rational>& values() const noexcept { return values_; }
  const Tail& left() const noexcept { return left_; }
  const Tail& right() const noexcept { return right_; }
  IndexSet index_set() const noexcept { return index_set_; }

  Rational at(long n) const {
    if (n < lo_) return left_.at(lo_ - n);
    if (n > hi()) return right_.at(n - hi());
    return values_[static_cast<std::size_t>(n - lo_)];
  }
  Rational operator[](long n) const { return at(n); }

  bool finitely_supported() const { return left_.zero && right_.zero; }

  /// Same sequence with the window widened to cover [new_lo, new_hi]; not canonical.
  DyadicSequence widened(long new_lo, long new_hi) const {
    new_lo = std::min(new_lo, lo_);
    new_hi = std::max(new_hi, hi());
    std::vector<Rational> v;
    v.reserve(static_cast<std::size_t>(new_hi - new_lo + 1));
    for (long n = new_lo; n <= new_hi; ++n) v.push_back(at(n));
    Tail l = left_, r = right_;
    if (!l.zero) l.c = l.c * pow(l.r, lo_ - new_lo);
    if (!r.zero) r.c = r.c * pow(r.r, new_hi - hi());
    DyadicSequence out;
    out.lo_ = new_lo;
    out.values_ = std::move(v);
    out.left_ = l;
    out.right_ = r;
    out.index_set_ = index_set_;
    return out;
  }

  DyadicSequence with_index_set(IndexSet s) const {
    DyadicSequence out = restricted(*this, s);
    return out;
  }

  /// Pointwise equality (window placement is irrelevant).
  friend bool operator==(const DyadicSequence& a, const DyadicSequence& b) {
    long L = std::min(a.lo_, b.lo_) - 2;
    long H = std::max(a.hi(), b.hi()) + 2;
    for (long n = L; n <= H; ++n)
      if (a.at(n) != b.at(n)) return false;
    return true;
  }
  friend bool operator!=(const DyadicSequence& a, const DyadicSequence& b) { return !(a == b); }

  static DyadicSequence restricted(const DyadicSequence& x, IndexSet s) {
    if (s == IndexSet::Z) {
      DyadicSequence out = x;
      out.index_set_ = s;
      return out;
    }
    if (s == IndexSet::ZPlus) {
      if (x.hi() < 0 && (x.right_.zero)) return zero(s);
      long hi = std::max(x.hi(), 0L);
      std::vector<Rational> v;
      for (long n = 0; n <= hi; ++n) v.push_back(x.at(n));
      Tail r = x.right_;
      if (!r.zero && hi > x.hi()) r.c = r.c * pow(r.r, hi - x.hi());
      return DyadicSequence(0, std::move(v), Tail::Zero(), r, s);
    }
    if (x.lo_ > 0 && x.left_.zero) return zero(s);
    long lo = std::min(x.lo_, 0L);
    std::vector<Rational> v;
    for (long n = lo; n <= 0; ++n) v.push_back(x.at(n));
    Tail l = x.left_;
    if (!l.zero && lo < x.lo_) l.c = l.c * pow(l.r, x.lo_ - lo);
    return DyadicSequence(lo, std::move(v), l, Tail::Zero(), s);
  }

 private:
  void check_index_set() const {
    if (index_set_ == IndexSet::ZPlus) {
      if (!left_.zero) throw Error(ErrorCode::InvalidArgument, "Z+ sequence with a left tail");
      for (long n = lo_; n < 0 && n <= hi(); ++n)
        if (at(n) != 0) throw Error(ErrorCode::InvalidArgument, "Z+ sequence nonzero below 0");
    } else if (index_set_ == IndexSet::ZMinus) {
      if (!right_.zero) throw Error(ErrorCode::InvalidArgument, "Z- sequence with a right tail");
      for (long n = std::max(lo_, 1L); n <= hi(); ++n)
        if (at(n) != 0) throw Error(ErrorCode::InvalidArgument, "Z- sequence nonzero above 0");
    }
  }

  void canonicalize() {
    for (auto& v : values_) v.canonicalize();
    // Absorb window ends that continue the adjacent tail pattern.
    std::size_t first = 0;
    while (first + 1 < values_.size() && values_[first] == left_.at(0)) {
      if (!left_.zero) left_.c = left_.c / left_.r;
      ++first;
    }
    std::size_t last = values_.size() - 1;
    while (last > first && values_[last] == right_.at(0)) {
      if (!right_.zero) right_.c = right_.c / right_.r;
      --last;
    }
    if (first > 0 || last + 1 < values_.size()) {
      values_ = std::vector<Rational>(values_.begin() + static_cast<long>(first),
                                      values_.begin() + static_cast<long>(last) + 1);
      lo_ += static_cast<long>(first);
    }
  }

  long lo_ = 0;
  std::vector<Rational> values_;
  Tail left_;
  Tail right_;
  IndexSet index_set_ = IndexSet::Z;
};

inline std::ostream& operator<<(std::ostream& os, const DyadicSequence& x) {
  auto tail = [&](const Tail& t) {
    if (t.zero) return std::string("0");
    return to_string(t.c) + "*" + to_string(t.r) + "^d";
  };
  os << "[" << tail(x.left()) << " | lo=" << x.lo() << ":";
  for (const auto& v : x.values()) os << " " << to_string(v);
  os << " | " << tail(x.right()) << "]";
  return os;
}

/// Pointwise absolute value.
inline DyadicSequence abs(const DyadicSequence& x) {
  std::vector<Rational> v;
  for (const auto& q : x.values()) v.push_back(abs(q));
  Tail l = x.left(), r = x.right();
  if (!l.zero) l.c = abs(l.c);
  if (!r.zero) r.c = abs(r.c);
  return DyadicSequence(x.lo(), std::move(v), l, r, x.index_set());
}

/// o_n(x) = sup_{k >= n} |x_k|, in closed form.
inline DyadicSequence ordering_numbers(const DyadicSequence& x) {
  const DyadicSequence ax = abs(x);
  const long lo = ax.lo(), hi = ax.hi();
  // Right tail of |x| has r <= 1, so it is its own suffix supremum.
  Rational running = ax.right().zero ? Rational(0) : ax.right().at(1);
  std::vector<Rational> window(ax.values().size());
  for (long n = hi; n >= lo; --n) {
    running = max(running, ax.at(n));
    window[static_cast<std::size_t>(n - lo)] = running;
  }
  const Rational top = window.front();
  const Tail& l = ax.left();
  if (l.zero) {
    return DyadicSequence(lo, std::move(window), top == 0 ? Tail::Zero() : Tail::Constant(top),
                          ax.right(), x.index_set());
  }
  if (l.r <= 1) {
    // left values shrink away from the window: the largest is at lo-1
    Rational m = max(l.at(1), top);
    return DyadicSequence(lo, std::move(window), Tail::Constant(m), ax.right(), x.index_set());
  }
  // r > 1: the tail eventually dominates; pad with the plateau until it does.
  std::vector<Rational> prefix;
  long d = 1;
  while (l.at(d) < top) {
    prefix.push_back(top);
    ++d;
  }
  long new_lo = lo - static_cast<long>(prefix.size());
  std::reverse(prefix.begin(), prefix.end());
  prefix.insert(prefix.end(), window.begin(), window.end());
  Tail nl = Tail::Geometric(l.at(static_cast<long>(prefix.size()) - static_cast<long>(window.size())),
                            l.r);
  return DyadicSequence(new_lo, std::move(prefix), nl, ax.right(), x.index_set());
}

/// S_+^k x. On one-sided index sets only k >= 0 is allowed, with zero fill on
/// Z+ and truncation on Z-.
inline DyadicSequence shift(const DyadicSequence& x, long k) {
  if (x.index_set() != IndexSet::Z && k < 0)
    throw Error(ErrorCode::InvalidArgument, "negative shift on a one-sided sequence");
  DyadicSequence moved(x.lo() + k, x.values(), x.left(), x.right(), IndexSet::Z);
  return DyadicSequence::restricted(moved, x.index_set());
}

inline DyadicSequence scale(const Rational& alpha, const DyadicSequence& x) {
  if (alpha == 0) return DyadicSequence::zero(x.index_set());
  std::vector<Rational> v;
  for (const auto& q : x.values()) v.push_back(alpha * q);
  Tail l = x.left(), r = x.right();
  if (!l.zero) l.c *= alpha;
  if (!r.zero) r.c *= alpha;
  return DyadicSequence(x.lo(), std::move(v), l, r, x.index_set());
}

namespace detail {

inline Tail add_tails(const Tail& a, const Tail& b) {
  if (a.zero) return b;
  if (b.zero) return a;
  if (a.r != b.r)
    throw Error(ErrorCode::IncompatibleTails,
                "tails with ratios " + to_string(a.r) + " and " + to_string(b.r));
  return Tail::Geometric(a.c + b.c, a.r);
}

}  // namespace detail

inline constexpr long kDefaultAddDepth = 128;

/// Pointwise sum. Windows are aligned by materializing geometric tails; more
/// than `depth` materialized tail entries is reported as IncompatibleTails.
inline DyadicSequence add(const DyadicSequence& x, const DyadicSequence& y,
                          long depth = kDefaultAddDepth) {
  const long L = std::min(x.lo(), y.lo());
  const long H = std::max(x.hi(), y.hi());
  auto check = [&](const DyadicSequence& s) {
    if ((!s.left().zero && s.lo() - L > depth) || (!s.right().zero && H - s.hi() > depth))
      throw Error(ErrorCode::IncompatibleTails, "window extension exceeds depth");
  };
  check(x);
  check(y);
  const DyadicSequence xw = x.widened(L, H), yw = y.widened(L, H);
  std::vector<Rational> v;
  for (long n = L; n <= H; ++n) v.push_back(xw.at(n) + yw.at(n));
  IndexSet s = x.index_set() == y.index_set() ? x.index_set() : IndexSet::Z;
  return DyadicSequence(L, std::move(v), detail::add_tails(xw.left(), yw.left()),
                        detail::add_tails(xw.right(), yw.right()), s);
}

inline DyadicSequence operator+(const DyadicSequence& x, const DyadicSequence& y) { return add(x, y); }
inline DyadicSequence operator-(const DyadicSequence& x, const DyadicSequence& y) {
  return add(x, scale(Rational(-1), y));
}

/// (1/2) S_+ x.
inline DyadicSequence half_shift(const DyadicSequence& x) {
  return scale(Rational(1, 2), shift(x, 1));
}

namespace detail {

/// Decides sum_i c_i r_i^m >= 0 for every integer m >= 1 (all r_i > 0).
inline bool geometric_sum_nonneg(std::vector<std::pair<Rational, Rational>> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::pair<Rational, Rational>> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().second == t.second)
      merged.back().first += t.first;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const auto& t) { return t.first == 0; });
  if (merged.empty()) return true;
  auto value = [&](long m) {
    Rational s = 0;
    for (const auto& [c, r] : merged) s += c * pow(r, m);
    return s;
  };
  if (merged.front().first < 0) return false;
  const Rational& c1 = merged.front().first;
  const Rational& r1 = merged.front().second;
  long m = 1;
  for (;; ++m) {
    Rational rest = 0;
    for (std::size_t i = 1; i < merged.size(); ++i)
      rest += abs(merged[i].first) * pow(merged[i].second, m);
    if (c1 * pow(r1, m) >= rest) break;
    if (value(m) < 0) return false;
    if (m > 100000) throw Error(ErrorCode::NonClosedForm, "tail dominance not reached");
  }
  return true;
}

}  // namespace detail

/// Exact decision of x_n <= y_n for every n in Z.
inline bool pointwise_le(const DyadicSequence& x, const DyadicSequence& y) {
  const long L = std::min(x.lo(), y.lo());
  const long H = std::max(x.hi(), y.hi());
  for (long n = L; n <= H; ++n)
    if (x.at(n) > y.at(n)) return false;
  // Tails as geometric sums in the distance m >= 1 beyond [L, H].
  std::vector<std::pair<Rational, Rational>> left, right;
  auto push = [](std::vector<std::pair<Rational, Rational>>& v, const Tail& t, long offset,
                 int sgn) {
    if (t.zero) return;
    v.emplace_back(Rational(sgn * t.c * pow(t.r, offset)), t.r);
  };
  push(left, y.left(), y.lo() - L, 1);
  push(left, x.left(), x.lo() - L, -1);
  push(right, y.right(), H - y.hi(), 1);
  push(right, x.right(), H - x.hi(), -1);
  return detail::geometric_sum_nonneg(left) && detail::geometric_sum_nonneg(right);
}

namespace detail {

/// Distance from the window after which c1 r1^d - c2 r2^d keeps the sign it
/// has as d -> inf (a difference of two exponentials changes sign at most once).
inline long tail_dominance_depth(const Tail& a, const Tail& b) {
  auto diff = [&](long d) -> Rational { return a.at(d) - b.at(d); };
  int eventual;
  if (a.zero && b.zero) return 1;
  if (a.zero) eventual = -sgn(b.c);
  else if (b.zero) eventual = sgn(a.c);
  else if (a.r == b.r) eventual = sgn(a.c - b.c);
  else if (a.r > b.r) eventual = sgn(a.c);
  else eventual = -sgn(b.c);
  long d = 1;
  while (sgn(diff(d)) != eventual && sgn(diff(d)) != 0) {
    if (++d > 1000000) throw Error(ErrorCode::NonClosedForm, "tail dominance not reached");
  }
  // past the single crossing the sign is final
  while (sgn(diff(d)) == 0 && eventual != 0) ++d;
  return d;
}

}  // namespace detail

/// Pointwise maximum, in closed form.
inline DyadicSequence pointwise_max(const DyadicSequence& x, const DyadicSequence& y) {
  long L = std::min(x.lo(), y.lo()), H = std::max(x.hi(), y.hi());
  DyadicSequence xw = x.widened(L, H), yw = y.widened(L, H);
  long dl = detail::tail_dominance_depth(xw.left(), yw.left());
  long dr = detail::tail_dominance_depth(xw.right(), yw.right());
  L -= dl;
  H += dr;
  xw = x.widened(L, H);
  yw = y.widened(L, H);
  std::vector<Rational> v;
  for (long n = L; n <= H; ++n) v.push_back(max(xw.at(n), yw.at(n)));
  // beyond the extended window the dominant tail wins at every distance
  Tail left = xw.left().at(1) >= yw.left().at(1) ? xw.left() : yw.left();
  Tail right = xw.right().at(1) >= yw.right().at(1) ? xw.right() : yw.right();
  IndexSet s = x.index_set() == y.index_set() ? x.index_set() : IndexSet::Z;
  return DyadicSequence(L, std::move(v), left, right, s);
}

/// x_{n+1} <= x_n for every n.
inline bool is_nonincreasing(const DyadicSequence& x) {
  DyadicSequence full = DyadicSequence::restricted(x, IndexSet::Z);
  return pointwise_le(shift(full, -1), full);
}

/// Solves a = b - (1/2) S_+ b with b_n = sum_{j <= n} 2^{j-n} a_j.
inline DyadicSequence solve_cohomology(const DyadicSequence& a) {
  if (!a.left().zero)
    throw Error(ErrorCode::InvalidArgument, "cohomology solver needs a zero left tail");
  const long lo = a.lo(), hi = a.hi();
  std::vector<Rational> b;
  Rational prev = 0;
  for (long n = lo; n <= hi; ++n) {
    prev = a.at(n) + prev / 2;
    b.push_back(prev);
  }
  const Rational bh = prev;
  Tail right;
  if (a.right().zero) {
    right = Tail::Geometric(bh, Rational(1, 2));
  } else {
    const Rational& c = a.right().c;
    const Rational& r = a.right().r;
    if (r == Rational(1, 2))
      throw Error(ErrorCode::NonClosedForm, "right tail ratio 1/2 yields a d*2^-d term");
    // b_{hi+d} = (b_hi - B) 2^-d + B r^d
    Rational B = 2 * r * c / (2 * r - 1);
    if (bh != B)
      throw Error(ErrorCode::NonClosedForm, "solution tail mixes ratios 1/2 and " + to_string(r));
    right = Tail::Geometric(B, r);
  }
  return DyadicSequence(lo, std::move(b), Tail::Zero(), right, IndexSet::Z);
}

}  // namespace calkin
