#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "calkin/opmodel.hpp"
#include "calkin/stepfn.hpp"

namespace calkin {

/// Running integral G(t) = int_0^t mu for a nonincreasing step function made
/// of finitely many pieces and a constant tail.
class CumulativeIntegral {
 public:
  explicit CumulativeIntegral(const StepFunction& mu) {
    if (mu.zero_tail()) {
      if (mu.zero_tail()->r >= 2)
        throw Error(ErrorCode::DivergentIntegral, "singular value function is not integrable at 0");
      throw Error(ErrorCode::NonClosedForm, "geometric behavior near 0 is not supported by the checker");
    }
    if (mu.infinity_tail().geometric)
      throw Error(ErrorCode::NonClosedForm, "geometric tail at infinity is not supported by the checker");
    bp_ = mu.breakpoints();
    vals_ = mu.values();
    v_inf_ = mu.v_inf();
    if (bp_.empty()) bp_.push_back(Rational(0));
    // pieces may start after 0 only with an implicit zero value there
    if (bp_.front() != 0) {
      bp_.insert(bp_.begin(), Rational(0));
      vals_.insert(vals_.begin(), Rational(0));
    }
    cum_.push_back(Rational(0));
    for (std::size_t i = 0; i < vals_.size(); ++i)
      cum_.push_back(cum_.back() + vals_[i] * (bp_[i + 1] - bp_[i]));
  }

  Rational operator()(const Rational& t) const {
    if (t >= bp_.back()) return cum_.back() + v_inf_ * (t - bp_.back());
    auto it = std::upper_bound(bp_.begin(), bp_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - bp_.begin()) - 1;
    return cum_[i] + vals_[i] * (t - bp_[i]);
  }

  const std::vector<Rational>& breakpoints() const { return bp_; }
  const Rational& v_inf() const { return v_inf_; }
  const Rational& end() const { return bp_.back(); }

 private:
  std::vector<Rational> bp_;
  std::vector<Rational> vals_;
  std::vector<Rational> cum_;
  Rational v_inf_{0};
};

struct MajorizationVerdict {
  bool holds = true;
  /// (a, b) with int_{lambda a}^b mu(Y) > int_a^b mu(X), when the check fails.
  std::optional<std::pair<Rational, Rational>> witness;
  /// Smallest value of int_a^b mu(X) - int_{lambda a}^b mu(Y) over the critical set.
  Rational margin{0};
  std::size_t candidates = 0;
};

/// Decides int_{lambda a}^b mu_y <= int_a^b mu_x for all 0 <= lambda a <= b.
///
/// F(a, b) = [G_x(b) - G_y(b)] - [G_x(a) - G_y(lambda a)] is affine on every cell
/// of the arrangement cut out by a = const (kinks of G_x and of G_y(lambda .)),
/// b = const (kinks of G_x and G_y) and the boundary b = lambda a. Along the
/// unbounded directions F has slope v_x - v_y (b alone) or (lambda - 1) v_x
/// (both together), so once v_y <= v_x the minimum sits at a vertex.
inline MajorizationVerdict uniformly_majorized_mu(const StepFunction& mu_y, const StepFunction& mu_x,
                                                  long lambda, const Rational& tolerance = 0) {
  if (lambda < 1) throw Error(ErrorCode::InvalidArgument, "lambda must be a positive integer");
  const CumulativeIntegral Gx(mu_x), Gy(mu_y);
  const Rational lam(lambda);
  auto F = [&](const Rational& a, const Rational& b) -> Rational {
    return (Gx(b) - Gx(a)) - (Gy(b) - Gy(lam * a));
  };

  MajorizationVerdict out;
  if (Gy.v_inf() > Gx.v_inf()) {
    // F(0, b) eventually decreases linearly
    Rational b0 = max(Gx.end(), Gy.end());
    Rational f0 = F(Rational(0), b0);
    Rational b = f0 < 0 ? b0 : Rational(b0 + (f0 + 1) / (Gy.v_inf() - Gx.v_inf()));
    out.holds = false;
    out.witness = std::pair{Rational(0), b};
    out.margin = F(Rational(0), b);
    return out;
  }

  std::set<Rational> bx(Gx.breakpoints().begin(), Gx.breakpoints().end());
  std::set<Rational> kinks_b = bx;
  for (const auto& t : Gy.breakpoints()) kinks_b.insert(t);
  std::set<Rational> A{Rational(0)};
  for (const auto& t : bx) A.insert(t);
  for (const auto& t : Gy.breakpoints()) A.insert(t / lam);
  for (const auto& t : kinks_b) A.insert(t / lam);
  std::set<Rational> B = kinks_b;
  for (const auto& a : A) B.insert(lam * a);

  bool first = true;
  for (const auto& a : A) {
    const Rational la = lam * a;
    const Rational ka = Gx(a) - Gy(la);
    for (auto it = B.lower_bound(la); it != B.end(); ++it) {
      const Rational& b = *it;
      Rational f = (Gx(b) - Gy(b)) - ka;
      ++out.candidates;
      if (first || f < out.margin) {
        out.margin = f;
        first = false;
        if (f < -tolerance) out.witness = std::pair{a, b};
      }
    }
  }
  out.holds = out.margin >= -tolerance;
  if (out.holds) out.witness.reset();
  return out;
}

inline MajorizationVerdict uniformly_majorized(const StepFunction& y, const StepFunction& x, long lambda,
                                               const Rational& tolerance = 0) {
  return uniformly_majorized_mu(decreasing_rearrangement(y), decreasing_rearrangement(x), lambda, tolerance);
}

inline MajorizationVerdict uniformly_majorized(const Operator& y, const Operator& x, long lambda,
                                               const Rational& tolerance = 0) {
  return uniformly_majorized_mu(singular_value_function(y), singular_value_function(x), lambda, tolerance);
}

struct SeriesMajorizationReport {
  bool holds = true;
  MajorizationVerdict verdict;
  StepFunction lhs_mu;
  StepFunction rhs;
};

/// Finite form of the series lemma: sum_k X_k is uniformly majorized, with
/// lambda = 2, by 2 sum_k sigma_{2^k} mu(X_k).
inline SeriesMajorizationReport series_majorization_check(const std::vector<Operator>& parts, long K = -1,
                                                          const Rational& tolerance = 0) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "no parts");
  const std::size_t n = K < 0 ? parts.size() : std::min<std::size_t>(parts.size(), static_cast<std::size_t>(K));
  Operator sum = parts[0];
  StepFunction rhs = dilate(singular_value_function(parts[0]), Rational(2));
  for (std::size_t k = 1; k < n; ++k) {
    sum = sum + parts[k];
    rhs = rhs + dilate(singular_value_function(parts[k]), pow2(static_cast<long>(k) + 1));
  }
  rhs = scale(Rational(2), rhs);
  SeriesMajorizationReport rep;
  rep.lhs_mu = singular_value_function(sum);
  rep.rhs = decreasing_rearrangement(rhs);
  rep.verdict = uniformly_majorized_mu(rep.lhs_mu, rep.rhs, 2, tolerance);
  rep.holds = rep.verdict.holds;
  return rep;
}

}  // namespace calkin
