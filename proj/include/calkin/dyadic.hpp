#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calkin/opmodel.hpp"
#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"
#include "calkin/transfer.hpp"

namespace calkin {

struct DyadicPart {
  long k = 0;
  Operator op;
};

/// Symbolic family of parts for a function subject: part k is g restricted
/// to the dyadic cell [2^(k - shift), 2^(k - shift + 1)).
struct CellFamily {
  StepFunction g;
  long shift = 0;
};

/// X = sum_k X_k with tau(s(X_k)) <= 2^k.
struct DyadicRep {
  Operator subject;
  std::vector<DyadicPart> parts;       // block subjects, sorted by k, nonzero only
  std::vector<CellFamily> families;    // function subjects
  DyadicSequence residuals;            // ||X - sum_{j<=n} X_j||
  DyadicSequence coefficients;         // 2^-k Re tau(X_k)
  DyadicSequence coefficients_imag;    // 2^-k Im tau(X_k)
  bool exact = true;
  /// False when residuals only hold an upper bound (sums of function reps).
  bool residuals_exact = true;

  bool commutative() const { return subject.is_commutative(); }
};

namespace detail {

inline bool is_zero_block_operator(const Operator& x, double eps) {
  for (const auto& m : x.matrices()) {
    if (m.is_exact()) {
      for (const auto& row : m.exact())
        for (const auto& e : row)
          if (!e.is_zero()) return false;
    } else if (m.numeric().cwiseAbs().maxCoeff() >= eps) {
      return false;
    }
  }
  return true;
}

inline Rational norm_value(const Operator& x, bool& exact) {
  if (!x.is_exact()) exact = false;
  if (x.is_commutative()) return uniform_norm(x);
  Rational top = 0;
  for (const auto& s : block_svds(x)) {
    if (!s.exact) exact = false;
    for (const auto& v : s.values) top = max(top, v);
  }
  return top;
}

/// Residual sequence of explicit block parts sorted by k.
inline DyadicSequence block_residuals(const Operator& subject, const std::vector<DyadicPart>& parts,
                                      bool& exact) {
  const Rational top = norm_value(subject, exact);
  if (parts.empty()) return top == 0 ? DyadicSequence::zero() : DyadicSequence::constant(top);
  const long lo = parts.front().k, hi = parts.back().k;
  std::vector<Rational> v;
  Operator rest = subject;
  std::size_t i = 0;
  for (long n = lo; n <= hi; ++n) {
    while (i < parts.size() && parts[i].k == n) rest = rest - parts[i++].op;
    v.push_back(norm_value(rest, exact));
  }
  const Rational last = v.back();
  // before the first part nothing is removed; after the last nothing changes
  v.insert(v.begin(), top);
  return DyadicSequence(lo - 1, std::move(v), Tail::Constant(top), Tail::Constant(last));
}

inline void block_coefficients(const std::vector<DyadicPart>& parts, DyadicSequence& re,
                               DyadicSequence& im, bool& exact) {
  if (parts.empty()) {
    re = im = DyadicSequence::zero();
    return;
  }
  const long lo = parts.front().k, hi = parts.back().k;
  std::vector<Rational> a(static_cast<std::size_t>(hi - lo + 1)), b(a.size());
  for (const auto& p : parts) {
    TraceValue t = trace(p.op);
    if (!t.exact) exact = false;
    a[static_cast<std::size_t>(p.k - lo)] += t.re.value() / pow2(p.k);
    b[static_cast<std::size_t>(p.k - lo)] += t.im / pow2(p.k);
  }
  re = DyadicSequence(lo, std::move(a));
  im = DyadicSequence(lo, std::move(b));
}

inline DyadicSequence family_coefficients(const std::vector<CellFamily>& fams) {
  DyadicSequence a = DyadicSequence::zero();
  for (const auto& c : fams)
    a = a + scale(1 / pow2(c.shift), shift(cell_averages(c.g), c.shift));
  return a;
}

/// Tail norms of a single family; several families only get the bound
/// sum of the individual tails.
inline DyadicSequence family_residuals(const std::vector<CellFamily>& fams) {
  DyadicSequence r = DyadicSequence::zero();
  for (const auto& c : fams) r = r + shift(tail_sup(c.g), c.shift - 1);
  return r;
}

}  // namespace detail

/// Builds a representation of a block subject from explicit parts; parts
/// sharing an index are summed and zero parts dropped.
inline DyadicRep rep_from_parts(const Operator& subject, std::vector<DyadicPart> parts,
                                double eps = kDefaultEpsilon) {
  if (subject.is_commutative())
    throw Error(ErrorCode::InvalidArgument, "explicit parts need a block subject");
  std::map<long, Operator> by_k;
  for (auto& p : parts) {
    auto it = by_k.find(p.k);
    if (it == by_k.end())
      by_k.emplace(p.k, std::move(p.op));
    else
      it->second = it->second + p.op;
  }
  DyadicRep rep;
  rep.subject = subject;
  for (auto& [k, op] : by_k)
    if (!detail::is_zero_block_operator(op, eps)) rep.parts.push_back({k, std::move(op)});
  rep.exact = subject.is_exact();
  rep.residuals = detail::block_residuals(subject, rep.parts, rep.exact);
  detail::block_coefficients(rep.parts, rep.coefficients, rep.coefficients_imag, rep.exact);
  return rep;
}

/// Representation of a function subject from cell families.
inline DyadicRep rep_from_families(const StepFunction& subject, std::vector<CellFamily> fams) {
  DyadicRep rep;
  rep.subject = Operator::commutative(subject);
  rep.families = std::move(fams);
  rep.coefficients = detail::family_coefficients(rep.families);
  rep.coefficients_imag = DyadicSequence::zero();
  rep.residuals = detail::family_residuals(rep.families);
  rep.residuals_exact = rep.families.size() <= 1;
  return rep;
}

/// Canonical representation. Block subjects use the strict spectral
/// projections P_k = E^{|X|}(mu(2^k), inf) and X_k = X (P_{k-1} - P_{k-2});
/// function subjects are cut along the dyadic cells of f.
inline DyadicRep decompose(const Operator& x, double eps = kDefaultEpsilon) {
  if (x.is_commutative()) {
    if (x.function() == StepFunction()) return rep_from_families(x.function(), {});
    return rep_from_families(x.function(), {{x.function(), 0}});
  }
  const std::vector<BlockSvd> svds = block_svds(x, eps);
  StepFunction mu = detail::mu_from_svds(x, svds);
  std::vector<DyadicPart> parts;
  if (!mu.values().empty()) {
    const Rational top_len = mu.breakpoints()[1] - mu.breakpoints()[0];
    const long k_lo = floor_log2(top_len);
    const long k_hi = ceil_log2(mu.breakpoints().back()) + 2;
    auto P = [&](long k) { return spectral_projection(x, svds, mu.at(pow2(k)), TiePolicy::Cluster, eps); };
    ProjectionSpec prev2 = P(k_lo - 2), prev1 = P(k_lo - 1);
    for (long k = k_lo; k <= k_hi; ++k) {
      parts.push_back({k, compress(x, prev1, &prev2)});
      prev2 = std::move(prev1);
      prev1 = P(k);
    }
  }
  return rep_from_parts(x, std::move(parts), eps);
}

struct ValidationReport {
  bool support_ok = true;
  bool sum_ok = true;
  bool residuals_ok = true;
  /// Smallest 2^k - tau(s(X_k)) (function subjects: of the family weights).
  Rational support_margin{0};
  /// Probe membership: first (k, C) with o(residuals) <= C o(S_+^k g).
  std::optional<bool> membership;
  long membership_k = 0;
  Rational membership_C{0};
  std::vector<std::string> violations;

  bool ok() const { return support_ok && sum_ok && residuals_ok && membership.value_or(true); }
};

struct MembershipProbe {
  DyadicSequence generator;
  long max_shift = 4;
  std::vector<Rational> constants{Rational(1), Rational(2), Rational(4), Rational(8), Rational(16),
                                  Rational(64), Rational(256), Rational(1024)};
};

inline ValidationReport validate(const DyadicRep& rep, const std::optional<MembershipProbe>& probe = std::nullopt,
                                 double eps = kDefaultEpsilon) {
  ValidationReport out;
  bool first = true;
  auto margin = [&](const Rational& m) {
    if (first || m < out.support_margin) out.support_margin = m;
    first = false;
  };
  if (!rep.commutative()) {
    Operator sum = Operator::zero_like(rep.subject);
    for (const auto& p : rep.parts) {
      Extended t = support_projection(p.op, eps).trace;
      margin(pow2(p.k) - t.value());
      if (t.value() > pow2(p.k)) {
        out.support_ok = false;
        out.violations.push_back("support of part " + std::to_string(p.k) + " has trace " + t.str());
      }
      sum = sum + p.op;
    }
    Operator diff = rep.subject - sum;
    if (diff.is_exact()) {
      out.sum_ok = detail::is_zero_block_operator(diff, 0);
    } else {
      double worst = 0;
      for (const auto& m : diff.matrices()) worst = std::max(worst, m.numeric().cwiseAbs().maxCoeff());
      out.sum_ok = worst <= eps * static_cast<double>(std::max<std::size_t>(1, rep.parts.size()));
    }
    if (!out.sum_ok) out.violations.push_back("parts do not sum to the subject");
    // residuals from scratch, one tail at a time
    const long lo = rep.parts.empty() ? 0 : rep.parts.front().k - 2;
    const long hi = rep.parts.empty() ? 0 : rep.parts.back().k + 2;
    for (long n = std::min(lo, rep.residuals.lo() - 1); n <= std::max(hi, rep.residuals.hi() + 1); ++n) {
      Operator rest = rep.subject;
      for (const auto& p : rep.parts)
        if (p.k <= n) rest = rest - p.op;
      Rational actual = uniform_norm(rest);
      Rational stored = rep.residuals.at(n);
      bool same = rep.exact ? actual == stored : std::abs(to_double(actual - stored)) <= eps * 16;
      if (!same) {
        out.residuals_ok = false;
        out.violations.push_back("residual at " + std::to_string(n) + " is " + to_string(actual) +
                                 ", stored " + to_string(stored));
      }
    }
  } else {
    Rational weight = 0;
    StepFunction sum;
    for (const auto& c : rep.families) {
      weight += 1 / pow2(c.shift);
      sum = sum + c.g;
    }
    // part k covers at most 2^(k - shift) from each family
    margin(1 - weight);
    if (weight > 1) {
      out.support_ok = false;
      out.violations.push_back("cell families overlap beyond the support bound");
    }
    out.sum_ok = sum == rep.subject.function();
    if (!out.sum_ok) out.violations.push_back("families do not sum to the subject");
    DyadicSequence actual = detail::family_residuals(rep.families);
    out.residuals_ok = rep.residuals_exact ? actual == rep.residuals : pointwise_le(actual, rep.residuals);
    if (!out.residuals_ok) out.violations.push_back("residuals disagree with the cell families");
  }
  if (probe) {
    out.membership = false;
    DyadicSequence o_res = ordering_numbers(rep.residuals);
    for (long k = 0; k <= probe->max_shift && !*out.membership; ++k) {
      DyadicSequence o_g = ordering_numbers(shift(probe->generator, k));
      for (const auto& C : probe->constants)
        if (pointwise_le(o_res, scale(C, o_g))) {
          out.membership = true;
          out.membership_k = k;
          out.membership_C = C;
          break;
        }
    }
    if (!*out.membership) out.violations.push_back("residuals not dominated by the probe generator");
  }
  return out;
}

/// Z_k = X_{k-1} + Y_{k-1}.
inline DyadicRep sum_reps(const DyadicRep& x, const DyadicRep& y, double eps = kDefaultEpsilon) {
  if (x.commutative() != y.commutative())
    throw Error(ErrorCode::InvalidArgument, "representations live in different algebras");
  if (x.commutative()) {
    std::vector<CellFamily> fams;
    for (const auto* r : {&x, &y})
      for (auto c : r->families) {
        ++c.shift;
        fams.push_back(std::move(c));
      }
    return rep_from_families(x.subject.function() + y.subject.function(), std::move(fams));
  }
  std::vector<DyadicPart> parts;
  for (const auto* r : {&x, &y})
    for (const auto& p : r->parts) parts.push_back({p.k + 1, p.op});
  return rep_from_parts(x.subject + y.subject, std::move(parts), eps);
}

inline const DyadicSequence& coefficient_sequence(const DyadicRep& rep) { return rep.coefficients; }

/// b_k = 2^-k Re tau(sum_{n<=k} (X_n - Y_n)) for two representations of one
/// subject; their coefficient difference is b - (1/2) S_+ b.
inline DyadicSequence cohomology_witness(const DyadicRep& x, const DyadicRep& y) {
  if (x.commutative() != y.commutative())
    throw Error(ErrorCode::InvalidArgument, "representations live in different algebras");
  if (x.commutative()) return solve_cohomology(x.coefficients - y.coefficients);
  std::vector<long> ks;
  for (const auto* r : {&x, &y})
    for (const auto& p : r->parts) ks.push_back(p.k);
  if (ks.empty()) return DyadicSequence::zero();
  const long lo = *std::min_element(ks.begin(), ks.end());
  const long hi = *std::max_element(ks.begin(), ks.end());
  std::vector<Rational> b;
  Rational partial = 0;
  for (long k = lo; k <= hi; ++k) {
    for (const auto& p : x.parts)
      if (p.k == k) partial += trace(p.op).re.value();
    for (const auto& p : y.parts)
      if (p.k == k) partial -= trace(p.op).re.value();
    b.push_back(partial / pow2(k));
  }
  // past the last part the partial sum is frozen: b_k = 2^-k * partial
  const Rational last = b.back();
  return DyadicSequence(lo, std::move(b), Tail::Zero(), Tail::Geometric(last, Rational(1, 2)));
}

}  // namespace calkin
