#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "calkin/deltanorm.hpp"
#include "calkin/dyadic.hpp"
#include "calkin/functionals.hpp"
#include "calkin/json_io.hpp"
#include "calkin/majorization.hpp"
#include "calkin/random.hpp"
#include "calkin/transfer.hpp"

namespace calkin::verify {

using json::Json;

/// Outcome of one property over many cases. Failures keep the first few
/// counterexamples.
struct Check {
  std::string name;
  long cases = 0;
  long failed = 0;
  long skipped = 0;
  std::vector<Json> failures;
  Json details = Json::object();

  bool pass() const { return failed == 0 && cases > 0; }
  void ok() { ++cases; }
  void fail(Json why) {
    ++cases;
    ++failed;
    if (failures.size() < 3) failures.push_back(std::move(why));
  }
  void expect(bool good, const std::function<Json()>& why) { good ? ok() : fail(why()); }

  Json to_json() const {
    Json j{{"check", name}, {"pass", pass()}, {"cases", cases}, {"failed", failed}};
    if (skipped) j["skipped"] = skipped;
    if (!details.empty()) j["details"] = details;
    if (!failures.empty()) j["counterexamples"] = failures;
    return j;
  }
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }
  Json to_json() const {
    Json cs = Json::array();
    for (const auto& c : checks) cs.push_back(c.to_json());
    return {{"suite", suite}, {"pass", pass()}, {"checks", cs}};
  }
};

struct Options {
  long trials = -1;  // -1: the suite's default
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  long depth = 8;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

/// Independent stream for trial t of a named check.
inline Rng trial_rng(const Options& o, const std::string& name, long t) {
  return Rng(mix(mix(o.seed ^ hash(name)) + static_cast<std::uint64_t>(t)));
}

inline long trials_or(const Options& o, long dflt) { return o.trials > 0 ? o.trials : dflt; }

inline Json q(const Rational& r) { return json::rational(r); }

/// Draws sequences until (Dx)* is representable in closed form.
inline std::pair<DyadicSequence, StepFunction> rearrangeable_sequence(Rng& g, long& skipped,
                                                                      const SequenceOptions& so = {}) {
  for (;;) {
    DyadicSequence x = random_sequence(g, so);
    try {
      return {x, decreasing_rearrangement(pietsch_D(x))};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonRepresentable) throw;
      ++skipped;
    }
  }
}

inline Operator random_diagonal(Rng& g, bool nonnegative = false) {
  BlockOptions bo;
  bo.diagonal = true;
  bo.nonnegative = nonnegative;
  return random_block_operator(g, bo);
}

/// Same algebra, two operators.
inline std::pair<Operator, Operator> random_pair(Rng& g, const BlockOptions& bo) {
  BlockAlgebra alg = random_algebra(g, bo);
  Operator x = random_block_operator(g, alg, bo);
  return {x, random_block_operator(g, alg, bo)};
}

inline bool eval_equal(const EvalResult& a, const EvalResult& b, double tol = 1e-12) {
  if (a.defined != b.defined) return false;
  if (!a.defined) return true;
  if (a.exact && b.exact) return a.value == b.value && a.imag == b.imag;
  return std::abs(a.approx - b.approx) <= tol * std::max(1.0, std::abs(a.approx));
}

inline EvalResult eval_sum(const EvalResult& a, const EvalResult& b) {
  if (!a.defined) return a;
  if (!b.defined) return b;
  if (a.exact && b.exact) {
    EvalResult r = EvalResult::exact_value(a.value + b.value);
    r.imag = a.imag + b.imag;
    return r;
  }
  return EvalResult::float_value(a.approx + b.approx);
}

inline bool is_zero(const EvalResult& e) { return e.defined && (e.exact ? e.value == 0 : e.approx == 0); }

inline const std::vector<Theta>& core_thetas() {
  static const std::vector<Theta> t{Theta::summation(), Theta::limit_plus(), Theta::limit_minus()};
  return t;
}

/// x_n = 2^-n on n >= 0: y_n = 1 toward +inf.
inline StepFunction weak_plus_element() {
  return pietsch_D(DyadicSequence(0, {Rational(1)}, Tail::Zero(), Tail::Geometric(Rational(1), Rational(1, 2))));
}
/// x_n = 2^-n on n <= 0: y_n = 1 toward -inf.
inline StepFunction weak_minus_element() {
  return pietsch_D(DyadicSequence(0, {Rational(1)}, Tail::Geometric(Rational(1), Rational(2)), Tail::Zero()));
}

inline DyadicRep diag_rep(const std::vector<Rational>& d) {
  return decompose(Operator::diagonal(BlockAlgebra({BlockSpec{static_cast<long>(d.size()), Rational(1)}}), {d}));
}

/// A second representation of a diagonal subject: part of one X_k moves up by 1 or 2.
inline std::optional<DyadicRep> regrouped(const DyadicRep& rep, Rng& g) {
  if (rep.parts.empty()) return std::nullopt;
  const std::size_t idx = static_cast<std::size_t>(g.integer(0, static_cast<long>(rep.parts.size()) - 1));
  const DyadicPart& part = rep.parts[idx];
  const BlockAlgebra& alg = part.op.algebra();
  std::vector<std::vector<Rational>> moved;
  std::vector<std::pair<std::size_t, std::size_t>> nonzero;
  for (std::size_t j = 0; j < alg.size(); ++j) {
    moved.emplace_back(static_cast<std::size_t>(alg.blocks()[j].d), Rational(0));
    for (std::size_t i = 0; i < moved[j].size(); ++i)
      if (!part.op.matrices()[j].exact()[i][i].is_zero()) nonzero.emplace_back(j, i);
  }
  if (nonzero.empty()) return std::nullopt;
  bool any = false;
  for (const auto& [j, i] : nonzero)
    if (g.coin()) {
      moved[j][i] = part.op.matrices()[j].exact()[i][i].re;
      any = true;
    }
  if (!any) moved[nonzero[0].first][nonzero[0].second] = part.op.matrices()[nonzero[0].first].exact()[nonzero[0].second][nonzero[0].second].re;
  Operator up = Operator::diagonal(alg, moved);
  std::vector<DyadicPart> parts;
  for (std::size_t p = 0; p < rep.parts.size(); ++p)
    if (p != idx) parts.push_back(rep.parts[p]);
  parts.push_back({part.k, part.op - up});
  parts.push_back({part.k + g.integer(1, 2), up});
  return rep_from_parts(rep.subject, std::move(parts));
}

/// Finitely supported sequence with window inside [-1, 3] and an algebra
/// with enough atoms of weight 1/2, 1 and 2 to tile it.
inline std::pair<DyadicSequence, BlockAlgebra> tileable_sequence(Rng& g) {
  const long lo = g.integer(-1, 3);
  const long len = g.integer(1, 3 - lo + 1);
  std::vector<Rational> v;
  for (long i = 0; i < len; ++i) v.push_back(g.rational(-8, 8, 16));
  BlockAlgebra alg({BlockSpec{g.integer(1, 4), Rational(1, 2)}, BlockSpec{g.integer(2, 8), Rational(1)},
                    BlockSpec{8, Rational(2)}});
  return {DyadicSequence(lo, std::move(v)), alg};
}

inline Json seq(const DyadicSequence& x) { return json::to_json(x); }
inline Json fn(const StepFunction& f) { return json::to_json(f); }
inline Json op(const Operator& x) { return json::to_json(x); }

}  // namespace detail

// ---------------------------------------------------------------- checks

/// o_n(x) = (Dx)*(2^n) on the window widened by depth.
inline Check check_order_equality(const Options& o, long dflt = 1000) {
  Check c{"ordering numbers equal (Dx)*(2^n)"};
  long mismatched_points = 0, points = 0;
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    auto [x, r] = detail::rearrangeable_sequence(g, c.skipped);
    DyadicSequence on = ordering_numbers(x);
    std::optional<Json> bad;
    for (long n = x.lo() - o.depth; n <= x.hi() + o.depth; ++n) {
      ++points;
      Rational lhs = on.at(n), rhs = r.at(pow2(n));
      if (lhs != rhs) {
        ++mismatched_points;
        if (!bad) bad = Json{{"x", detail::seq(x)}, {"n", n}, {"o_n", detail::q(lhs)}, {"rearranged", detail::q(rhs)}};
      }
    }
    bad ? c.fail(*bad) : c.ok();
  }
  c.details = {{"points", points}, {"mismatched_points", mismatched_points}};
  return c;
}

inline Check check_ordering_numbers_shape(const Options& o, long dflt = 1000) {
  Check c{"ordering numbers are nonincreasing, dominate |x| and are idempotent"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    DyadicSequence x = random_sequence(g);
    DyadicSequence on = ordering_numbers(x);
    c.expect(is_nonincreasing(on) && pointwise_le(abs(x), on) && ordering_numbers(on) == on,
             [&] { return Json{{"x", detail::seq(x)}, {"o", detail::seq(on)}}; });
  }
  return c;
}

/// (Dx)* <= D(o(x)) <= sigma_2 (Dx)*.
inline Check check_sequence_sandwich(const Options& o, long dflt = 1000) {
  Check c{"(Dx)* <= D o(x) <= sigma_2 (Dx)*"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    auto [x, r] = detail::rearrangeable_sequence(g, c.skipped);
    StepFunction mid = pietsch_D(ordering_numbers(x));
    const bool lower = pointwise_le(r, mid), upper = pointwise_le(mid, dilate(r, Rational(2)));
    c.expect(lower && upper,
             [&] { return Json{{"x", detail::seq(x)}, {"lower", lower}, {"upper", upper}}; });
  }
  return c;
}

/// f <= D Phi f <= sigma_2 f for nonincreasing f.
inline Check check_function_sandwich(const Options& o, long dflt = 1000) {
  Check c{"f <= D Phi f <= sigma_2 f"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    StepFunction f;
    if (t % 4 == 3) {
      // closed-form tails on both sides
      auto [x, r] = detail::rearrangeable_sequence(g, c.skipped);
      f = r;
    } else {
      StepOptions so;
      so.constant_tail = g.coin();
      f = decreasing_rearrangement(random_step(g, so));
    }
    StepFunction mid = pietsch_D(phi_sample(f));
    const bool lower = pointwise_le(f, mid), upper = pointwise_le(mid, dilate(f, Rational(2)));
    c.expect(lower && upper, [&] { return Json{{"f", detail::fn(f)}, {"lower", lower}, {"upper", upper}}; });
  }
  return c;
}

/// mu(2t, X + Y) <= mu(t, X) + mu(t, Y) at every breakpoint.
inline Check check_sum_rearrangement(const Options& o, bool diagonal, long dflt = 500) {
  Check c{diagonal ? "mu(2t, X+Y) <= mu(t, X) + mu(t, Y), exact diagonal pairs"
                   : "mu(2t, X+Y) <= mu(t, X) + mu(t, Y), numeric pairs"};
  double worst = -HUGE_VAL;
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    BlockOptions bo;
    bo.diagonal = diagonal;
    auto [x, y] = detail::random_pair(g, bo);
    StepFunction mx = singular_value_function(x), my = singular_value_function(y),
                 ms = singular_value_function(x + y);
    std::set<Rational> pts;
    for (const auto& p : mx.breakpoints()) pts.insert(p);
    for (const auto& p : my.breakpoints()) pts.insert(p);
    for (const auto& p : ms.breakpoints()) pts.insert(p / 2);
    pts.erase(Rational(0));
    if (!pts.empty()) pts.insert(*pts.begin() / 2);
    std::optional<Json> bad;
    for (const auto& p : pts) {
      Rational lhs = ms.at(2 * p), rhs = mx.at(p) + my.at(p);
      double excess = to_double(lhs - rhs);
      worst = std::max(worst, excess);
      const bool good = diagonal ? lhs <= rhs : excess <= o.tolerance * std::max(1.0, to_double(rhs));
      if (!good && !bad)
        bad = Json{{"x", detail::op(x)}, {"y", detail::op(y)}, {"t", detail::q(p)}, {"excess", json::real(excess)}};
    }
    bad ? c.fail(*bad) : c.ok();
  }
  c.details = {{"worst_excess", json::real(worst)}};
  return c;
}

/// The worked example: residuals 8, 4, 2, 0 at n = 0..3.
inline Check check_worked_decomposition() {
  Check c{"diag(8,4,2,1) decomposition"};
  DyadicRep rep = detail::diag_rep({Rational(8), Rational(4), Rational(2), Rational(1)});
  const std::vector<Rational> want{8, 4, 2, 0};
  for (long n = 0; n < 4; ++n)
    c.expect(rep.residuals.at(n) == want[static_cast<std::size_t>(n)],
             [&] { return Json{{"n", n}, {"residual", detail::q(rep.residuals.at(n))}}; });
  std::vector<long> ks;
  for (const auto& p : rep.parts) ks.push_back(p.k);
  c.expect(ks == std::vector<long>{1, 2, 3}, [&] { return Json{{"part_indices", ks}}; });
  c.expect(validate(rep).ok(), [&] { return json::to_json(validate(rep)); });
  return c;
}

/// tau(s(X_k)) <= 2^k, residual_n <= 2 mu(2^(n-1)), mu(2^(n+1)) <= residual_n.
inline Check check_dyadic_bounds(const Options& o, long dflt = 500) {
  Check c{"dyadic decomposition bounds on random diagonals"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    Operator x = detail::random_diagonal(g);
    DyadicRep rep = decompose(x);
    ValidationReport v = validate(rep);
    DyadicSequence phi = phi_op(x);
    const bool upper = pointwise_le(rep.residuals, scale(Rational(2), shift(phi, 1)));
    const bool lower = pointwise_le(shift(phi, -1), rep.residuals);
    c.expect(v.ok() && upper && lower, [&] {
      return Json{{"x", detail::op(x)}, {"validation", json::to_json(v)}, {"upper", upper}, {"lower", lower}};
    });
  }
  return c;
}

inline Check check_validation_negative_control() {
  Check c{"oversized part is reported"};
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{4, Rational(1)}}),
                                  {{Rational(8), Rational(4), Rational(2), Rational(1)}});
  DyadicRep rep = rep_from_parts(x, {{0, x}});
  ValidationReport v = validate(rep);
  c.expect(!v.support_ok && !v.ok(), [&] { return json::to_json(v); });
  return c;
}

/// Z_k = X_(k-1) + Y_(k-1): validates, coefficients are half the shifted sum,
/// residuals bounded by the shifted sum.
inline Check check_sum_reps(const Options& o, long dflt = 500) {
  Check c{"sum of representations"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    DyadicRep rx, ry;
    if (t % 3 == 2) {
      rx = decompose(Operator::commutative(random_step(g)));
      ry = decompose(Operator::commutative(random_step(g)));
    } else {
      BlockOptions bo;
      bo.diagonal = true;
      auto [x, y] = detail::random_pair(g, bo);
      rx = decompose(x);
      ry = decompose(y);
    }
    DyadicRep z = sum_reps(rx, ry);
    ValidationReport v = validate(z);
    const bool coeff = z.coefficients == half_shift(rx.coefficients + ry.coefficients);
    const bool resid = pointwise_le(z.residuals, shift(rx.residuals + ry.residuals, 1));
    c.expect(v.support_ok && v.sum_ok && v.residuals_ok && coeff && resid, [&] {
      return Json{{"x", detail::op(rx.subject)}, {"y", detail::op(ry.subject)}, {"validation", json::to_json(v)},
                  {"coefficients", coeff}, {"residuals", resid}};
    });
  }
  return c;
}

/// Two validated reps of one X: a = b - (1/2) S_+ b, theta(a) = 0.
inline Check check_well_definedness(const Options& o, long dflt = 200) {
  Check c{"coefficient difference is a coboundary"};
  long theta_checked = 0;
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    std::optional<DyadicRep> alt;
    DyadicRep rep;
    while (!alt) {
      rep = decompose(detail::random_diagonal(g));
      alt = detail::regrouped(rep, g);
      if (!alt) ++c.skipped;
    }
    const bool valid = validate(*alt).ok();
    DyadicSequence a = rep.coefficients - alt->coefficients;
    DyadicSequence b = cohomology_witness(rep, *alt);
    const bool coboundary = a == b - half_shift(b);
    bool vanish = true;
    for (const auto& th : detail::core_thetas()) {
      EvalResult e = theta_eval(th, a);
      if (!e.defined) continue;
      ++theta_checked;
      vanish = vanish && detail::is_zero(e);
    }
    c.expect(valid && coboundary && vanish, [&] {
      return Json{{"x", detail::op(rep.subject)}, {"a", detail::seq(a)}, {"b", detail::seq(b)}, {"valid", valid},
                  {"coboundary", coboundary}, {"theta_vanishes", vanish}};
    });
  }
  c.details = {{"theta_evaluations", theta_checked}};
  return c;
}

inline Check check_regrouped_example() {
  Check c{"regrouped diag(8,4,2,1) gives the same traces"};
  DyadicRep rep = detail::diag_rep({Rational(8), Rational(4), Rational(2), Rational(1)});
  // X_2 carries {8, 4}
  std::vector<DyadicPart> parts;
  for (const auto& p : rep.parts) parts.push_back({p.k == 1 ? 2 : p.k, p.op});
  DyadicRep alt = rep_from_parts(rep.subject, parts);
  c.expect(validate(alt).ok() && alt.coefficients != rep.coefficients,
           [&] { return json::to_json(validate(alt)); });
  for (const auto& th : detail::core_thetas())
    c.expect(detail::eval_equal(trace_eval(th, rep), trace_eval(th, alt)), [&] {
      return Json{{"theta", theta_name(th.kind)}, {"canonical", json::to_json(trace_eval(th, rep))},
                  {"regrouped", json::to_json(trace_eval(th, alt))}};
    });
  return c;
}

/// phi(X + Y) = phi(X) + phi(Y), through decompose(X + Y) and through sum_reps.
inline Check check_trace_linearity(const Options& o, long dflt = 500) {
  Check c{"trace linearity"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    Operator x, y;
    if (t % 4 == 3) {
      x = Operator::commutative(random_step(g));
      y = Operator::commutative(random_step(g));
    } else {
      BlockOptions bo;
      bo.diagonal = true;
      std::tie(x, y) = detail::random_pair(g, bo);
    }
    const DyadicRep rx = decompose(x), ry = decompose(y), rs = decompose(x + y);
    const DyadicRep z = sum_reps(rx, ry);
    for (const auto& th : detail::core_thetas()) {
      EvalResult sum = detail::eval_sum(trace_eval(th, rx), trace_eval(th, ry));
      EvalResult direct = trace_eval(th, rs), via = trace_eval(th, z);
      c.expect(detail::eval_equal(sum, direct) && detail::eval_equal(sum, via), [&] {
        return Json{{"theta", theta_name(th.kind)}, {"x", detail::op(x)}, {"y", detail::op(y)},
                    {"sum", json::to_json(sum)}, {"direct", json::to_json(direct)}, {"via_sum_reps", json::to_json(via)}};
      });
    }
  }
  return c;
}

/// phi(X) = phi(Y) when 0 <= X, Y and mu(X) = mu(Y).
inline Check check_trace_symmetry(const Options& o, long dflt = 300) {
  Check c{"trace symmetry"};
  const std::vector<Theta> thetas{Theta::summation(), Theta::limit_plus(), Theta::limit_minus(),
                                  Theta::cesaro_plus(), Theta::cesaro_minus()};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    Operator x, y;
    if (t % 3 == 2) {
      StepOptions so;
      so.nonnegative = true;
      StepFunction f = random_step(g, so);
      x = Operator::commutative(f);
      y = Operator::commutative(decreasing_rearrangement(f));
    } else {
      // permute blocks and the diagonal inside each block
      BlockOptions bo;
      bo.diagonal = true;
      bo.nonnegative = true;
      Operator d = random_block_operator(g, bo);
      std::vector<std::size_t> order(d.algebra().size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), g.engine());
      std::vector<BlockSpec> specs;
      std::vector<std::vector<Rational>> diags;
      for (std::size_t j : order) {
        specs.push_back(d.algebra().blocks()[j]);
        std::vector<Rational> diag;
        for (std::size_t i = 0; i < d.matrices()[j].exact().size(); ++i) diag.push_back(d.matrices()[j].exact()[i][i].re);
        std::shuffle(diag.begin(), diag.end(), g.engine());
        diags.push_back(diag);
      }
      x = d;
      y = Operator::diagonal(BlockAlgebra(specs), diags);
    }
    const DyadicRep rx = decompose(x), ry = decompose(y);
    for (const auto& th : thetas) {
      EvalResult a = trace_eval(th, rx), b = trace_eval(th, ry);
      c.expect(detail::eval_equal(a, b), [&] {
        return Json{{"theta", theta_name(th.kind)}, {"x", detail::op(x)}, {"y", detail::op(y)},
                    {"at_x", json::to_json(a)}, {"at_y", json::to_json(b)}};
      });
    }
  }
  return c;
}

/// Summation trace = tau on rational diagonals.
inline Check check_tau_recovery(const Options& o, long dflt = 500) {
  Check c{"summation trace equals tau"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    Operator x = detail::random_diagonal(g);
    EvalResult e = trace_eval(Theta::summation(), x);
    TraceValue tau = trace(x);
    c.expect(e.defined && e.exact && e.value == tau.re.value(), [&] {
      return Json{{"x", detail::op(x)}, {"trace", json::to_json(e)}, {"tau", tau.re.str()}};
    });
  }
  return c;
}

/// LimitPlus and LimitMinus on the reference elements and on bounded / finite inputs.
inline Check check_singular_trace_values(const Options& o, long dflt = 300) {
  Check c{"singular traces on reference elements"};
  auto is_one = [](const EvalResult& e) { return e.defined && e.exact && e.value == 1; };
  EvalResult plus = trace_eval(Theta::limit_plus(), Operator::commutative(detail::weak_plus_element()));
  EvalResult minus = trace_eval(Theta::limit_minus(), Operator::commutative(detail::weak_minus_element()));
  c.expect(is_one(plus), [&] { return Json{{"limplus_weak_element", json::to_json(plus)}}; });
  c.expect(is_one(minus), [&] { return Json{{"limminus_weak_element", json::to_json(minus)}}; });
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    BlockOptions bo;
    bo.diagonal = g.coin();
    Operator x = random_block_operator(g, bo);
    EvalResult e = trace_eval(Theta::limit_plus(), x);
    c.expect(detail::is_zero(e) && e.exact,
             [&] { return Json{{"x", detail::op(x)}, {"limplus", json::to_json(e)}}; });
    StepOptions so;
    so.constant_tail = g.coin();
    Operator f = Operator::commutative(random_step(g, so));
    EvalResult m = trace_eval(Theta::limit_minus(), f);
    c.expect(detail::is_zero(m) && m.exact,
             [&] { return Json{{"f", detail::op(f)}, {"limminus", json::to_json(m)}}; });
  }
  return c;
}

/// theta_from_phi(trace_eval(theta, .)) = theta.
inline Check check_round_trip(const Options& o, long dflt = 200) {
  Check c{"round trip through the diagonal embedding"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    DyadicSequence x;
    EmbedTarget target;
    if (t % 2 == 0) {
      std::tie(x, target) = detail::tileable_sequence(g);
    } else {
      x = random_sequence(g);
    }
    for (const Theta& th : {Theta::summation(), Theta::limit_minus()}) {
      TraceFunctional phi = [&](const Operator& X) { return trace_eval(th, X); };
      EvalResult back = theta_from_phi(phi, x, target), direct = theta_eval(th, x);
      c.expect(detail::eval_equal(back, direct), [&] {
        return Json{{"theta", theta_name(th.kind)}, {"x", detail::seq(x)}, {"block_target", target.has_value()},
                    {"round_trip", json::to_json(back)}, {"direct", json::to_json(direct)}};
      });
    }
  }
  return c;
}

/// phi(X) = phi(D Phi_av mu(X)).
inline Check check_phi_av_identity(const Options& o, long dflt = 200) {
  Check c{"phi(X) = phi(diag Phi_av(X))"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    Operator x;
    switch (t % 4) {
      case 0: x = Operator::commutative(detail::weak_minus_element()); break;
      case 1: {
        StepOptions so;
        so.nonnegative = true;
        x = Operator::commutative(random_step(g, so));
        break;
      }
      default: x = detail::random_diagonal(g, true);
    }
    for (const auto& th : detail::core_thetas()) {
      PhiAvIdentityReport r = phi_av_identity_check(th, x);
      c.expect(r.equal, [&] {
        return Json{{"theta", theta_name(th.kind)}, {"x", detail::op(x)}, {"direct", json::to_json(r.direct)},
                    {"averaged", json::to_json(r.averaged)}};
      });
    }
  }
  return c;
}

struct CounterexampleFacts {
  EvalResult at_e0, at_half_shift_e0, at_chi_z;
  bool invariance_broken = false;
  Rational closed_form_sum{0};
  long N = 20;
  double partial_sum = 0;          // sum_{|n| <= N} c_n, term by term
  double telescoped = 0;           // C(-N) - C(N + 1)
};

inline CounterexampleFacts counterexample_facts(long N = 20) {
  CounterexampleFacts f;
  const Theta th = counterexample_theta();
  const DyadicSequence e0 = DyadicSequence::unit(0);
  f.at_e0 = theta_eval(th, e0);
  f.at_half_shift_e0 = theta_eval(th, half_shift(e0));
  f.at_chi_z = theta_eval(th, DyadicSequence::constant(1));
  f.invariance_broken = !invariance_probe(th, {e0}).all_equal;
  f.closed_form_sum = th.primitive_minus_inf - th.primitive_plus_inf;
  f.N = N;
  for (long n = -N; n <= N; ++n) f.partial_sum += to_double(pow2(n) / ((1 + pow2(n)) * (1 + pow2(n + 1))));
  f.telescoped = to_double(th.primitive(-N) - th.primitive(N + 1));
  return f;
}

/// The trace-derived functional that is not (1/2) S_+ invariant.
inline Check check_counterexample() {
  Check c{"trace-derived functional breaks invariance"};
  CounterexampleFacts f = counterexample_facts();
  auto exact_is = [](const EvalResult& e, const Rational& v) { return e.defined && e.exact && e.value == v; };
  c.expect(exact_is(f.at_e0, Rational(1, 6)), [&] { return Json{{"theta(e0)", json::to_json(f.at_e0)}}; });
  c.expect(exact_is(f.at_half_shift_e0, Rational(1, 15)),
           [&] { return Json{{"theta(S e0 / 2)", json::to_json(f.at_half_shift_e0)}}; });
  c.expect(f.invariance_broken, [] { return Json{{"invariance_broken", false}}; });
  c.expect(f.closed_form_sum == 1 && exact_is(f.at_chi_z, Rational(1)),
           [&] { return Json{{"closed_form", detail::q(f.closed_form_sum)}, {"theta(chi_Z)", json::to_json(f.at_chi_z)}}; });
  c.expect(std::abs(f.partial_sum - f.telescoped) < 1e-12,
           [&] { return Json{{"partial_sum", json::real(f.partial_sum)}, {"telescoped", json::real(f.telescoped)}}; });
  c.details = {{"theta(e0)", json::to_json(f.at_e0)},
               {"theta(S e0 / 2)", json::to_json(f.at_half_shift_e0)},
               {"N", f.N},
               {"partial_sum", json::real(f.partial_sum)},
               {"partial_sum_error", json::real(std::abs(1 - f.partial_sum))}};
  return c;
}

inline std::vector<DeltaNorm> transfer_norms() {
  return {DeltaNorm::lp(1), DeltaNorm::linf(), DeltaNorm::lp(Rational(1, 2)), DeltaNorm::lp(2)};
}

/// ||x||_seq = ||Dx||_fn, and = ||diag x||_op on tileable inputs.
inline Check check_norm_transfer(const Options& o, long dflt = 300) {
  Check c{"norm transfer"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    DyadicSequence x;
    EmbedTarget target;
    if (t % 3 == 0)
      std::tie(x, target) = detail::tileable_sequence(g);
    else
      x = random_sequence(g);
    for (const auto& N : transfer_norms()) {
      NormValue s = norm_eval(N, x), f = norm_eval(N, pietsch_D(x));
      bool good = same_norm(s, f);
      std::optional<NormValue> opn;
      if (target) {
        opn = norm_eval(N, diag_embed(x, target));
        good = good && same_norm(s, *opn);
      }
      c.expect(good, [&] {
        Json j{{"norm", N.name()}, {"x", detail::seq(x)}, {"sequence", json::to_json(s)}, {"function", json::to_json(f)}};
        if (opn) j["operator"] = json::to_json(*opn);
        return j;
      });
    }
  }
  return c;
}

/// ||X|| <= ||X||~ <= 2C ||X||, and ||.||~ is monotone in {mu(2^n)}.
inline Check check_stable_sandwich(const Options& o, long dflt = 300) {
  Check c{"stable norm sandwich"};
  std::vector<DeltaNorm> norms = transfer_norms();
  norms.push_back(DeltaNorm::sum(DeltaNorm::lp(1), DeltaNorm::linf()));
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    BlockOptions bo;
    bo.diagonal = t % 2 == 0;
    Operator x = random_block_operator(g, bo);
    // |y_i| <= |x_i| entrywise, so mu(Y) <= mu(X)
    Operator y = x;
    if (bo.diagonal) {
      std::vector<std::vector<Rational>> d;
      for (const auto& m : x.matrices()) {
        std::vector<Rational> row;
        for (std::size_t i = 0; i < m.exact().size(); ++i) row.push_back(m.exact()[i][i].re * g.rational(0, 1, 4));
        d.push_back(row);
      }
      y = Operator::diagonal(x.algebra(), d);
    }
    for (const auto& N : norms) {
      NormValue plain = norm_eval(N, x), stable = stable_norm(N, x);
      NormValue bound = plain.scaled(PowerValue{true, 2 * N.constant(), to_high(2 * N.constant())});
      const bool sandwich = norm_le(plain, stable) && norm_le(stable, bound);
      const bool monotone = !bo.diagonal || norm_le(stable_norm(N, y), stable);
      c.expect(sandwich && monotone, [&] {
        return Json{{"norm", N.name()}, {"x", detail::op(x)}, {"plain", json::to_json(plain)},
                    {"stable", json::to_json(stable)}, {"monotone", monotone}};
      });
    }
  }
  return c;
}

/// The worked stable-norm examples.
inline Check check_stable_examples() {
  Check c{"stable norm examples"};
  const DeltaNorm L1 = DeltaNorm::lp(1);
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{2, Rational(1)}}), {{Rational(3), Rational(1)}});
  c.expect(stable_norm(L1, x).value == 4 && norm_eval(L1, x).value == 4,
           [&] { return Json{{"stable", json::to_json(stable_norm(L1, x))}}; });
  Operator y = Operator::commutative(StepFunction::indicator(Rational(0), Rational(3)));
  c.expect(stable_norm(L1, y).value == 4 && norm_eval(L1, y).value == 3,
           [&] { return Json{{"stable", json::to_json(stable_norm(L1, y))}}; });
  return c;
}

/// Declared constants hold; the L1 equality cases are exact.
inline Check check_constants(const Options& o, long dflt = 300) {
  Check c{"quasi-triangle, shift and dilation constants"};
  const long n = detail::trials_or(o, dflt);
  Json reports = Json::array();
  std::vector<DeltaNorm> norms = transfer_norms();
  norms.push_back(DeltaNorm::sum(DeltaNorm::lp(Rational(1, 2)), DeltaNorm::linf()));
  for (std::size_t k = 0; k < norms.size(); ++k) {
    ConstantsReport r = constants_report(norms[k], n, detail::mix(o.seed + k));
    c.expect(r.ok(1e-12), [&] { return Json{{"norm", norms[k].name()}, {"report", json::to_json(r)}}; });
    reports.push_back({{"norm", norms[k].name()}, {"report", json::to_json(r)}});
  }
  const DeltaNorm L1 = DeltaNorm::lp(1);
  for (long t = 0; t < n; ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    StepFunction f = random_step(g);
    DyadicSequence x = random_sequence(g);
    NormValue nf = norm_eval(L1, f), nd = norm_eval(L1, dilate(f, Rational(2)));
    NormValue nx = norm_eval(L1, x), ns = norm_eval(L1, shift(x, 1));
    const bool dil = !nf.infinite && nd.exact && nd.value == 2 * nf.value;
    const bool sh = nx.infinite ? ns.infinite : (ns.exact && ns.value == 2 * nx.value);
    c.expect(dil && sh, [&] {
      return Json{{"f", detail::fn(f)}, {"x", detail::seq(x)}, {"dilation_equality", dil}, {"shift_equality", sh}};
    });
  }
  c.details = {{"reports", reports}};
  return c;
}

namespace detail {

/// int_a^b of a step function by direct piece sums.
inline Rational integral(const StepFunction& f, const Rational& a, const Rational& b) {
  return integrate(f, a, b).value();
}

/// Nonincreasing, supported in [0, 8] up to an optional constant tail.
inline StepFunction random_mu(Rng& g) {
  StepOptions so;
  so.nonnegative = true;
  so.constant_tail = g.integer(0, 3) == 0;
  return decreasing_rearrangement(dilate(random_step(g, so), Rational(1, 8)));
}

/// G(k / 64) for k = 0..steps, scaled by a common denominator into int64.
struct GridIntegrals {
  std::vector<std::int64_t> x, y;
  bool fits = true;
};

inline GridIntegrals grid_integrals(const StepFunction& mx, const StepFunction& my, long steps) {
  std::vector<Rational> gx, gy;
  Integer den = 1;
  for (long k = 0; k <= steps; ++k) {
    gx.push_back(integral(mx, Rational(0), Rational(k, 64)));
    gy.push_back(integral(my, Rational(0), Rational(k, 64)));
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), gx.back().get_den_mpz_t());
    mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), gy.back().get_den_mpz_t());
  }
  GridIntegrals out;
  auto scaled = [&](const Rational& v, std::vector<std::int64_t>& to) {
    Integer n = v.get_num() * (den / v.get_den());
    // headroom for differences of four terms
    if (!n.fits_slong_p() || abs(n) > Integer(1) << 60) {
      out.fits = false;
      return;
    }
    to.push_back(n.get_si());
  };
  for (long k = 0; k <= steps && out.fits; ++k) {
    scaled(gx[static_cast<std::size_t>(k)], out.x);
    scaled(gy[static_cast<std::size_t>(k)], out.y);
  }
  return out;
}

}  // namespace detail

/// Exact checker against brute force on the 1/64 grid over twice the joint support.
inline Check check_majorization_grid(const Options& o, long dflt = 300) {
  Check c{"exact majorization agrees with the 1/64 grid"};
  long held = 0, grid_violations = 0;
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    StepFunction mx = detail::random_mu(g), my = detail::random_mu(g);
    if (g.coin()) my = scale(g.rational(0, 1, 4), mx);  // near-majorized pairs
    const long lambda = g.integer(1, 3);
    MajorizationVerdict v = uniformly_majorized_mu(my, mx, lambda);
    if (v.holds) ++held;
    const Rational T = 2 * max(max(mx.tN(), my.tN()), Rational(1));
    const long steps = static_cast<long>(mpz_class(T.get_num() * 64 / T.get_den()).get_si());
    detail::GridIntegrals G = detail::grid_integrals(mx, my, steps);
    if (!G.fits) {
      ++c.skipped;
      continue;
    }
    std::optional<std::pair<long, long>> grid_witness;
    for (long i = 0; i * lambda <= steps && !grid_witness; ++i)
      for (long k = i * lambda; k <= steps; ++k) {
        const auto lhs = G.y[static_cast<std::size_t>(k)] - G.y[static_cast<std::size_t>(i * lambda)];
        const auto rhs = G.x[static_cast<std::size_t>(k)] - G.x[static_cast<std::size_t>(i)];
        if (lhs > rhs) {
          grid_witness = std::pair{i, k};
          break;
        }
      }
    if (grid_witness) ++grid_violations;
    bool consistent = !(grid_witness && v.holds);
    if (!v.holds && v.witness) {
      const auto& [a, b] = *v.witness;
      consistent = consistent && detail::integral(my, lambda * a, b) > detail::integral(mx, a, b);
    }
    c.expect(consistent, [&] {
      Json j{{"y", detail::fn(my)}, {"x", detail::fn(mx)}, {"lambda", lambda}, {"exact", json::to_json(v)}};
      if (grid_witness)
        j["grid_witness"] = {detail::q(Rational(grid_witness->first, 64)), detail::q(Rational(grid_witness->second, 64))};
      return j;
    });
  }
  c.details = {{"majorized_pairs", held}, {"grid_violations", grid_violations}};
  return c;
}

inline Check check_majorization_examples() {
  Check c{"majorization examples"};
  StepFunction one = StepFunction::indicator(Rational(0), Rational(1)), two = scale(Rational(2), one);
  c.expect(uniformly_majorized(one, two, 1).holds, [] { return Json{{"case", "chi <| 2 chi"}}; });
  c.expect(!uniformly_majorized(two, one, 1).holds, [] { return Json{{"case", "2 chi <| chi"}}; });
  BlockAlgebra a({BlockSpec{2, Rational(1)}});
  std::vector<Operator> parts{Operator::diagonal(a, {{Rational(4), Rational(2)}}),
                              Operator::diagonal(a, {{Rational(1), Rational(1)}})};
  c.expect(series_majorization_check(parts).holds, [] { return Json{{"case", "K = 2 series"}}; });
  return c;
}

/// sum_k X_k <| 2 sum_k sigma_(2^k) mu(X_k) with lambda = 2, K <= 4.
inline Check check_series_majorization(const Options& o, long dflt = 200) {
  Check c{"finite series majorization"};
  for (long t = 0; t < detail::trials_or(o, dflt); ++t) {
    Rng g = detail::trial_rng(o, c.name, t);
    BlockOptions bo;
    bo.diagonal = t % 2 == 0;
    bo.max_dim = 4;
    BlockAlgebra alg = random_algebra(g, bo);
    const long K = g.integer(1, 4);
    std::vector<Operator> parts;
    for (long k = 0; k < K; ++k) parts.push_back(random_block_operator(g, alg, bo));
    const Rational tol = bo.diagonal ? Rational(0) : from_double(o.tolerance);
    SeriesMajorizationReport r = series_majorization_check(parts, K, tol);
    c.expect(r.holds, [&] {
      Json ps = Json::array();
      for (const auto& p : parts) ps.push_back(detail::op(p));
      return Json{{"parts", ps}, {"verdict", json::to_json(r.verdict)}};
    });
  }
  return c;
}

// ---------------------------------------------------------------- suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "order-rearrangement", "dphi-sandwich",     "sum-rear",           "majorization",
      "dyadic-bounds",       "sum-reps",          "trace-welldefined",  "trace-linearity",
      "trace-symmetry",      "tau-recovery",      "roundtrip-corollary", "phi-av",
      "counterexample",      "norm-transfer",     "stable-sandwich",    "constants"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, const Options& o) {
  SuiteReport r{name, {}};
  auto& cs = r.checks;
  if (name == "order-rearrangement") {
    cs = {check_order_equality(o), check_ordering_numbers_shape(o)};
  } else if (name == "dphi-sandwich") {
    cs = {check_sequence_sandwich(o), check_function_sandwich(o)};
  } else if (name == "sum-rear") {
    cs = {check_sum_rearrangement(o, false), check_sum_rearrangement(o, true)};
  } else if (name == "majorization") {
    cs = {check_majorization_examples(), check_majorization_grid(o), check_series_majorization(o)};
  } else if (name == "dyadic-bounds") {
    cs = {check_worked_decomposition(), check_dyadic_bounds(o), check_validation_negative_control()};
  } else if (name == "sum-reps") {
    cs = {check_sum_reps(o)};
  } else if (name == "trace-welldefined") {
    cs = {check_regrouped_example(), check_well_definedness(o)};
  } else if (name == "trace-linearity") {
    cs = {check_trace_linearity(o)};
  } else if (name == "trace-symmetry") {
    cs = {check_trace_symmetry(o)};
  } else if (name == "tau-recovery") {
    cs = {check_tau_recovery(o), check_singular_trace_values(o)};
  } else if (name == "roundtrip-corollary") {
    cs = {check_round_trip(o)};
  } else if (name == "phi-av") {
    cs = {check_phi_av_identity(o)};
  } else if (name == "counterexample") {
    cs = {check_counterexample()};
  } else if (name == "norm-transfer") {
    cs = {check_norm_transfer(o)};
  } else if (name == "stable-sandwich") {
    cs = {check_stable_examples(), check_stable_sandwich(o)};
  } else if (name == "constants") {
    cs = {check_constants(o)};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown suite '" + name + "'");
  }
  return r;
}

/// Runs suites concurrently; reports come back in the order requested.
inline std::vector<SuiteReport> run_suites(const std::vector<std::string>& names, const Options& o) {
  const auto& known = suite_names();
  for (const auto& n : names)
    if (std::find(known.begin(), known.end(), n) == known.end())
      throw Error(ErrorCode::InvalidArgument, "unknown suite '" + n + "'");
  std::vector<std::future<SuiteReport>> jobs;
  for (const auto& n : names) jobs.push_back(std::async(std::launch::async, run_suite, n, o));
  std::vector<SuiteReport> out;
  for (auto& f : jobs) out.push_back(f.get());
  return out;
}

}  // namespace calkin::verify
