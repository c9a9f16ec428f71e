#include <gtest/gtest.h>

#include <cmath>

#include "calkin/functionals.hpp"
#include "calkin/random.hpp"

using namespace calkin;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

// Partial sums of 2^n x_n over a wide symmetric range, in long double.
long double brute_weighted_sum(const DyadicSequence& x, long reach) {
  long double s = 0;
  for (long n = x.lo() - reach; n <= x.hi() + reach; ++n) s += std::ldexp(static_cast<long double>(to_double(x.at(n))), static_cast<int>(n));
  return s;
}

bool exact_equals(const EvalResult& e, const Rational& v) { return e.defined && e.exact && e.value == v; }

}  // namespace

TEST(Summation, FiniteSequences) {
  Rng g(71);
  SequenceOptions o;
  o.tails = false;
  for (int t = 0; t < 200; ++t) {
    DyadicSequence x = random_sequence(g, o);
    Rational s = 0;
    for (long n = x.lo(); n <= x.hi(); ++n) s += pow2(n) * x.at(n);
    EXPECT_TRUE(exact_equals(theta_eval(Theta::summation(), x), s));
  }
}

TEST(Summation, ConvergentTailsMatchPartialSums) {
  Rng g(72);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    DyadicSequence x = random_sequence(g);
    EvalResult e = theta_eval(Theta::summation(), x);
    const bool left_ok = x.left().zero || x.left().r < 2;
    const bool right_ok = x.right().zero || 2 * x.right().r < 1;
    EXPECT_EQ(e.defined, left_ok && right_ok);
    if (!e.defined) continue;
    ++checked;
    EXPECT_NEAR(to_double(e.value), static_cast<double>(brute_weighted_sum(x, 300)), 1e-9);
  }
  EXPECT_GT(checked, 30);
}

TEST(Limits, ConstantWeightedTails) {
  // 2^n x_n = 3 for n >= 2 and = 5 for n <= -1
  DyadicSequence x(-1, {q(5, 2), q(7), q(3, 4)}, Tail::Geometric(q(10), q(2)), Tail::Geometric(q(3, 2), q(1, 2)));
  EXPECT_TRUE(exact_equals(theta_eval(Theta::limit_plus(), x), q(3)));
  EXPECT_TRUE(exact_equals(theta_eval(Theta::limit_minus(), x), q(5)));
  EXPECT_TRUE(exact_equals(theta_eval(Theta::cesaro_plus(), x), q(3)));
  EXPECT_TRUE(exact_equals(theta_eval(Theta::cesaro_minus(), x), q(5)));
  EXPECT_FALSE(theta_eval(Theta::summation(), x).defined);
  DyadicSequence growing(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(1), q(1)));
  EXPECT_FALSE(theta_eval(Theta::limit_plus(), growing).defined);
}

TEST(Limits, VanishOnFiniteSequences) {
  Rng g(73);
  SequenceOptions o;
  o.tails = false;
  for (int t = 0; t < 100; ++t) {
    DyadicSequence x = random_sequence(g, o);
    EXPECT_TRUE(exact_equals(theta_eval(Theta::limit_plus(), x), 0));
    EXPECT_TRUE(exact_equals(theta_eval(Theta::limit_minus(), x), 0));
  }
}

TEST(Invariance, HalfShiftInvariantFunctionals) {
  Rng g(74);
  std::vector<DyadicSequence> xs;
  for (int t = 0; t < 100; ++t) xs.push_back(random_sequence(g));
  for (const Theta& th : {Theta::summation(), Theta::limit_plus(), Theta::limit_minus()}) {
    InvarianceReport r = invariance_probe(th, xs);
    EXPECT_TRUE(r.all_equal);
    EXPECT_GT(r.compared, 10u);
  }
}

TEST(Counterexample, WeightsAndValues) {
  const Theta th = counterexample_theta();
  for (long n = -10; n <= 10; ++n) EXPECT_EQ(th.weight(n), pow2(n) / ((1 + pow2(n)) * (1 + pow2(n + 1))));
  EXPECT_TRUE(exact_equals(theta_eval(th, DyadicSequence::unit(0)), q(1, 6)));
  EXPECT_TRUE(exact_equals(theta_eval(th, half_shift(DyadicSequence::unit(0))), q(1, 15)));
  EXPECT_TRUE(exact_equals(theta_eval(th, DyadicSequence::constant(1)), q(1)));
  EXPECT_FALSE(invariance_probe(th, {DyadicSequence::unit(0)}).all_equal);
  // partial sums telescope to 1 - 1/(1 + 2^(N+1)) - 1/(1 + 2^N)... checked term by term
  Rational partial = 0;
  for (long n = -20; n <= 20; ++n) partial += th.weight(n);
  EXPECT_EQ(partial, th.primitive(-20) - th.primitive(21));
  EXPECT_LT(std::abs(1 - to_double(partial)), 2e-6);
}

TEST(TraceEval, SummationIsTauOnDiagonals) {
  Rng g(75);
  BlockOptions o;
  o.diagonal = true;
  for (int t = 0; t < 150; ++t) {
    Operator x = random_block_operator(g, o);
    Rational tau = 0;
    for (std::size_t j = 0; j < x.matrices().size(); ++j)
      for (std::size_t i = 0; i < x.matrices()[j].exact().size(); ++i)
        tau += x.algebra().blocks()[j].w * x.matrices()[j].exact()[i][i].re;
    EXPECT_TRUE(exact_equals(trace_eval(Theta::summation(), x), tau));
  }
}

TEST(TraceEval, Diag8421) {
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{4, q(1)}}), {{q(8), q(4), q(2), q(1)}});
  EXPECT_TRUE(exact_equals(trace_eval(Theta::summation(), x), q(15)));
  EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_plus(), x), q(0)));
}

TEST(TraceEval, SingularTracesOnWeakTypeElements) {
  // 2^-n on [2^n, 2^(n+1)) for n >= 0: each cell integrates to 1
  StepFunction plus = pietsch_D(DyadicSequence(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(1), q(1, 2))));
  EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_plus(), Operator::commutative(plus)), q(1)));
  EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_minus(), Operator::commutative(plus)), q(0)));
  // 2^-n on [2^n, 2^(n+1)) for n <= 0
  StepFunction minus = pietsch_D(DyadicSequence(0, {q(1)}, Tail::Geometric(q(1), q(2)), Tail::Zero()));
  EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_minus(), Operator::commutative(minus)), q(1)));
  EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_plus(), Operator::commutative(minus)), q(0)));
}

TEST(TraceEval, LimitsVanishOnFiniteBlocks) {
  Rng g(76);
  for (int t = 0; t < 60; ++t) {
    Operator x = random_block_operator(g);
    EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_plus(), x), 0));
    EXPECT_TRUE(exact_equals(trace_eval(Theta::limit_minus(), x), 0));
  }
}

TEST(RoundTrip, SummationThroughDiagonalEmbedding) {
  Rng g(77);
  SequenceOptions o;
  o.tails = false;
  for (int t = 0; t < 100; ++t) {
    DyadicSequence x = random_sequence(g, o);
    for (const Theta& th : {Theta::summation(), Theta::limit_minus()}) {
      EvalResult back = theta_from_phi([&](const Operator& X) { return trace_eval(th, X); }, x);
      EvalResult direct = theta_eval(th, x);
      EXPECT_TRUE(back.defined && direct.defined && back.value == direct.value);
    }
  }
}

TEST(Classify, SupportsAndNormalisation) {
  ClassifyReport s = classify(Theta::summation());
  EXPECT_FALSE(s.supported_at_plus_inf);
  EXPECT_FALSE(s.supported_at_minus_inf);
  EXPECT_FALSE(s.at_chi_z.defined);
  ClassifyReport lp = classify(Theta::limit_plus());
  EXPECT_TRUE(lp.supported_at_plus_inf);
  ClassifyReport c = classify(counterexample_theta());
  EXPECT_TRUE(c.normalised);
}

TEST(ThetaByName, KnownAndUnknown) {
  EXPECT_EQ(theta_by_name("cesaro-").kind, Theta::Kind::CesaroMinus);
  EXPECT_EQ(theta_by_name("counterexample").kind, Theta::Kind::WeightedSum);
  EXPECT_THROW(theta_by_name("banach"), Error);
}
