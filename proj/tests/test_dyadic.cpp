#include <gtest/gtest.h>

#include "calkin/dyadic.hpp"
#include "calkin/random.hpp"

using namespace calkin;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

Operator random_diagonal(Rng& g) {
  BlockOptions o;
  o.diagonal = true;
  return random_block_operator(g, o);
}

// Diagonal entries of every block, flattened, with their atom weights.
struct Entries {
  std::vector<Rational> v, w;
};

Entries entries(const Operator& x) {
  Entries e;
  for (std::size_t j = 0; j < x.matrices().size(); ++j) {
    const auto& m = x.matrices()[j].exact();
    for (std::size_t i = 0; i < m.size(); ++i) {
      e.v.push_back(m[i][i].re);
      e.w.push_back(x.algebra().blocks()[j].w);
    }
  }
  return e;
}

}  // namespace

TEST(Decompose, WorkedDiagonalExample) {
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{4, q(1)}}), {{q(8), q(4), q(2), q(1)}});
  DyadicRep rep = decompose(x);
  ASSERT_EQ(rep.parts.size(), 3u);
  EXPECT_EQ(rep.parts[0].k, 1);
  EXPECT_EQ(rep.parts[2].k, 3);
  EXPECT_EQ(rep.residuals.at(0), 8);
  EXPECT_EQ(rep.residuals.at(1), 4);
  EXPECT_EQ(rep.residuals.at(2), 2);
  EXPECT_EQ(rep.residuals.at(3), 0);
  EXPECT_EQ(rep.residuals.at(-4), 8);
  // coefficients 2^-k tau(X_k): 8/2, 4/4, 3/8
  EXPECT_EQ(rep.coefficients.at(1), 4);
  EXPECT_EQ(rep.coefficients.at(2), 1);
  EXPECT_EQ(rep.coefficients.at(3), q(3, 8));
  EXPECT_TRUE(validate(rep).ok());
}

TEST(Decompose, PartsRebuildSubjectWithinSupportBounds) {
  Rng g(61);
  for (int t = 0; t < 200; ++t) {
    Operator x = random_diagonal(g);
    DyadicRep rep = decompose(x);
    Entries ex = entries(x);
    std::vector<Rational> rest = ex.v;
    long prev_k = -1000;
    for (const auto& p : rep.parts) {
      EXPECT_GT(p.k, prev_k);
      prev_k = p.k;
      Entries ep = entries(p.op);
      Rational support = 0, tau = 0;
      for (std::size_t i = 0; i < ep.v.size(); ++i) {
        if (ep.v[i] != 0) support += ep.w[i];
        tau += ep.w[i] * ep.v[i];
        rest[i] -= ep.v[i];
      }
      EXPECT_LE(support, pow2(p.k));
      EXPECT_EQ(rep.coefficients.at(p.k), tau / pow2(p.k));
      // residual after part k is the largest remaining entry
      Rational left = 0;
      for (const auto& r : rest) left = max(left, abs(r));
      EXPECT_EQ(rep.residuals.at(p.k), left);
    }
    for (const auto& r : rest) EXPECT_EQ(r, 0);
  }
}

TEST(Decompose, ResidualBoundsAgainstSingularValues) {
  Rng g(62);
  for (int t = 0; t < 200; ++t) {
    Operator x = random_diagonal(g);
    DyadicRep rep = decompose(x);
    StepFunction mu = singular_value_function(x);
    for (long n = -4; n <= 6; ++n) {
      EXPECT_LE(rep.residuals.at(n), 2 * mu.at(pow2(n - 1)));
      EXPECT_LE(mu.at(pow2(n + 1)), rep.residuals.at(n));
    }
  }
}

TEST(Validate, FlagsOversizedPart) {
  BlockAlgebra alg({BlockSpec{4, q(1)}});
  Operator x = Operator::diagonal(alg, {{q(1), q(1), q(1), q(1)}});
  DyadicRep rep = rep_from_parts(x, {DyadicPart{1, x}});
  ValidationReport r = validate(rep);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.support_ok);
  EXPECT_EQ(r.support_margin, -2);
}

TEST(Validate, FlagsPartsNotSummingToSubject) {
  BlockAlgebra alg({BlockSpec{2, q(1)}});
  Operator x = Operator::diagonal(alg, {{q(3), q(1)}});
  Operator wrong = Operator::diagonal(alg, {{q(3), q(0)}});
  ValidationReport r = validate(rep_from_parts(x, {DyadicPart{1, wrong}}));
  EXPECT_FALSE(r.sum_ok);
}

TEST(Validate, FlagsTamperedResiduals) {
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{4, q(1)}}), {{q(8), q(4), q(2), q(1)}});
  DyadicRep rep = decompose(x);
  rep.residuals = DyadicSequence(0, {q(8), q(4), q(1)});
  EXPECT_FALSE(validate(rep).residuals_ok);
}

TEST(SumReps, ValidAndLinear) {
  Rng g(63);
  for (int t = 0; t < 100; ++t) {
    BlockOptions o;
    o.diagonal = true;
    BlockAlgebra alg = random_algebra(g, o);
    Operator x = random_block_operator(g, alg, o), y = random_block_operator(g, alg, o);
    DyadicRep rx = decompose(x), ry = decompose(y);
    DyadicRep s = sum_reps(rx, ry);
    EXPECT_TRUE(validate(s).ok());
    for (long n = -4; n <= 8; ++n)
      EXPECT_EQ(s.coefficients.at(n), (rx.coefficients.at(n - 1) + ry.coefficients.at(n - 1)) / 2);
  }
}

TEST(Cohomology, WitnessForRegroupedParts) {
  Operator x = Operator::diagonal(BlockAlgebra({BlockSpec{4, q(1)}}), {{q(8), q(4), q(2), q(1)}});
  DyadicRep canon = decompose(x);
  // move the entry 4 from part 2 to part 3
  BlockAlgebra alg = x.algebra();
  DyadicRep alt = rep_from_parts(x, {DyadicPart{1, Operator::diagonal(alg, {{q(8), q(0), q(0), q(0)}})},
                                     DyadicPart{3, Operator::diagonal(alg, {{q(0), q(4), q(2), q(1)}})}});
  ASSERT_TRUE(validate(alt).ok());
  DyadicSequence b = cohomology_witness(canon, alt);
  DyadicSequence a = canon.coefficients - alt.coefficients;
  DyadicSequence rebuilt = b - half_shift(b);
  for (long n = -3; n <= 10; ++n) EXPECT_EQ(rebuilt.at(n), a.at(n));
}

TEST(Decompose, CommutativeSubjectUsesCells) {
  StepFunction f = StepFunction::pieces({q(0), q(1), q(4)}, {q(3), q(1)}, q(0));
  DyadicRep rep = decompose(Operator::commutative(f));
  EXPECT_TRUE(validate(rep).ok());
  // coefficients 2^-k times the integral of the part living on a cell of width 2^k
  Rational total = 0;
  for (long k = -10; k <= 10; ++k) total += rep.coefficients.at(k) * pow2(k);
  // the cells below 2^-10 carry the remaining 3 * 2^-10
  EXPECT_EQ(total + 3 * pow2(-10), 6);
}
