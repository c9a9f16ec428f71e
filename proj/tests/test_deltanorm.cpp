#include <gtest/gtest.h>

#include <cmath>

#include "calkin/deltanorm.hpp"
#include "calkin/random.hpp"
#include "calkin/transfer.hpp"

using namespace calkin;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

// Integral of |f|^p over explicit pieces, rooted for p >= 1; p < 1 keeps the
// p-integral, which is the subadditive quantity.
double reference_lp(const StepFunction& f, double p) {
  long double s = 0;
  for (std::size_t i = 0; i < f.values().size(); ++i)
    s += std::pow(std::fabs(static_cast<long double>(to_double(f.values()[i]))), static_cast<long double>(p)) *
         static_cast<long double>(to_double(f.breakpoints()[i + 1] - f.breakpoints()[i]));
  return static_cast<double>(p >= 1 ? std::pow(s, 1.0L / static_cast<long double>(p)) : s);
}

double reference_seq_lp(const DyadicSequence& x, double p, long reach) {
  long double s = 0;
  for (long n = x.lo() - reach; n <= x.hi() + reach; ++n)
    s += std::ldexp(std::pow(std::fabs(static_cast<long double>(to_double(x.at(n)))), static_cast<long double>(p)),
                    static_cast<int>(n));
  return static_cast<double>(p >= 1 ? std::pow(s, 1.0L / static_cast<long double>(p)) : s);
}

}  // namespace

TEST(DeltaNorm, ParsesNames) {
  EXPECT_EQ(parse_norm("l1").name(), "l1");
  EXPECT_EQ(parse_norm("linf").name(), "linf");
  EXPECT_EQ(parse_norm("lp:1/2").name(), "lp:1/2");
  EXPECT_EQ(parse_norm("lp:2").name(), "lp:2");
  EXPECT_EQ(parse_norm("sum:l1,linf").name(), "sum(l1,linf)");
  EXPECT_EQ(parse_norm("sum:sum:l1,lp:2,linf").name(), "sum(sum(l1,lp:2),linf)");
  EXPECT_THROW(parse_norm("lp:0"), Error);
  EXPECT_THROW(parse_norm("l7"), Error);
}

TEST(DeltaNorm, ExactRootsStayRational) {
  StepFunction f = StepFunction::pieces({q(0), q(1), q(5)}, {q(3), q(1)}, q(0));
  NormValue l2 = norm_eval(DeltaNorm::lp(2), f);  // sqrt(9 + 4) is irrational
  EXPECT_FALSE(l2.exact);
  EXPECT_NEAR(l2.to_double(), std::sqrt(13.0), 1e-15);
  StepFunction g = StepFunction::pieces({q(0), q(1), q(8)}, {q(3), q(2)}, q(0));  // 9 + 28 = 37
  StepFunction h = StepFunction::pieces({q(0), q(4), q(9)}, {q(2), q(3)}, q(0));  // 16 + 45 = 61
  EXPECT_FALSE(norm_eval(DeltaNorm::lp(2), g).exact);
  StepFunction e = StepFunction::pieces({q(0), q(16), q(25)}, {q(1), q(1)}, q(0));  // 25
  NormValue l2e = norm_eval(DeltaNorm::lp(2), e);
  EXPECT_TRUE(l2e.exact);
  EXPECT_EQ(l2e.value, 5);
  EXPECT_EQ(norm_eval(DeltaNorm::linf(), h).value, 3);
  EXPECT_EQ(norm_eval(DeltaNorm::lp(1), h).value, 23);
}

TEST(DeltaNorm, FunctionNormsMatchPieces) {
  Rng g(81);
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g);
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
      NormValue v = norm_eval(DeltaNorm::lp(from_double(p)), f);
      EXPECT_NEAR(v.to_double(), reference_lp(f, p), 1e-12 * std::max(1.0, reference_lp(f, p)));
    }
  }
}

TEST(DeltaNorm, ConstantTailIsInfiniteExceptInLinf) {
  StepFunction f = StepFunction::pieces({q(0), q(1)}, {q(3)}, q(1));
  EXPECT_TRUE(norm_eval(DeltaNorm::lp(1), f).infinite);
  EXPECT_EQ(norm_eval(DeltaNorm::linf(), f).value, 3);
}

TEST(DeltaNorm, SequenceNormsMatchPartialSums) {
  Rng g(82);
  int finite = 0;
  for (int t = 0; t < 200; ++t) {
    DyadicSequence x = random_sequence(g);
    for (double p : {0.5, 1.0, 2.0}) {
      NormValue v = norm_eval(DeltaNorm::lp(from_double(p)), x);
      if (v.infinite) continue;
      ++finite;
      const double ref = reference_seq_lp(x, p, 400);
      EXPECT_NEAR(v.to_double(), ref, 1e-9 * std::max(1.0, ref));
    }
  }
  EXPECT_GT(finite, 100);
}

TEST(DeltaNorm, TransferThroughPietschD) {
  Rng g(83);
  for (int t = 0; t < 200; ++t) {
    DyadicSequence x = random_sequence(g);
    for (const auto& N : {DeltaNorm::lp(1), DeltaNorm::linf(), DeltaNorm::lp(q(1, 2)), DeltaNorm::lp(2)})
      EXPECT_TRUE(same_norm(norm_eval(N, x), norm_eval(N, pietsch_D(x)))) << N.name();
  }
}

TEST(DeltaNorm, SumNormAddsAndTakesLargerConstant) {
  DeltaNorm s = DeltaNorm::sum(DeltaNorm::lp(1), DeltaNorm::linf());
  StepFunction f = StepFunction::pieces({q(0), q(2)}, {q(3)}, q(0));
  EXPECT_EQ(norm_eval(s, f).value, 9);
  EXPECT_EQ(s.constant(), 1);
}

TEST(StableNorm, SandwichOnRandomOperators) {
  Rng g(84);
  for (int t = 0; t < 80; ++t) {
    Operator x = random_block_operator(g);
    for (const auto& N : {DeltaNorm::lp(1), DeltaNorm::linf(), DeltaNorm::lp(2)}) {
      NormValue a = norm_eval(N, x), b = stable_norm(N, x);
      EXPECT_TRUE(norm_le(a, b, 1e-9));
      EXPECT_LE(b.to_double(), 2 * to_double(N.constant()) * a.to_double() * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST(StableNorm, IndicatorExample) {
  // chi_[0,3): ||.||_1 = 3; D Phi rounds the cell [2, 4) up, giving 4
  Operator x = Operator::commutative(StepFunction::indicator(q(0), q(3)));
  EXPECT_EQ(norm_eval(DeltaNorm::lp(1), x).value, 3);
  EXPECT_EQ(stable_norm(DeltaNorm::lp(1), x).value, 4);
}

TEST(Constants, DeclaredConstantsHold) {
  for (const auto& N : {DeltaNorm::lp(1), DeltaNorm::linf(), DeltaNorm::lp(q(1, 2)), DeltaNorm::lp(2)}) {
    ConstantsReport r = constants_report(N, 60, 7);
    EXPECT_TRUE(r.ok()) << N.name();
  }
  ConstantsReport l1 = constants_report(DeltaNorm::lp(1), 60, 7);
  EXPECT_DOUBLE_EQ(l1.l1_shift_ratio_min, 2.0);
}

TEST(Dilation, L1DoublesExactly) {
  Rng g(85);
  for (int t = 0; t < 100; ++t) {
    StepFunction f = random_step(g);
    EXPECT_EQ(norm_eval(DeltaNorm::lp(1), dilate(f, q(2))).value, 2 * norm_eval(DeltaNorm::lp(1), f).value);
  }
}
