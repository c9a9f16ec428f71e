#include <gtest/gtest.h>

#include "calkin/random.hpp"
#include "calkin/stepfn.hpp"
#include "oracles.hpp"

using namespace calkin;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

oracle::Pieces pieces_of(const StepFunction& f) {
  return {f.breakpoints(), f.values()};
}

// Sample points in (0, inf): breakpoints, midpoints, and a few points beyond.
std::vector<Rational> probes(const oracle::Pieces& p) {
  std::vector<Rational> out;
  for (std::size_t i = 0; i + 1 < p.bp.size(); ++i) {
    if (p.bp[i] > 0) out.push_back(p.bp[i]);
    out.push_back((p.bp[i] + p.bp[i + 1]) / 2);
  }
  if (p.bp.back() > 0) out.push_back(p.bp.back());
  out.push_back(p.bp.back() + 1);
  return out;
}

}  // namespace

TEST(StepFunction, EvaluatesRightContinuously) {
  StepFunction f = StepFunction::pieces({q(0), q(1), q(3)}, {q(5), q(2)}, q(1));
  EXPECT_EQ(f.at(q(1, 2)), 5);
  EXPECT_THROW(f.at(q(0)), Error);
  EXPECT_EQ(f.at(q(1)), 2);
  EXPECT_EQ(f.at(q(5, 2)), 2);
  EXPECT_EQ(f.at(q(3)), 1);
  EXPECT_EQ(f.at(q(100)), 1);
}

TEST(StepFunction, ZeroTailCells) {
  // 3 * 2^(0 - n) on [2^n, 2^(n+1)) below 1
  StepFunction f(ZeroTail{q(3), q(2), 0}, {q(1), q(2)}, {q(1)}, InfinityTail::Constant(0));
  EXPECT_EQ(f.at(q(1, 2)), 6);
  EXPECT_EQ(f.at(q(3, 16)), 24);
  EXPECT_EQ(f.at(q(3, 2)), 1);
}

TEST(Integrate, MatchesPieceSum) {
  Rng g(21);
  for (int t = 0; t < 300; ++t) {
    StepFunction f = random_step(g);
    oracle::Pieces p = pieces_of(f);
    Rational a = g.rational(0, 20, 4), b = a + g.rational(0, 10, 3);
    EXPECT_EQ(integrate(f, a, b).value(), p.integral(a, b));
  }
}

TEST(Integrate, GeometricTails) {
  // sum_{n < 0} 2^n * (1/2)^(-n) ... with r = 1/2 near zero: cells c r^(lo-n)
  StepFunction f(ZeroTail{q(1), q(1, 2), 0}, {q(1), q(2)}, {q(0)}, InfinityTail::Constant(0));
  // cells n = -1, -2, ... have value (1/2)^(-n) = 2^n and width 2^n: sum 4^n = 1/3
  EXPECT_EQ(integrate(f, q(0), std::nullopt).value(), q(1, 3));
  // growing tail near zero with r = 2: value 2^-n, width 2^n gives 1 per cell
  StepFunction h(ZeroTail{q(1), q(2), 0}, {q(1), q(2)}, {q(0)}, InfinityTail::Constant(0));
  EXPECT_TRUE(integrate(h, q(0), q(1)).is_infinite());
  StepFunction c = StepFunction::constant(q(2));
  EXPECT_TRUE(integrate(c, q(0), std::nullopt).is_infinite());
}

TEST(Distribution, MatchesPieceMeasure) {
  Rng g(22);
  for (int t = 0; t < 300; ++t) {
    StepFunction f = random_step(g);
    oracle::Pieces p = pieces_of(f);
    Rational s = g.rational(0, 8, 4);
    Rational m = 0;
    for (std::size_t i = 0; i < p.v.size(); ++i)
      if (abs(p.v[i]) > s) m += p.bp[i + 1] - p.bp[i];
    EXPECT_EQ(distribution(f, s).value(), m);
  }
}

TEST(Rearrangement, MatchesSortedPieces) {
  Rng g(23);
  for (int t = 0; t < 300; ++t) {
    StepFunction f = random_step(g);
    StepFunction r = decreasing_rearrangement(f);
    oracle::Pieces o = oracle::rearranged(pieces_of(f));
    for (const auto& s : probes(o)) ASSERT_EQ(r.at(s), o.at(s)) << f << " at " << to_string(s);
    EXPECT_TRUE(is_nonincreasing(r));
  }
}

TEST(Rearrangement, PreservesIntegralsOfAbsoluteValue) {
  Rng g(24);
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g);
    StepFunction r = decreasing_rearrangement(f);
    EXPECT_EQ(integrate(r, q(0), std::nullopt), integrate(abs(f), q(0), std::nullopt));
    for (int k = 0; k < 6; ++k) {
      Rational s = g.rational(0, 8, 4);
      EXPECT_EQ(distribution(r, s), distribution(f, s));
    }
  }
}

TEST(Rearrangement, IsIdempotentAndKeepsConstantFloor) {
  Rng g(25);
  StepOptions o;
  o.constant_tail = true;
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g, o);
    StepFunction r = decreasing_rearrangement(f);
    EXPECT_EQ(decreasing_rearrangement(r), r);
    EXPECT_EQ(r.v_inf(), abs(f.v_inf()));
  }
}

TEST(Rearrangement, RearrangedIntegralOverInitialSegment) {
  Rng g(26);
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g);
    oracle::Pieces o = oracle::rearranged(pieces_of(f));
    Rational b = g.rational(0, 30, 4);
    EXPECT_EQ(rearranged_integral(f, q(0), b).value(), o.integral(q(0), b));
  }
}

TEST(Dilate, RescalesArgument) {
  Rng g(27);
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g);
    Rational s = g.nonzero_rational(0, 4, 3);
    StepFunction d = dilate(f, s);
    for (const auto& p : probes(pieces_of(d))) ASSERT_EQ(d.at(p), f.at(p / s));
    EXPECT_EQ(integrate(d, q(0), std::nullopt).value(), s * integrate(f, q(0), std::nullopt).value());
  }
}

TEST(Dilate, GeometricTailsNeedPowersOfTwo) {
  StepFunction f(ZeroTail{q(1), q(2), 0}, {q(1), q(2)}, {q(1)}, InfinityTail::Constant(0));
  EXPECT_THROW(dilate(f, q(3)), Error);
  StepFunction d = dilate(f, q(4));
  EXPECT_EQ(d.at(q(2)), f.at(q(1, 2)));
}

TEST(Add, PointwiseSum) {
  Rng g(28);
  for (int t = 0; t < 200; ++t) {
    StepFunction f = random_step(g), h = random_step(g);
    StepFunction s = f + h;
    for (const auto& p : probes(pieces_of(s))) ASSERT_EQ(s.at(p), f.at(p) + h.at(p));
  }
}

TEST(Add, MismatchedTailsAreRejected) {
  StepFunction f(ZeroTail{q(1), q(2), 0}, {q(1), q(2)}, {q(1)}, InfinityTail::Constant(0));
  StepFunction h(ZeroTail{q(1), q(3), 0}, {q(1), q(2)}, {q(1)}, InfinityTail::Constant(0));
  try {
    (void)(f + h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleTails);
  }
}

TEST(Rearrangement, InterleavedGeometricTailIsNotRepresentable) {
  // tail values (1/2)^k at infinity interleave with the piece value 3/16
  StepFunction f(std::nullopt, {q(0), q(1), q(2)}, {q(0), q(3, 16)}, InfinityTail::Geometric(q(1), q(1, 2), 0));
  try {
    (void)decreasing_rearrangement(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonRepresentable);
  }
}
