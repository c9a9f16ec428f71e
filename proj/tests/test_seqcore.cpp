#include <gtest/gtest.h>

#include "calkin/random.hpp"
#include "calkin/seqcore.hpp"

using namespace calkin;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

// sup_{k >= n} |x_k| scanning up to one past the window: the right tail has
// ratio <= 1, so its first entry is its largest.
Rational scanned_ordering_number(const DyadicSequence& x, long n) {
  Rational m = 0;
  for (long k = n; k <= std::max(n, x.hi() + 1); ++k) m = max(m, abs(x.at(k)));
  return m;
}

}  // namespace

TEST(Sequence, EvaluatesWindowAndTails) {
  DyadicSequence x(2, {q(5), q(7)}, Tail::Geometric(q(3), q(2)), Tail::Geometric(q(4), q(1, 2)));
  EXPECT_EQ(x.at(2), 5);
  EXPECT_EQ(x.at(3), 7);
  EXPECT_EQ(x.at(1), 6);
  EXPECT_EQ(x.at(0), 12);
  EXPECT_EQ(x.at(4), 2);
  EXPECT_EQ(x.at(6), q(1, 2));
}

TEST(Sequence, RejectsGrowingRightTail) {
  EXPECT_THROW(DyadicSequence(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(1), q(2))), Error);
}

TEST(Sequence, ZeroPaddingIsTrimmed) {
  DyadicSequence a(0, {q(1), q(0), q(0)});
  DyadicSequence b(0, {q(1)});
  EXPECT_EQ(a, b);
  EXPECT_EQ(DyadicSequence(-3, {q(0), q(0), q(4)}), DyadicSequence(-1, {q(4)}));
}

TEST(OrderingNumbers, SmallExample) {
  DyadicSequence x(0, {q(3), q(1), q(2)});
  DyadicSequence o = ordering_numbers(x);
  EXPECT_EQ(o.at(-5), 3);
  EXPECT_EQ(o.at(0), 3);
  EXPECT_EQ(o.at(1), 2);
  EXPECT_EQ(o.at(2), 2);
  EXPECT_EQ(o.at(3), 0);
}

TEST(OrderingNumbers, MatchesScanOnRandomSequences) {
  Rng g(11);
  for (int t = 0; t < 300; ++t) {
    DyadicSequence x = random_sequence(g);
    DyadicSequence o = ordering_numbers(x);
    for (long n = x.lo() - 8; n <= x.hi() + 8; ++n)
      ASSERT_EQ(o.at(n), scanned_ordering_number(x, n)) << x << " at " << n;
  }
}

TEST(OrderingNumbers, NonincreasingDominatingIdempotent) {
  Rng g(12);
  for (int t = 0; t < 300; ++t) {
    DyadicSequence x = random_sequence(g);
    DyadicSequence o = ordering_numbers(x);
    EXPECT_TRUE(is_nonincreasing(o));
    EXPECT_TRUE(pointwise_le(abs(x), o));
    EXPECT_EQ(ordering_numbers(o), o);
  }
}

TEST(Shift, MovesIndices) {
  Rng g(13);
  for (int t = 0; t < 200; ++t) {
    DyadicSequence x = random_sequence(g);
    long k = g.integer(-3, 3);
    DyadicSequence y = shift(x, k);
    for (long n = x.lo() - 6; n <= x.hi() + 6; ++n) ASSERT_EQ(y.at(n + k), x.at(n));
  }
}

TEST(Shift, OneSidedIndexSets) {
  DyadicSequence x = DyadicSequence(0, {q(1), q(2)}).with_index_set(IndexSet::ZPlus);
  EXPECT_THROW(shift(x, -1), Error);
  DyadicSequence y = shift(x, 1);
  EXPECT_EQ(y.at(0), 0);
  EXPECT_EQ(y.at(2), 2);
  DyadicSequence m = DyadicSequence(-1, {q(1), q(2)}).with_index_set(IndexSet::ZMinus);
  EXPECT_EQ(shift(m, 1).at(0), 1);
}

TEST(Add, PointwiseWhenTailsAgree) {
  Rng g(14);
  int compared = 0;
  for (int t = 0; t < 300; ++t) {
    DyadicSequence x = random_sequence(g), y = random_sequence(g);
    DyadicSequence s;
    try {
      s = x + y;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::IncompatibleTails);
      continue;
    }
    ++compared;
    for (long n = std::min(x.lo(), y.lo()) - 5; n <= std::max(x.hi(), y.hi()) + 5; ++n)
      ASSERT_EQ(s.at(n), x.at(n) + y.at(n));
  }
  EXPECT_GT(compared, 50);
}

TEST(Add, MismatchedRatiosAreReported) {
  DyadicSequence x(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(1), q(1, 2)));
  DyadicSequence y(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(1), q(1, 3)));
  try {
    (void)(x + y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleTails);
  }
}

TEST(PointwiseLe, AgreesWithScanWhenItHolds) {
  Rng g(15);
  for (int t = 0; t < 300; ++t) {
    DyadicSequence x = random_sequence(g), y = random_sequence(g);
    bool scan = true;
    for (long n = std::min(x.lo(), y.lo()) - 40; n <= std::max(x.hi(), y.hi()) + 40; ++n)
      scan = scan && x.at(n) <= y.at(n);
    // a scan over a finite range can only refute
    if (pointwise_le(x, y)) EXPECT_TRUE(scan);
    if (!scan) EXPECT_FALSE(pointwise_le(x, y));
  }
}

TEST(PointwiseLe, CrossingFarOut) {
  // 1000 * (1/2)^n vs (3/4)^n: the second wins eventually
  DyadicSequence a(0, {q(1000)}, Tail::Zero(), Tail::Geometric(q(500), q(1, 2)));
  DyadicSequence b(0, {q(1)}, Tail::Zero(), Tail::Geometric(q(3, 4), q(3, 4)));
  EXPECT_FALSE(pointwise_le(a, b));
  EXPECT_FALSE(pointwise_le(b, a));
}

TEST(Cohomology, SolvesCoboundaryEquation) {
  Rng g(16);
  SequenceOptions o;
  o.tails = false;
  for (int t = 0; t < 200; ++t) {
    DyadicSequence a = random_sequence(g, o);
    DyadicSequence b = solve_cohomology(a);
    DyadicSequence back = b - half_shift(b);
    for (long n = a.lo() - 4; n <= a.hi() + 12; ++n) ASSERT_EQ(back.at(n), a.at(n));
  }
}

TEST(Cohomology, RejectsLeftTail) {
  EXPECT_THROW(solve_cohomology(DyadicSequence::constant(q(1))), Error);
}

TEST(Scale, Linear) {
  DyadicSequence x(0, {q(1), q(-2)}, Tail::Geometric(q(1), q(3)), Tail::Geometric(q(2), q(1, 2)));
  DyadicSequence y = scale(q(-3, 2), x);
  for (long n = -4; n <= 5; ++n) EXPECT_EQ(y.at(n), q(-3, 2) * x.at(n));
  EXPECT_EQ(scale(q(0), x), DyadicSequence::zero());
}
