#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "calkin/opmodel.hpp"
#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"

namespace calkin {

/// Seeded source for the random test data. Uses only integer draws so the
/// stream is identical across runs on one platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<long>(v.size()) - 1))];
  }
  /// Rational in [lo, hi] with denominator at most max_den.
  Rational rational(long lo, long hi, long max_den) {
    const long den = integer(1, max_den);
    return make_rational(integer(lo * den, hi * den), den);
  }
  Rational nonzero_rational(long lo, long hi, long max_den) {
    for (;;) {
      Rational q = rational(lo, hi, max_den);
      if (q != 0) return q;
    }
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

struct SequenceOptions {
  long max_len = 12;
  bool tails = true;
  bool nonnegative = false;
  long max_den = 16;
};

/// Window of length <= 12, values in [-8, 8] with denominators <= 16, tails
/// drawn from {Zero, r in {1/2, 1, 3/2, 2}} (right tails only r <= 1).
inline DyadicSequence random_sequence(Rng& g, const SequenceOptions& o = {}) {
  const long len = g.integer(1, o.max_len);
  const long lo = g.integer(-6, 6);
  std::vector<Rational> v;
  for (long i = 0; i < len; ++i) {
    Rational q = g.rational(o.nonnegative ? 0 : -8, 8, o.max_den);
    v.push_back(q);
  }
  auto tail = [&](const std::vector<Rational>& ratios) {
    if (!o.tails || g.integer(0, static_cast<long>(ratios.size())) == 0) return Tail::Zero();
    Rational c = g.nonzero_rational(o.nonnegative ? 0 : -8, 8, o.max_den);
    return Tail::Geometric(c, g.pick(ratios));
  };
  Tail left = tail({Rational(1, 2), Rational(1), Rational(3, 2), Rational(2)});
  Tail right = tail({Rational(1, 2), Rational(1)});
  return DyadicSequence(lo, std::move(v), left, right);
}

struct StepOptions {
  long max_pieces = 8;
  bool constant_tail = false;
  bool nonnegative = false;
};

/// Finitely many pieces with breakpoints of denominator <= 4 in (0, 16].
inline StepFunction random_step(Rng& g, const StepOptions& o = {}) {
  const long n = g.integer(1, o.max_pieces);
  std::vector<Rational> bp{Rational(0)};
  std::vector<Rational> vals;
  for (long i = 0; i < n; ++i) {
    bp.push_back(bp.back() + make_rational(g.integer(1, 8), g.integer(1, 4)));
    vals.push_back(g.rational(o.nonnegative ? 0 : -8, 8, 16));
  }
  Rational v_inf = o.constant_tail ? g.rational(o.nonnegative ? 0 : -8, 8, 4) : Rational(0);
  return StepFunction::pieces(std::move(bp), std::move(vals), v_inf);
}

struct BlockOptions {
  long max_dim = 6;
  long max_blocks = 3;
  bool diagonal = false;
  bool nonnegative = false;
};

inline BlockAlgebra random_algebra(Rng& g, const BlockOptions& o = {}) {
  const std::vector<Rational> weights{Rational(1, 2), Rational(1), Rational(2)};
  std::vector<BlockSpec> blocks;
  const long nb = g.integer(1, o.max_blocks);
  for (long j = 0; j < nb; ++j) blocks.push_back({g.integer(1, o.max_dim), g.pick(weights)});
  return BlockAlgebra(std::move(blocks));
}

/// Entries uniform rationals in [-4, 4]; diagonal operators keep the exact tier.
inline Operator random_block_operator(Rng& g, const BlockAlgebra& alg, const BlockOptions& o = {}) {
  std::vector<BlockMatrix> mats;
  for (const auto& b : alg.blocks()) {
    ExactMatrix m = exact_zero(b.d);
    for (long i = 0; i < b.d; ++i)
      for (long j = 0; j < b.d; ++j) {
        if (o.diagonal && i != j) continue;
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].re = g.rational(o.nonnegative ? 0 : -4, 4, 4);
      }
    mats.emplace_back(std::move(m));
  }
  return Operator::block(alg, std::move(mats));
}

inline Operator random_block_operator(Rng& g, const BlockOptions& o = {}) {
  return random_block_operator(g, random_algebra(g, o), o);
}

}  // namespace calkin
