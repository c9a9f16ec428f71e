#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"
#include "calkin/transfer.hpp"

namespace calkin {

inline constexpr double kDefaultEpsilon = 1e-9;

/// Complex number with rational parts.
struct CRational {
  Rational re{0};
  Rational im{0};

  friend CRational operator+(const CRational& a, const CRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend CRational operator-(const CRational& a, const CRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend CRational operator*(const CRational& a, const CRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const CRational& a, const CRational& b) {
    return a.re == b.re && a.im == b.im;
  }
  CRational conj() const { return {re, -im}; }
  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
  bool is_zero() const { return re == 0 && im == 0; }
};

using ExactMatrix = std::vector<std::vector<CRational>>;

inline ExactMatrix exact_zero(long d) {
  return ExactMatrix(static_cast<std::size_t>(d), std::vector<CRational>(static_cast<std::size_t>(d)));
}

inline ExactMatrix exact_diag(const std::vector<Rational>& diag) {
  ExactMatrix m = exact_zero(static_cast<long>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) m[i][i].re = diag[i];
  return m;
}

/// sqrt(q) when it is rational.
inline std::optional<Rational> exact_sqrt(const Rational& q) {
  if (q < 0) return std::nullopt;
  if (q == 0) return Rational(0);
  if (!mpz_perfect_square_p(q.get_num_mpz_t()) || !mpz_perfect_square_p(q.get_den_mpz_t()))
    return std::nullopt;
  Integer n, d;
  mpz_sqrt(n.get_mpz_t(), q.get_num_mpz_t());
  mpz_sqrt(d.get_mpz_t(), q.get_den_mpz_t());
  Rational r(n, d);
  r.canonicalize();
  return r;
}

/// One block of a block-matrix operator: exact entries when known, and always
/// a floating copy for the numeric tier.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  explicit BlockMatrix(ExactMatrix m) : exact_(std::move(m)) {
    const long d = static_cast<long>(exact_->size());
    num_.resize(d, d);
    for (long i = 0; i < d; ++i) {
      if (static_cast<long>((*exact_)[static_cast<std::size_t>(i)].size()) != d)
        throw Error(ErrorCode::InvalidArgument, "block matrix must be square");
      for (long j = 0; j < d; ++j)
        num_(i, j) = (*exact_)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].to_complex();
    }
  }
  explicit BlockMatrix(Eigen::MatrixXcd m) : num_(std::move(m)) {
    if (num_.rows() != num_.cols()) throw Error(ErrorCode::InvalidArgument, "block matrix must be square");
  }

  long dim() const { return static_cast<long>(num_.rows()); }
  bool is_exact() const { return exact_.has_value(); }
  const ExactMatrix& exact() const { return *exact_; }
  const Eigen::MatrixXcd& numeric() const { return num_; }

  friend BlockMatrix operator+(const BlockMatrix& a, const BlockMatrix& b) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::InvalidArgument, "block dimensions differ");
    if (a.is_exact() && b.is_exact()) {
      ExactMatrix m = a.exact();
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = m[i][j] + b.exact()[i][j];
      return BlockMatrix(std::move(m));
    }
    return BlockMatrix(Eigen::MatrixXcd(a.numeric() + b.numeric()));
  }
  BlockMatrix scaled(const Rational& alpha) const {
    if (is_exact()) {
      ExactMatrix m = exact();
      for (auto& row : m)
        for (auto& e : row) e = CRational{alpha * e.re, alpha * e.im};
      return BlockMatrix(std::move(m));
    }
    return BlockMatrix(Eigen::MatrixXcd(num_ * to_double(alpha)));
  }

  CRational exact_trace() const {
    CRational t;
    for (std::size_t i = 0; i < exact_->size(); ++i) t = t + (*exact_)[i][i];
    return t;
  }

  /// X^* X, exact.
  ExactMatrix exact_gram() const {
    const auto& m = *exact_;
    const std::size_t d = m.size();
    ExactMatrix g(d, std::vector<CRational>(d));
    // sparse inputs (diagonals) dominate, so skip zero entries
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < d; ++i) {
        if (m[k][i].is_zero()) continue;
        const CRational a = m[k][i].conj();
        for (std::size_t j = 0; j < d; ++j)
          if (!m[k][j].is_zero()) {
            const CRational p = a * m[k][j];
            g[i][j].re += p.re;
            g[i][j].im += p.im;
          }
      }
    return g;
  }

 private:
  std::optional<ExactMatrix> exact_;
  Eigen::MatrixXcd num_;
};

struct BlockSpec {
  long d = 1;
  Rational w{1};
};

/// Direct sum of matrix algebras M_{d_j} with trace sum_j w_j tr_j.
class BlockAlgebra {
 public:
  BlockAlgebra() = default;
  explicit BlockAlgebra(std::vector<BlockSpec> blocks) : blocks_(std::move(blocks)) {
    for (const auto& b : blocks_)
      if (b.d <= 0 || b.w <= 0)
        throw Error(ErrorCode::InvalidArgument, "blocks need positive dimension and weight");
  }
  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  Rational trace_of_identity() const {
    Rational t = 0;
    for (const auto& b : blocks_) t += b.w * b.d;
    return t;
  }
  friend bool operator==(const BlockAlgebra& a, const BlockAlgebra& b) {
    if (a.blocks_.size() != b.blocks_.size()) return false;
    for (std::size_t i = 0; i < a.blocks_.size(); ++i)
      if (a.blocks_[i].d != b.blocks_[i].d || a.blocks_[i].w != b.blocks_[i].w) return false;
    return true;
  }

 private:
  std::vector<BlockSpec> blocks_;
};

/// Singular values of one block, descending, with right singular vectors.
struct BlockSvd {
  bool exact = false;
  std::vector<Rational> values;           // exact tier (also filled from doubles otherwise)
  std::vector<std::size_t> basis;         // exact tier: index of the basis vector per value
  Eigen::VectorXd numeric_values;         // numeric tier
  Eigen::MatrixXcd right_vectors;         // numeric tier, columns match numeric_values
};

inline BlockSvd block_svd(const BlockMatrix& m, double eps = kDefaultEpsilon) {
  BlockSvd out;
  const long d = m.dim();
  if (m.is_exact()) {
    ExactMatrix g = m.exact_gram();
    bool diagonal = true;
    for (long i = 0; i < d && diagonal; ++i)
      for (long j = 0; j < d; ++j)
        if (i != j && !g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].is_zero()) {
          diagonal = false;
          break;
        }
    if (diagonal) {
      std::vector<std::pair<Rational, std::size_t>> sv;
      bool ok = true;
      for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
        auto s = exact_sqrt(g[i][i].re);
        if (!s) {
          ok = false;
          break;
        }
        sv.emplace_back(*s, i);
      }
      if (ok) {
        std::stable_sort(sv.begin(), sv.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        out.exact = true;
        for (const auto& [s, i] : sv) {
          out.values.push_back(s);
          out.basis.push_back(i);
        }
        return out;
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m.numeric(), Eigen::ComputeFullV);
  out.numeric_values = svd.singularValues();
  out.right_vectors = svd.matrixV();
  for (long i = 0; i < out.numeric_values.size(); ++i) {
    double s = out.numeric_values(i);
    if (!std::isfinite(s)) throw Error(ErrorCode::NumericFailure, "singular value solver failed");
    if (s < eps) {
      out.numeric_values(i) = 0;
      s = 0;
    }
    out.values.push_back(from_double(s));
  }
  return out;
}

/// Element of the model algebra: a function on (0, inf), or a block matrix.
class Operator {
 public:
  Operator() : data_(StepFunction()) {}
  static Operator commutative(StepFunction f) {
    Operator op;
    op.data_ = std::move(f);
    return op;
  }
  static Operator block(BlockAlgebra alg, std::vector<BlockMatrix> mats) {
    if (mats.size() != alg.size()) throw Error(ErrorCode::InvalidArgument, "one matrix per block");
    for (std::size_t j = 0; j < mats.size(); ++j)
      if (mats[j].dim() != alg.blocks()[j].d)
        throw Error(ErrorCode::InvalidArgument, "matrix size does not match block dimension");
    Operator op;
    op.data_ = Blocks{std::move(alg), std::move(mats)};
    return op;
  }
  /// Block-diagonal operator with the given rational diagonals.
  static Operator diagonal(BlockAlgebra alg, const std::vector<std::vector<Rational>>& diags) {
    std::vector<BlockMatrix> mats;
    for (const auto& d : diags) mats.emplace_back(exact_diag(d));
    return block(std::move(alg), std::move(mats));
  }
  static Operator zero_like(const Operator& x) {
    if (x.is_commutative()) return commutative(StepFunction());
    std::vector<BlockMatrix> mats;
    for (const auto& b : x.algebra().blocks()) mats.emplace_back(exact_zero(b.d));
    return block(x.algebra(), std::move(mats));
  }

  bool is_commutative() const { return std::holds_alternative<StepFunction>(data_); }
  const StepFunction& function() const { return std::get<StepFunction>(data_); }
  const BlockAlgebra& algebra() const { return std::get<Blocks>(data_).alg; }
  const std::vector<BlockMatrix>& matrices() const { return std::get<Blocks>(data_).mats; }
  bool is_exact() const {
    if (is_commutative()) return true;
    return std::all_of(matrices().begin(), matrices().end(), [](const auto& m) { return m.is_exact(); });
  }

  friend Operator operator+(const Operator& a, const Operator& b) {
    if (a.is_commutative() != b.is_commutative())
      throw Error(ErrorCode::InvalidArgument, "operators live in different algebras");
    if (a.is_commutative()) return commutative(a.function() + b.function());
    if (!(a.algebra() == b.algebra()))
      throw Error(ErrorCode::InvalidArgument, "operators live in different algebras");
    std::vector<BlockMatrix> mats;
    for (std::size_t j = 0; j < a.matrices().size(); ++j) mats.push_back(a.matrices()[j] + b.matrices()[j]);
    return block(a.algebra(), std::move(mats));
  }
  Operator scaled(const Rational& alpha) const {
    if (is_commutative()) return commutative(scale(alpha, function()));
    std::vector<BlockMatrix> mats;
    for (const auto& m : matrices()) mats.push_back(m.scaled(alpha));
    return block(algebra(), std::move(mats));
  }
  friend Operator operator-(const Operator& a, const Operator& b) { return a + b.scaled(Rational(-1)); }

 private:
  struct Blocks {
    BlockAlgebra alg;
    std::vector<BlockMatrix> mats;
  };
  std::variant<StepFunction, Blocks> data_;
};

/// Trace value: exact rational real part (possibly infinite for functions),
/// rational imaginary part.
struct TraceValue {
  Extended re;
  Rational im{0};
  bool exact = true;
};

inline TraceValue trace(const Operator& x) {
  if (x.is_commutative()) return {integrate(x.function(), Rational(0), std::nullopt), Rational(0), true};
  TraceValue t{Extended(Rational(0)), Rational(0), true};
  if (x.is_exact()) {
    Rational re = 0, im = 0;
    for (std::size_t j = 0; j < x.matrices().size(); ++j) {
      CRational tr = x.matrices()[j].exact_trace();
      re += x.algebra().blocks()[j].w * tr.re;
      im += x.algebra().blocks()[j].w * tr.im;
    }
    return {Extended(re), im, true};
  }
  std::complex<double> s = 0;
  for (std::size_t j = 0; j < x.matrices().size(); ++j)
    s += to_double(x.algebra().blocks()[j].w) * x.matrices()[j].numeric().trace();
  t.re = Extended(from_double(s.real()));
  t.im = from_double(s.imag());
  t.exact = false;
  return t;
}

inline std::vector<BlockSvd> block_svds(const Operator& x, double eps = kDefaultEpsilon);

namespace detail {

inline StepFunction mu_from_svds(const Operator& x, const std::vector<BlockSvd>& svds) {
  std::map<Rational, Rational, std::greater<>> levels;
  for (std::size_t j = 0; j < svds.size(); ++j)
    for (const auto& v : svds[j].values)
      if (v > 0) levels[v] += x.algebra().blocks()[j].w;
  std::vector<Rational> bp{Rational(0)};
  std::vector<Rational> vals;
  for (const auto& [v, len] : levels) {
    bp.push_back(bp.back() + len);
    vals.push_back(v);
  }
  return StepFunction::pieces(std::move(bp), std::move(vals));
}

}  // namespace detail

/// mu(X): decreasing step function of singular values, each of length w_j.
inline StepFunction singular_value_function(const Operator& x, double eps = kDefaultEpsilon) {
  if (x.is_commutative()) return decreasing_rearrangement(x.function());
  return detail::mu_from_svds(x, block_svds(x, eps));
}

/// mu(t, X).
inline Rational mu_at(const Operator& x, const Rational& t) {
  if (x.is_commutative()) return rearranged_value(x.function(), t);
  return singular_value_function(x).at(t);
}

/// ||X|| = mu(0+, X).
inline Rational uniform_norm(const Operator& x) {
  if (x.is_commutative()) {
    const StepFunction& f = x.function();
    if (f.zero_tail() && f.zero_tail()->r > 1)
      throw Error(ErrorCode::UnboundedResult, "unbounded near zero");
    detail::Rearranger R(f);
    if (!R.ensure_top()) return R.floor();
    return R.levels().begin()->first;
  }
  StepFunction m = singular_value_function(x);
  return m.values().empty() ? Rational(0) : m.values().front();
}

/// Projection in the model: per-block projector matrices, or a 0/1 function.
struct ProjectionSpec {
  bool commutative = false;
  StepFunction indicator;                           // commutative case
  std::vector<Eigen::MatrixXcd> projectors;         // block case
  std::vector<std::optional<std::vector<std::size_t>>> basis;  // exact selections
  std::vector<long> ranks;
  Extended trace;
};

enum class TiePolicy { Throw, Cluster };

namespace detail {

/// chi_{|f| > s}.
inline StepFunction level_set_indicator(const StepFunction& f, const Rational& s) {
  struct Segment {
    Rational a, b;
    int v;
  };
  std::vector<Segment> segs;
  if (const auto& zt = f.zero_tail()) {
    const Rational c = abs(zt->c);
    if (zt->r > 1) {
      long n = zt->lo;
      while (c * pow(zt->r, zt->lo - n + 1) <= s) --n;
      segs.push_back({Rational(0), pow2(n), 1});
      for (long k = n; k < zt->lo; ++k) segs.push_back({pow2(k), pow2(k + 1), 0});
    } else if (s == 0) {
      segs.push_back({Rational(0), pow2(zt->lo), 1});
    } else {
      long n = zt->lo - 1;
      while (c * pow(zt->r, zt->lo - n) > s) --n;
      segs.push_back({Rational(0), pow2(n + 1), 0});
      for (long k = n + 1; k < zt->lo; ++k) segs.push_back({pow2(k), pow2(k + 1), 1});
    }
  }
  for (std::size_t i = 0; i < f.values().size(); ++i)
    segs.push_back({f.breakpoints()[i], f.breakpoints()[i + 1], abs(f.values()[i]) > s ? 1 : 0});
  const InfinityTail& t = f.infinity_tail();
  Rational v_inf = 0;
  if (t.geometric) {
    if (s == 0) {
      v_inf = 1;
    } else {
      for (long n = t.hi + 1; abs(t.c) * pow(t.r, n - t.hi) > s; ++n)
        segs.push_back({pow2(n), pow2(n + 1), 1});
    }
  } else if (abs(t.v) > s) {
    v_inf = 1;
  }
  std::vector<Rational> bp{Rational(0)};
  std::vector<Rational> vals;
  for (const auto& sg : segs) {
    if (sg.b <= bp.back()) continue;
    bp.push_back(sg.b);
    vals.push_back(Rational(sg.v));
  }
  return StepFunction::pieces(std::move(bp), std::move(vals), v_inf);
}

}  // namespace detail

inline std::vector<BlockSvd> block_svds(const Operator& x, double eps) {
  std::vector<BlockSvd> out;
  for (const auto& m : x.matrices()) out.push_back(block_svd(m, eps));
  return out;
}

/// Spectral projection of a block operator from precomputed block SVDs.
inline ProjectionSpec spectral_projection(const Operator& x, const std::vector<BlockSvd>& svds, const Rational& s,
                                          TiePolicy ties = TiePolicy::Throw, double eps = kDefaultEpsilon) {
  if (s < 0) throw Error(ErrorCode::InvalidArgument, "threshold must be >= 0");
  ProjectionSpec p;
  Rational tr = 0;
  const double sd = to_double(s);
  for (std::size_t j = 0; j < x.matrices().size(); ++j) {
    const BlockMatrix& m = x.matrices()[j];
    const BlockSvd& svd = svds[j];
    const long d = m.dim();
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
    long rank = 0;
    if (svd.exact) {
      std::vector<std::size_t> sel;
      for (std::size_t i = 0; i < svd.values.size(); ++i)
        if (svd.values[i] > s) {
          sel.push_back(svd.basis[i]);
          P(static_cast<long>(svd.basis[i]), static_cast<long>(svd.basis[i])) = 1;
        }
      std::sort(sel.begin(), sel.end());
      rank = static_cast<long>(sel.size());
      p.basis.emplace_back(std::move(sel));
    } else {
      for (long i = 0; i < svd.numeric_values.size(); ++i) {
        const double v = svd.numeric_values(i);
        if (std::abs(v - sd) < eps) {
          if (ties == TiePolicy::Throw)
            throw Error(ErrorCode::TieAtThreshold, "singular value within tolerance of the threshold");
          continue;
        }
        if (v > sd) {
          P += svd.right_vectors.col(i) * svd.right_vectors.col(i).adjoint();
          ++rank;
        }
      }
      p.basis.emplace_back(std::nullopt);
    }
    p.projectors.push_back(std::move(P));
    p.ranks.push_back(rank);
    tr += x.algebra().blocks()[j].w * rank;
  }
  p.trace = Extended(tr);
  return p;
}

/// E^{|X|}(s, inf): projection onto singular directions with value > s.
inline ProjectionSpec spectral_projection(const Operator& x, const Rational& s,
                                          TiePolicy ties = TiePolicy::Throw,
                                          double eps = kDefaultEpsilon) {
  if (s < 0) throw Error(ErrorCode::InvalidArgument, "threshold must be >= 0");
  if (x.is_commutative()) {
    ProjectionSpec p;
    p.commutative = true;
    p.indicator = detail::level_set_indicator(x.function(), s);
    p.trace = distribution(x.function(), s);
    return p;
  }
  return spectral_projection(x, block_svds(x, eps), s, ties, eps);
}

/// s(X) = E^{|X|}(0, inf).
inline ProjectionSpec support_projection(const Operator& x, double eps = kDefaultEpsilon) {
  return spectral_projection(x, Rational(0), TiePolicy::Cluster, eps);
}

/// X (P - Q) for projections P >= Q of the same block operator.
inline Operator compress(const Operator& x, const ProjectionSpec& p, const ProjectionSpec* q = nullptr) {
  if (x.is_commutative())
    throw Error(ErrorCode::InvalidArgument, "compression is defined for block operators");
  std::vector<BlockMatrix> mats;
  for (std::size_t j = 0; j < x.matrices().size(); ++j) {
    const BlockMatrix& m = x.matrices()[j];
    const bool exact_sel = m.is_exact() && p.basis[j] && (!q || q->basis[j]);
    if (exact_sel) {
      std::vector<bool> keep(static_cast<std::size_t>(m.dim()), false);
      for (auto i : *p.basis[j]) keep[i] = true;
      if (q)
        for (auto i : *q->basis[j]) keep[i] = false;
      ExactMatrix e = m.exact();
      for (auto& row : e)
        for (std::size_t c = 0; c < row.size(); ++c)
          if (!keep[c]) row[c] = CRational{};
      mats.emplace_back(std::move(e));
    } else {
      Eigen::MatrixXcd P = q ? Eigen::MatrixXcd(p.projectors[j] - q->projectors[j]) : p.projectors[j];
      mats.emplace_back(Eigen::MatrixXcd(m.numeric() * P));
    }
  }
  return Operator::block(x.algebra(), std::move(mats));
}

/// Phi X = { mu(2^n, X) }.
inline DyadicSequence phi_op(const Operator& x) {
  if (x.is_commutative()) return phi_sample(x.function());
  return phi_sample(singular_value_function(x));
}

/// Target of the diagonal embedding: the commutative model, or a block algebra.
using EmbedTarget = std::optional<BlockAlgebra>;

namespace detail {

/// Assigns atoms (block, count) to each cell so that weights sum to 2^n.
inline bool tile_cells(const std::vector<long>& cells, std::size_t idx,
                       const std::vector<BlockSpec>& blocks, std::vector<long>& avail,
                       std::vector<std::vector<long>>& use) {
  if (idx == cells.size()) return true;
  const Rational need = pow2(cells[idx]);
  std::vector<long> counts(blocks.size(), 0);
  std::function<bool(std::size_t, Rational)> rec = [&](std::size_t j, Rational rem) -> bool {
    if (rem == 0) {
      use[idx] = counts;
      for (std::size_t k = 0; k < blocks.size(); ++k) avail[k] -= counts[k];
      if (tile_cells(cells, idx + 1, blocks, avail, use)) return true;
      for (std::size_t k = 0; k < blocks.size(); ++k) avail[k] += counts[k];
      return false;
    }
    if (j == blocks.size()) return false;
    Rational maxc_q = rem / blocks[j].w;
    long maxc = std::min<long>(avail[j], static_cast<long>(mpz_class(maxc_q.get_num() / maxc_q.get_den()).get_si()));
    for (long c = maxc; c >= 0; --c) {
      counts[j] = c;
      if (rec(j + 1, rem - blocks[j].w * c)) return true;
    }
    counts[j] = 0;
    return false;
  };
  return rec(0, need);
}

}  // namespace detail

/// The diagonal embedding of x: Dx itself in the commutative model, or a
/// diagonal block operator whose atoms tile each dyadic cell.
inline Operator diag_embed(const DyadicSequence& x, const EmbedTarget& target = std::nullopt) {
  if (!target) return Operator::commutative(pietsch_D(x));
  if (!x.left().zero || !x.right().zero)
    throw Error(ErrorCode::NotTileable, "block targets need finitely supported sequences");
  const auto& blocks = target->blocks();
  std::vector<long> cells;
  for (long n = x.hi(); n >= x.lo(); --n)
    if (x.at(n) != 0) cells.push_back(n);
  std::vector<long> avail;
  for (const auto& b : blocks) avail.push_back(b.d);
  std::vector<std::vector<long>> use(cells.size());
  if (!detail::tile_cells(cells, 0, blocks, avail, use))
    throw Error(ErrorCode::NotTileable, "dyadic cells cannot be tiled by the available atoms");
  std::vector<std::vector<Rational>> diags;
  for (const auto& b : blocks) diags.emplace_back(static_cast<std::size_t>(b.d), Rational(0));
  std::vector<long> next(blocks.size(), 0);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t j = 0; j < blocks.size(); ++j)
      for (long k = 0; k < use[c][j]; ++k)
        diags[j][static_cast<std::size_t>(next[j]++)] = x.at(cells[c]);
  return Operator::diagonal(*target, diags);
}

}  // namespace calkin
