#pragma once

// Dense linear algebra used by training and reconstruction: row-major
// matrices, reproducible Gaussian sampling, conjugate gradients and the
// minimum-norm interpolating solve.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rfrecon {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  /// Builds from nested rows; every row must have the same length.
  static Matrix from_rows(const std::vector<std::vector<double>> &rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  const std::vector<double> &values() const { return data_; }

  Matrix transposed() const;
  bool all_finite() const;

  friend bool operator==(const Matrix &, const Matrix &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double frobenius_norm(const Matrix &a);

/// Counter-based Gaussian stream. A draw depends only on (seed, stream,
/// counter), so two streams with the same key always agree and independent
/// workers can derive disjoint streams from one base seed.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Child stream keyed by (seed, mix(stream, tag)); does not advance this one.
  RngStream derive(std::uint64_t tag) const;

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal();

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. N(0, std^2) entries. Throws ShapeError on a zero dimension and
/// PreconditionError unless std > 0.
Matrix gaussian_matrix(RngStream &rng, std::size_t rows, std::size_t cols,
                       double std);

struct CgOptions {
  double tol = 1e-12;         // relative to ||rhs||
  std::size_t max_iter = 0;   // 0 means 10 * n
  double symmetry_tol = 1e-10;
};

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  /// Ratio of extreme Ritz values of the Lanczos tridiagonal built from the
  /// CG coefficients. 1 when fewer than one step was taken.
  double condition_estimate = 1.0;
};

/// Conjugate gradients for a symmetric positive definite system. Returns the
/// best iterate with converged=false when max_iter is exhausted. Throws
/// PreconditionError on asymmetric input and NumericalError on NaN.
CgResult cg_solve(const Matrix &gram, std::span<const double> rhs,
                  const CgOptions &opts = {});

/// Eigenvalue number `index` (ascending) of the symmetric tridiagonal matrix
/// with diagonal `diag` and off-diagonal `off`, by Sturm bisection.
double tridiagonal_eigenvalue(const std::vector<double> &diag, const std::vector<double> &off,
                              std::size_t index);

/// Throws unless `gram` is square and symmetric to `tol` relative to its
/// largest entry.
void require_symmetric(const Matrix &gram, double tol);

struct MinNormOptions {
  CgOptions cg;
  double max_condition = 1e14;
};

/// Minimum-Frobenius-norm interpolator  Theta = F^T (F F^T)^{-1} Y  for
/// features F (n x p, p >= n) and targets Y (n x k); returns p x k. One CG
/// solve per target column on the n x n Gram.
Matrix min_norm_solve(const Matrix &features, const Matrix &targets,
                      const MinNormOptions &opts = {});

} // namespace rfrecon
