#include "rfrecon/numkit.hpp"

#include "rfrecon/errors.hpp"
#include "rfrecon/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace rfrecon {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("Matrix: buffer length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows) {
  if (rows.empty())
    return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols())
      throw ShapeError("Matrix::from_rows: ragged input");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix &a) { return norm2(a.flat()); }

// ---------------------------------------------------------------------------
// RngStream

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(seed_, mix64(stream_ * kGolden + mix64(tag + 1)));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t key = mix64(seed_ ^ mix64(stream_ + kGolden));
  return mix64(key + (++counter_) * kGolden);
}

double RngStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Matrix gaussian_matrix(RngStream &rng, std::size_t rows, std::size_t cols,
                       double std) {
  if (rows == 0 || cols == 0)
    throw ShapeError("gaussian_matrix: empty shape " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  if (!(std > 0.0) || !std::isfinite(std))
    throw PreconditionError("gaussian_matrix: std must be positive, got " +
                            std::to_string(std));
  Matrix m(rows, cols);
  for (double &v : m.flat())
    v = std * rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// Conjugate gradients

void require_symmetric(const Matrix &gram, double tol) {
  if (gram.rows() != gram.cols())
    throw ShapeError("cg_solve: matrix is " + std::to_string(gram.rows()) +
                     "x" + std::to_string(gram.cols()) + ", not square");
  double scale = 0.0;
  for (double v : gram.flat())
    scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = i + 1; j < gram.cols(); ++j)
      if (std::abs(gram(i, j) - gram(j, i)) > tol * scale)
        throw PreconditionError("cg_solve: matrix is not symmetric at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
}

double tridiagonal_eigenvalue(const std::vector<double> &diag, const std::vector<double> &off,
                              std::size_t index);

namespace {

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x.
std::size_t sturm_count(const std::vector<double> &diag,
                        const std::vector<double> &off, double x) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double b2 = i == 0 ? 0.0 : off[i - 1] * off[i - 1];
    q = diag[i] - x - (i == 0 ? 0.0 : b2 / q);
    if (q == 0.0)
      q = -1e-300;
    if (q < 0.0)
      ++count;
  }
  return count;
}

double lanczos_condition(const std::vector<double> &alphas,
                         const std::vector<double> &betas) {
  const std::size_t k = alphas.size();
  if (k < 2)
    return 1.0;
  std::vector<double> diag(k), off(k - 1);
  for (std::size_t j = 0; j < k; ++j) {
    diag[j] = 1.0 / alphas[j] + (j > 0 ? betas[j - 1] / alphas[j - 1] : 0.0);
    if (j + 1 < k)
      off[j] = std::sqrt(betas[j]) / alphas[j];
  }
  const double lmin = tridiagonal_eigenvalue(diag, off, 0);
  const double lmax = tridiagonal_eigenvalue(diag, off, k - 1);
  if (!(lmin > 0.0))
    return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

} // namespace

double tridiagonal_eigenvalue(const std::vector<double> &diag, const std::vector<double> &off,
                              std::size_t index) {
  if (index >= diag.size() || off.size() + 1 != diag.size())
    throw ShapeError("tridiagonal_eigenvalue: bad sizes");
  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < diag.size(); ++i) {
    double radius = 0.0;
    if (i > 0)
      radius += std::abs(off[i - 1]);
    if (i + 1 < diag.size())
      radius += std::abs(off[i]);
    lo = std::min(lo, diag[i] - radius);
    hi = std::max(hi, diag[i] + radius);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(diag, off, mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

CgResult cg_solve(const Matrix &gram, std::span<const double> rhs,
                  const CgOptions &opts) {
  const std::size_t n = gram.rows();
  require_symmetric(gram, opts.symmetry_tol);
  if (rhs.size() != n)
    throw ShapeError("cg_solve: rhs length " + std::to_string(rhs.size()) +
                     " != " + std::to_string(n));
  if (!gram.all_finite() ||
      !std::all_of(rhs.begin(), rhs.end(), [](double v) { return std::isfinite(v); }))
    throw NumericalError("cg_solve: non-finite input");

  CgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;

  Vector r(rhs.begin(), rhs.end());
  Vector p = r;
  Vector x(n, 0.0);
  double rr = dot(r, r);
  double best = std::sqrt(rr);
  std::vector<double> alphas, betas;

  std::size_t it = 0;
  while (it < max_iter) {
    const Vector ap = kernels::matvec(gram, p);
    const double pap = dot(p, ap);
    if (!std::isfinite(pap))
      throw NumericalError("cg_solve: NaN encountered at iteration " + std::to_string(it));
    if (pap <= 0.0)
      break; // lost positive definiteness in floating point; keep best iterate
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    const double rr_new = dot(r, r);
    if (!std::isfinite(rr_new))
      throw NumericalError("cg_solve: NaN encountered at iteration " + std::to_string(it));
    const double beta = rr_new / rr;
    alphas.push_back(alpha);
    betas.push_back(beta);
    rr = rr_new;
    const double rnorm = std::sqrt(rr);
    if (rnorm < best) {
      best = rnorm;
      res.x = x;
    }
    if (rnorm <= opts.tol * bnorm)
      break;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = r[i] + beta * p[i];
  }

  // True residual of the returned iterate.
  Vector gx = kernels::matvec(gram, res.x);
  double true_rr = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    true_rr += (rhs[i] - gx[i]) * (rhs[i] - gx[i]);
  res.iterations = it;
  res.relative_residual = std::sqrt(true_rr) / bnorm;
  res.converged = res.relative_residual <= opts.tol;
  res.condition_estimate = lanczos_condition(alphas, betas);
  return res;
}

Matrix min_norm_solve(const Matrix &features, const Matrix &targets,
                      const MinNormOptions &opts) {
  const std::size_t n = features.rows(), p = features.cols();
  if (n == 0 || p == 0)
    throw ShapeError("min_norm_solve: empty feature matrix");
  if (targets.rows() != n)
    throw ShapeError("min_norm_solve: targets have " + std::to_string(targets.rows()) +
                     " rows, features " + std::to_string(n));
  if (p < n)
    throw PreconditionError("min_norm_solve: need p >= n for interpolation (p=" +
                            std::to_string(p) + ", n=" + std::to_string(n) + ")");
  const Matrix g = kernels::gram(features);
  const std::size_t k = targets.cols();
  Matrix coeffs(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i)
      rhs[i] = targets(i, c);
    const CgResult cg = cg_solve(g, rhs, opts.cg);
    if (cg.condition_estimate > opts.max_condition)
      throw IllConditionedError("min_norm_solve: Gram condition estimate " +
                                    std::to_string(cg.condition_estimate) +
                                    " exceeds limit",
                                cg.condition_estimate);
    if (!cg.converged && cg.relative_residual > 1e-6)
      throw SolverError("min_norm_solve: CG stalled at relative residual " +
                            std::to_string(cg.relative_residual),
                        cg.iterations, cg.condition_estimate);
    for (std::size_t i = 0; i < n; ++i)
      coeffs(i, c) = cg.x[i];
  }
  return kernels::matmul_tn(features, coeffs);
}

} // namespace rfrecon
