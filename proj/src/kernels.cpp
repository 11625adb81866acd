#include "rfrecon/kernels.hpp"

#include "rfrecon/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rfrecon::kernels {

namespace {

constexpr std::size_t kBlock = 64;

void check(bool ok, const char *op, std::size_t a, std::size_t b) {
  if (!ok)
    throw ShapeError(std::string(op) + ": inner dimensions differ (" +
                     std::to_string(a) + " vs " + std::to_string(b) + ")");
}

// Four independent accumulators so the compiler can vectorize; the
// summation order depends only on the length.
inline double dot4(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i)
    s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

inline std::size_t blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// Strided view: element (i, l) of the left operand lives at
// data[i * row_stride + l * col_stride]; the right operand is indexed (l, j).
struct Operand {
  const double *data;
  std::size_t row_stride;
  std::size_t col_stride;
  double at(std::size_t r, std::size_t c) const { return data[r * row_stride + c * col_stride]; }
};

constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileCols = 8;
constexpr std::size_t kPanel = 64;
constexpr std::size_t kSlabDoubles = 32768;

// out[i0.., j0..] += sum over l in [l0, l1) of A(i, l) * B(l, j), l ascending.
// The full tile keeps its accumulators in registers; edge tiles use the same
// order.
void tile(const Operand &A, const Operand &B, std::size_t l0, std::size_t l1, std::size_t i0,
          std::size_t j0, std::size_t rows, std::size_t cols, double *out, std::size_t ldo) {
  double c[kTileRows][kTileCols] = {};
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(out + (i0 + r) * ldo + j0, out + (i0 + r) * ldo + j0 + cols, c[r]);
  if (rows == kTileRows && cols == kTileCols && B.col_stride == 1) {
    for (std::size_t l = l0; l < l1; ++l) {
      const double *bl = B.data + l * B.row_stride + j0;
      double s[kTileRows];
      for (std::size_t r = 0; r < kTileRows; ++r)
        s[r] = A.at(i0 + r, l);
      for (std::size_t r = 0; r < kTileRows; ++r)
        for (std::size_t q = 0; q < kTileCols; ++q)
          c[r][q] += s[r] * bl[q];
    }
  } else {
    for (std::size_t l = l0; l < l1; ++l)
      for (std::size_t r = 0; r < rows; ++r) {
        const double s = A.at(i0 + r, l);
        for (std::size_t q = 0; q < cols; ++q)
          c[r][q] += s * B.at(l, j0 + q);
      }
  }
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(c[r], c[r] + cols, out + (i0 + r) * ldo + j0);
}

// out (zero-initialized) = A * B, blocked over the inner dimension so a
// slab of B stays in cache while every tile consumes it.
void product(const Operand &A, const Operand &B, std::size_t m, std::size_t n, std::size_t k,
             Matrix &out) {
  const auto tm = static_cast<std::ptrdiff_t>((m + kTileRows - 1) / kTileRows);
  const auto tn = static_cast<std::ptrdiff_t>((n + kTileCols - 1) / kTileCols);
  const std::size_t depth = std::max<std::size_t>(kTileCols, kSlabDoubles / std::max<std::size_t>(n, 1));
  double *o = out.flat().data();
#pragma omp parallel
  for (std::size_t l0 = 0; l0 < k; l0 += depth) {
    const std::size_t l1 = std::min(k, l0 + depth);
#pragma omp for collapse(2) schedule(static)
    for (std::ptrdiff_t ti = 0; ti < tm; ++ti)
      for (std::ptrdiff_t tj = 0; tj < tn; ++tj) {
        const std::size_t i0 = static_cast<std::size_t>(ti) * kTileRows;
        const std::size_t j0 = static_cast<std::size_t>(tj) * kTileCols;
        tile(A, B, l0, l1, i0, j0, std::min(kTileRows, m - i0), std::min(kTileCols, n - j0), o, n);
      }
  }
}

} // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

Matrix matmul_nt(const Matrix &a, const Matrix &b) {
  check(a.cols() == b.cols(), "matmul_nt", a.cols(), b.cols());
  const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
  Matrix out(m, n);
  if (m == 0 || n == 0)
    return out;
  const auto np = static_cast<std::ptrdiff_t>((n + kPanel - 1) / kPanel);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jp = 0; jp < np; ++jp) {
    const std::size_t j0 = static_cast<std::size_t>(jp) * kPanel;
    const std::size_t w = std::min(n, j0 + kPanel) - j0;
    std::vector<double> bt(k * w);
    for (std::size_t j = 0; j < w; ++j) {
      const double *bj = b.row(j0 + j).data();
      for (std::size_t l = 0; l < k; ++l)
        bt[l * w + j] = bj[l];
    }
    const Operand A{a.flat().data(), k, 1};
    const Operand B{bt.data(), w, 1};
    for (std::size_t i = 0; i < m; i += kTileRows)
      for (std::size_t j = 0; j < w; j += kTileCols)
        tile(A, B, 0, k, i, j, std::min(kTileRows, m - i), std::min(kTileCols, w - j),
             out.flat().data() + j0, n);
  }
  return out;
}

Matrix matmul(const Matrix &a, const Matrix &b) {
  check(a.cols() == b.rows(), "matmul", a.cols(), b.rows());
  const std::size_t m = a.rows(), n = b.cols(), k = a.cols();
  Matrix out(m, n);
  product(Operand{a.flat().data(), k, 1}, Operand{b.flat().data(), n, 1}, m, n, k, out);
  return out;
}

Matrix matmul_tn(const Matrix &a, const Matrix &b) {
  check(a.rows() == b.rows(), "matmul_tn", a.rows(), b.rows());
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Matrix out(m, n);
  product(Operand{a.flat().data(), 1, m}, Operand{b.flat().data(), n, 1}, m, n, k, out);
  return out;
}

Matrix gram(const Matrix &a) {
  const std::size_t n = a.rows(), k = a.cols();
  Matrix out(n, n);
  const auto pairs = static_cast<std::ptrdiff_t>(n * n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < pairs; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / n;
    const std::size_t j = static_cast<std::size_t>(idx) % n;
    if (j < i)
      continue;
    const double v = dot4(a.row(i).data(), a.row(j).data(), k);
    out(i, j) = v;
    out(j, i) = v;
  }
  return out;
}

Vector matvec(const Matrix &a, std::span<const double> x) {
  check(a.cols() == x.size(), "matvec", a.cols(), x.size());
  Vector y(a.rows());
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i)
    y[i] = dot4(a.row(i).data(), x.data(), x.size());
  return y;
}

Vector matvec_t(const Matrix &a, std::span<const double> y) {
  check(a.rows() == y.size(), "matvec_t", a.rows(), y.size());
  const std::size_t m = a.rows(), n = a.cols();
  Vector out(n, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jb = 0; jb < nb; ++jb) {
    const std::size_t j0 = static_cast<std::size_t>(jb) * kBlock;
    const std::size_t len = std::min(n, j0 + kBlock) - j0;
    for (std::size_t i = 0; i < m; ++i)
      axpy(y[i], a.row(i).data() + j0, out.data() + j0, len);
  }
  return out;
}

namespace reference {

Matrix matmul_nt(const Matrix &a, const Matrix &b) {
  check(a.cols() == b.cols(), "matmul_nt", a.cols(), b.cols());
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l)
        s += a(i, l) * b(j, l);
      out(i, j) = s;
    }
  return out;
}

Matrix matmul(const Matrix &a, const Matrix &b) {
  check(a.cols() == b.rows(), "matmul", a.cols(), b.rows());
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l)
        s += a(i, l) * b(l, j);
      out(i, j) = s;
    }
  return out;
}

Matrix matmul_tn(const Matrix &a, const Matrix &b) {
  check(a.rows() == b.rows(), "matmul_tn", a.rows(), b.rows());
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.rows(); ++l)
        s += a(l, i) * b(l, j);
      out(i, j) = s;
    }
  return out;
}

Matrix gram(const Matrix &a) { return matmul_nt(a, a); }

Vector matvec(const Matrix &a, std::span<const double> x) {
  check(a.cols() == x.size(), "matvec", a.cols(), x.size());
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      y[i] += a(i, j) * x[j];
  return y;
}

Vector matvec_t(const Matrix &a, std::span<const double> y) {
  check(a.rows() == y.size(), "matvec_t", a.rows(), y.size());
  Vector out(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i)
      out[j] += a(i, j) * y[i];
  return out;
}

} // namespace reference

} // namespace rfrecon::kernels
