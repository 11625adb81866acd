#include "oracles.hpp"

#include "rfrecon/errors.hpp"
#include "rfrecon/kernels.hpp"

#include <gtest/gtest.h>

#include <tuple>

using namespace rfrecon;

namespace {

// Shapes straddle the tile and panel edges (4 x 8 tiles, 64-wide panels).
const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> kShapes = {
    {1, 1, 1}, {3, 5, 7}, {4, 8, 16}, {5, 9, 17}, {20, 100, 130}, {13, 65, 3}, {64, 64, 64},
    {2, 300, 1}};

struct ThreadGuard {
  int saved = kernels::max_threads();
  ~ThreadGuard() { kernels::set_threads(saved); }
};

} // namespace

TEST(Kernels, MatchSerialReference) {
  RngStream rng(31);
  for (auto [m, k, n] : kShapes) {
    const Matrix a = gaussian_matrix(rng, m, k, 1.0);
    const Matrix b = gaussian_matrix(rng, k, n, 1.0);
    const Matrix bt = b.transposed();
    const Matrix at = a.transposed();
    const Vector x(b.flat().begin(), b.flat().begin() + static_cast<std::ptrdiff_t>(k));
    const Vector y(a.flat().begin(), a.flat().begin() + static_cast<std::ptrdiff_t>(m));

    EXPECT_LT(oracle::rel_error(kernels::matmul(a, b), kernels::reference::matmul(a, b)), 1e-14);
    EXPECT_LT(oracle::rel_error(kernels::matmul_nt(a, bt), kernels::reference::matmul_nt(a, bt)),
              1e-14);
    EXPECT_LT(oracle::rel_error(kernels::matmul_tn(at, b), kernels::reference::matmul_tn(at, b)),
              1e-14);
    EXPECT_LT(oracle::rel_error(kernels::gram(a), kernels::reference::gram(a)), 1e-14);
    const Vector mv = kernels::matvec(a, x), mv_ref = kernels::reference::matvec(a, x);
    const Vector tv = kernels::matvec_t(a, y), tv_ref = kernels::reference::matvec_t(a, y);
    EXPECT_LT(oracle::rel_error(Matrix(m, 1, mv), Matrix(m, 1, mv_ref)), 1e-14);
    EXPECT_LT(oracle::rel_error(Matrix(k, 1, tv), Matrix(k, 1, tv_ref)), 1e-14);
  }
}

TEST(Kernels, ReferenceMatchesLongDoubleProduct) {
  RngStream rng(5);
  const Matrix a = gaussian_matrix(rng, 7, 11, 1.0);
  const Matrix b = gaussian_matrix(rng, 11, 6, 1.0);
  EXPECT_LT(oracle::rel_error(kernels::reference::matmul(a, b), oracle::naive_matmul(a, b)),
            1e-15);
}

TEST(Kernels, GramIsExactlySymmetric) {
  RngStream rng(6);
  const Matrix g = kernels::gram(gaussian_matrix(rng, 9, 40, 1.0));
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      EXPECT_EQ(g(i, j), g(j, i));
}

TEST(Kernels, BitIdenticalAcrossThreadCounts) {
  ThreadGuard guard;
  RngStream rng(77);
  const Matrix a = gaussian_matrix(rng, 37, 129, 1.0);
  const Matrix b = gaussian_matrix(rng, 129, 70, 1.0);
  const Matrix c = gaussian_matrix(rng, 90, 129, 1.0);
  kernels::set_threads(1);
  const Matrix r1 = kernels::matmul(a, b), n1 = kernels::matmul_nt(a, c),
               t1 = kernels::matmul_tn(a, a), g1 = kernels::gram(a);
  const Vector v1 = kernels::matvec_t(a, Vector(37, 0.5));
  for (int threads : {2, 3, 4, 7}) {
    kernels::set_threads(threads);
    EXPECT_EQ(kernels::matmul(a, b), r1) << threads;
    EXPECT_EQ(kernels::matmul_nt(a, c), n1) << threads;
    EXPECT_EQ(kernels::matmul_tn(a, a), t1) << threads;
    EXPECT_EQ(kernels::gram(a), g1) << threads;
    EXPECT_EQ(kernels::matvec_t(a, Vector(37, 0.5)), v1) << threads;
  }
}

TEST(Kernels, RejectMismatchedShapes) {
  const Matrix a(3, 4), b(5, 2);
  EXPECT_THROW(kernels::matmul(a, b), ShapeError);
  EXPECT_THROW(kernels::matmul_nt(a, b), ShapeError);
  EXPECT_THROW(kernels::matmul_tn(a, b), ShapeError);
  EXPECT_THROW(kernels::matvec(a, Vector(3)), ShapeError);
  EXPECT_THROW(kernels::matvec_t(a, Vector(4)), ShapeError);
}

TEST(Kernels, EmptyOperands) {
  EXPECT_EQ(kernels::matmul(Matrix(0, 3), Matrix(3, 2)).rows(), 0u);
  EXPECT_EQ(kernels::matmul_nt(Matrix(2, 3), Matrix(0, 3)).cols(), 0u);
  const Matrix z = kernels::matmul(Matrix(2, 0), Matrix(0, 3));
  for (double v : z.flat())
    EXPECT_EQ(v, 0.0);
}
