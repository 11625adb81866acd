#pragma once

// Dense kernels on the hot path of training and reconstruction.
//
// The functions in `rfrecon::kernels` are OpenMP-parallel. Every output
// element is owned by exactly one thread and accumulated in a fixed order,
// so results are bit-identical for any thread count. `kernels::reference`
// holds the naive serial loops they are tested (and benchmarked) against.

#include "rfrecon/numkit.hpp"

#include <span>

namespace rfrecon::kernels {

/// A * B^T for A (m x k) and B (n x k); e.g. pre-activations X W^T.
Matrix matmul_nt(const Matrix &a, const Matrix &b);
/// A * B for A (m x k) and B (k x n).
Matrix matmul(const Matrix &a, const Matrix &b);
/// A^T * B for A (k x m) and B (k x n).
Matrix matmul_tn(const Matrix &a, const Matrix &b);
/// Symmetric A * A^T.
Matrix gram(const Matrix &a);
/// A x
Vector matvec(const Matrix &a, std::span<const double> x);
/// A^T y
Vector matvec_t(const Matrix &a, std::span<const double> y);

/// Threads the parallel kernels will use from the calling thread.
int max_threads();
/// Sets the calling thread's kernel thread count (sweep workers use 1).
void set_threads(int n);

namespace reference {

Matrix matmul_nt(const Matrix &a, const Matrix &b);
Matrix matmul(const Matrix &a, const Matrix &b);
Matrix matmul_tn(const Matrix &a, const Matrix &b);
Matrix gram(const Matrix &a);
Vector matvec(const Matrix &a, std::span<const double> x);
Vector matvec_t(const Matrix &a, std::span<const double> y);

} // namespace reference

} // namespace rfrecon::kernels
