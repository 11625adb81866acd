#pragma once

#include "rfrecon/activation.hpp"
#include "rfrecon/features.hpp"
#include "rfrecon/numkit.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace rfrecon {

struct AssignmentResult {
  /// x_i is matched to x_hat_{permutation[i]}.
  std::vector<std::size_t> permutation;
  /// -1 when x_i is matched to -x_hat_{permutation[i]}.
  std::vector<int> sign_flips;
  std::vector<double> distances;
  double rho = 0.0;
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns assignment[row] = column; ties go
/// to the lowest column index.
std::vector<std::size_t> hungarian(const Matrix &cost);

/// rho = min over permutations (and per-row sign flips when enabled) of
/// (1 / (n sqrt d)) sum_i ||x_i - x_hat_{pi(i)}||_2.
AssignmentResult assignment_rho(const Matrix &X, const Matrix &X_hat,
                                bool allow_sign_flips);

/// (1 / (n sqrt p)) sum_i ||P_perp(Phi_hat) phi(x_i)||_2 with Phi_hat the
/// features of X_hat.
double span_residual(const Matrix &weights, const Activation &act, const Matrix &X,
                     const Matrix &X_hat);
double span_residual(const RFModel &model, const Matrix &X, const Matrix &X_hat);
double span_residual(const TwoLayerModel &model, const Matrix &X, const Matrix &X_hat);

/// (1 / (n k)) sum_i ||f(x_i) - y_i||^2
double training_mse(const Matrix &predictions, const Matrix &Y);
double training_mse(const RFModel &model, const Matrix &X, const Matrix &Y);
double training_mse(const TwoLayerModel &model, const Matrix &X, const Matrix &Y);

struct MetricsReport {
  AssignmentResult assignment;
  double residual = 0.0;
  double train_mse = 0.0;
  /// {rho, residual, train_mse, permutation, sign_flips}
  std::string to_json() const;
};

} // namespace rfrecon
