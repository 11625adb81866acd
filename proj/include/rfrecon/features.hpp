#pragma once

// Random-features and two-layer models: feature maps, their pullbacks,
// Hermite analysis of the activation, and the two trainers.

#include "rfrecon/activation.hpp"
#include "rfrecon/numkit.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace rfrecon {

/// Expansion of an activation in orthonormal probabilists' Hermite
/// polynomials h_l under a standard Gaussian, E[h_l h_m] = delta_lm.
struct HermiteProfile {
  std::vector<double> mu;          // mu[0..max_order]
  double second_moment = 0.0;      // E[phi(g)^2]
  double sum_sq_order_ge_3 = 0.0;  // sum_{l >= 3} mu_l^2
  bool mixed_parity_order_ge_3 = false;
  std::size_t quad_points = 0;
};

struct HermiteOptions {
  std::size_t max_order = 8;
  std::size_t quad_points = 200;
  double convergence_tol = 1e-8;   // allowed change under node doubling
  double nonzero_tol = 1e-8;       // |mu_l| above this counts as non-zero
};

/// Gauss-Hermite quadrature for smooth activations. Activations with kinks
/// are integrated piecewise with Gauss-Legendre panels split at the kinks
/// (Gauss-Hermite converges only algebraically across a kink). Throws
/// NumericalError if doubling the node count moves any coefficient by more
/// than `convergence_tol`.
HermiteProfile hermite_coefficients(const Activation &act,
                                    const HermiteOptions &opts = {});

struct AssumptionReport {
  bool mu1_nonzero = false;
  bool mu0_zero = false;
  bool mu2_zero = false;
  bool mixed_parity = false;
  /// Set when no mixed parity is present: x and -x are then indistinguishable
  /// from the span of the features.
  bool sign_ambiguity = false;
  bool satisfied() const { return mu1_nonzero && mu0_zero && mu2_zero && mixed_parity; }
  std::vector<std::string> messages;
};

AssumptionReport assumption_check(const HermiteProfile &profile, double zero_tol = 1e-8);

// ---------------------------------------------------------------------------
// Models

struct RFModel {
  Matrix V;              // p x d, entries N(0, 1/d)
  Activation activation = Activation::relu();
  Matrix theta_star;     // p x k

  std::size_t d() const { return V.cols(); }
  std::size_t p() const { return V.rows(); }
  std::size_t k() const { return theta_star.cols(); }
};

struct TwoLayerModel {
  Matrix theta1;         // h x d
  Matrix theta2;         // k x h
  Matrix theta2_init;    // k x h, fixed at construction
  Activation activation = Activation::relu();

  std::size_t d() const { return theta1.cols(); }
  std::size_t h() const { return theta1.rows(); }
  std::size_t k() const { return theta2.rows(); }
};

/// theta1 ~ N(0, 1/d), theta2 ~ N(0, 1/h); theta2_init is a copy of theta2.
TwoLayerModel init_two_layer(RngStream &rng, std::size_t d, std::size_t h,
                             std::size_t k, Activation act);

/// phi(inputs * weights^T): m x p for weights p x d.
Matrix feature_map(const Matrix &weights, const Activation &act, const Matrix &inputs);
Matrix feature_map(const RFModel &model, const Matrix &inputs);
Matrix feature_map(const TwoLayerModel &model, const Matrix &inputs);

/// weights^T (phi'(weights x_hat) o cotangent), length d.
Vector feature_jvp_transpose(const Matrix &weights, const Activation &act,
                             std::span<const double> x_hat,
                             std::span<const double> cotangent);

/// Row-wise pullback: row i is weights^T (phi'(z_i) o cotangents_i) where
/// z = pre_activations (m x p). Returns m x d.
Matrix feature_pullback(const Matrix &weights, const Activation &act,
                        const Matrix &pre_activations, const Matrix &cotangents);

/// Model outputs, m x k.
Matrix predict(const RFModel &model, const Matrix &inputs);
Matrix predict(const TwoLayerModel &model, const Matrix &inputs);

/// Minimum-norm interpolating readout. Requires rows of X on the radius
/// sqrt(d) sphere and p >= n.
RFModel train_rf(Matrix V, Activation act, const Matrix &X, const Matrix &Y,
                 const MinNormOptions &opts = {});

struct TwoLayerGradient {
  double loss = 0.0;     // sum_i ||f(x_i) - y_i||^2 / n
  Matrix theta1;         // dL/dtheta1
  Matrix theta2;         // dL/dtheta2
};

TwoLayerGradient two_layer_gradient(const TwoLayerModel &model, const Matrix &X,
                                    const Matrix &Y);

/// Plain full-batch gradient descent on both layers. Throws NumericalError
/// naming the step index if the loss becomes non-finite.
TwoLayerModel train_two_layer(TwoLayerModel model, const Matrix &X, const Matrix &Y,
                              double step, std::size_t steps);

/// Throws PreconditionError unless every row has norm sqrt(d) within tol.
void require_sphere_rows(const Matrix &X, double tol = 1e-8);

} // namespace rfrecon
