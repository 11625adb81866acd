#pragma once

// Training-set reconstruction from trained parameters.
//
// Given first-layer weights W (p x d), the activation and one or more target
// vectors theta (each of length p, lying in the span of the training
// features), find n rows x_hat on the radius-sqrt(d) sphere minimizing
//
//   L(X_hat) = sum_t || P_perp(Phi_hat) theta_t ||^2,  Phi_hat = phi(X_hat W^T).
//
// The projection is evaluated through the n x n Gram system
// (Phi_hat Phi_hat^T) alpha = Phi_hat theta solved by CG, and the gradient is
// dL/dPhi_hat = -2 alpha r^T with r = theta - Phi_hat^T alpha, pulled back
// through the feature map.

#include "rfrecon/activation.hpp"
#include "rfrecon/errors.hpp"
#include "rfrecon/features.hpp"
#include "rfrecon/numkit.hpp"

#include <cstddef>
#include <vector>

namespace rfrecon {

struct ReconProblem {
  Matrix weights;        // p x d (RF: V, two-layer: theta1)
  Activation activation = Activation::relu();
  Matrix targets;        // k x p, one target per row
  std::size_t n_candidates = 1;

  std::size_t d() const { return weights.cols(); }
  std::size_t p() const { return weights.rows(); }
  /// Sum over targets of ||theta_t||^2.
  double target_norm_sq() const;

  static ReconProblem from_rf(const RFModel &model, std::size_t n_candidates);
  /// Targets are the rows of theta2 - theta2_init.
  static ReconProblem from_two_layer(const TwoLayerModel &model, std::size_t n_candidates);
  void validate() const;
};

struct ReconConfig {
  double step = 20.0;
  double momentum = 0.9;
  std::size_t max_iterations = 500000;
  double threshold = 1e-7;      // on L / ||theta||^2
  std::size_t log_every = 100;
  CgOptions cg;
  double jitter_condition = 1e12;
  double jitter_scale = 1e-10;

  void validate() const;
};

struct TracePoint {
  std::size_t iteration = 0;
  double normalized_loss = 0.0;
  double wall_ms = 0.0;
};

struct ReconState {
  Matrix x_hat;     // n x d, rows on the sqrt(d) sphere
  Matrix momentum;  // n x d
  std::size_t iteration = 0;
  std::vector<TracePoint> trace;

  /// Retracts the rows of `x_hat` onto the sphere and zeroes the momentum.
  static ReconState start(Matrix x_hat);
};

/// Orthogonal residuals of vectors against the row span of a feature matrix.
struct SpanProjection {
  Matrix alpha;      // k x n coefficients, vectors_t ~ features^T alpha_t
  Matrix residual;   // k x p
  double condition_estimate = 1.0;
  bool jittered = false;
  std::size_t cg_iterations = 0;
};

/// Projects each row of `vectors` (k x p) off span(rows of `features`) (n x p).
/// Uses the n x n Gram when n <= p and the p x p normal matrix otherwise.
SpanProjection project_off_span(const Matrix &features, const Matrix &vectors,
                                const CgOptions &cg = {}, double jitter_condition = 1e12,
                                double jitter_scale = 1e-10);

struct ReconLoss {
  double loss = 0.0;
  double normalized = 0.0;
  Matrix alpha;           // k x n
  Matrix residual;        // k x p
  Matrix pre_activations; // n x p
  double condition_estimate = 1.0;
  bool jittered = false;
};

ReconLoss recon_loss(const ReconProblem &problem, const Matrix &x_hat,
                     const ReconConfig &config = {});
/// Gradient of the raw (unnormalized) loss with respect to x_hat.
Matrix recon_grad(const ReconProblem &problem, const Matrix &x_hat,
                  const ReconConfig &config = {});
Matrix recon_grad(const ReconProblem &problem, const ReconLoss &at);

/// m <- momentum * m + grad; x_hat <- x_hat - step * m; rows retracted.
/// Throws DivergenceError on any non-finite entry.
ReconState recon_step(ReconState state, const Matrix &grad, const ReconConfig &config);

/// Scales every row of x to norm sqrt(d).
void retract_rows(Matrix &x);

class DivergenceError : public NumericalError {
public:
  DivergenceError(const std::string &what, Matrix last_good)
      : NumericalError(what), last_good_(std::move(last_good)) {}
  const Matrix &last_good() const { return last_good_; }

private:
  Matrix last_good_;
};

struct ReconResult {
  Matrix x_hat;
  Matrix momentum;   // final optimizer state, for checkpoints
  std::vector<TracePoint> trace;
  bool converged = false;
  std::size_t iterations = 0;
  double final_normalized_loss = 0.0;
};

/// Gaussian initialization, then momentum descent on L / ||theta||^2 until
/// it drops below the threshold or max_iterations steps were taken.
ReconResult reconstruct(const ReconProblem &problem, const ReconConfig &config,
                        RngStream rng);
/// Continues from a given state (e.g. a checkpoint).
ReconResult reconstruct_from(const ReconProblem &problem, const ReconConfig &config,
                             ReconState state);

} // namespace rfrecon
