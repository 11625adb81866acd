#include "rfrecon/features.hpp"

#include "rfrecon/errors.hpp"
#include "rfrecon/kernels.hpp"

#include <cmath>
#include <string>

namespace rfrecon {

void require_sphere_rows(const Matrix &X, double tol) {
  const double radius = std::sqrt(static_cast<double>(X.cols()));
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double r = norm2(X.row(i));
    if (!(std::abs(r - radius) <= tol * std::max(1.0, radius)))
      throw PreconditionError("row " + std::to_string(i) + " has norm " +
                              std::to_string(r) + ", expected sqrt(d) = " +
                              std::to_string(radius));
  }
}

TwoLayerModel init_two_layer(RngStream &rng, std::size_t d, std::size_t h,
                             std::size_t k, Activation act) {
  TwoLayerModel m;
  m.theta1 = gaussian_matrix(rng, h, d, 1.0 / std::sqrt(static_cast<double>(d)));
  m.theta2 = gaussian_matrix(rng, k, h, 1.0 / std::sqrt(static_cast<double>(h)));
  m.theta2_init = m.theta2;
  m.activation = std::move(act);
  return m;
}

Matrix feature_map(const Matrix &weights, const Activation &act, const Matrix &inputs) {
  if (inputs.cols() != weights.cols())
    throw ShapeError("feature_map: inputs have " + std::to_string(inputs.cols()) +
                     " columns, model expects d = " + std::to_string(weights.cols()));
  Matrix z = kernels::matmul_nt(inputs, weights);
  act.apply(z.flat());
  return z;
}

Matrix feature_map(const RFModel &model, const Matrix &inputs) {
  return feature_map(model.V, model.activation, inputs);
}

Matrix feature_map(const TwoLayerModel &model, const Matrix &inputs) {
  return feature_map(model.theta1, model.activation, inputs);
}

Vector feature_jvp_transpose(const Matrix &weights, const Activation &act,
                             std::span<const double> x_hat,
                             std::span<const double> cotangent) {
  if (x_hat.size() != weights.cols() || cotangent.size() != weights.rows())
    throw ShapeError("feature_jvp_transpose: expected x_hat of length " +
                     std::to_string(weights.cols()) + " and cotangent of length " +
                     std::to_string(weights.rows()));
  Vector z = kernels::matvec(weights, x_hat);
  act.apply_derivative(z);
  for (std::size_t j = 0; j < z.size(); ++j)
    z[j] *= cotangent[j];
  return kernels::matvec_t(weights, z);
}

Matrix feature_pullback(const Matrix &weights, const Activation &act,
                        const Matrix &pre_activations, const Matrix &cotangents) {
  if (pre_activations.rows() != cotangents.rows() ||
      pre_activations.cols() != cotangents.cols() ||
      pre_activations.cols() != weights.rows())
    throw ShapeError("feature_pullback: shape mismatch");
  Matrix scaled = pre_activations;
  act.apply_derivative(scaled.flat());
  auto s = scaled.flat();
  auto c = cotangents.flat();
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] *= c[i];
  return kernels::matmul(scaled, weights);
}

Matrix predict(const RFModel &model, const Matrix &inputs) {
  return kernels::matmul(feature_map(model, inputs), model.theta_star);
}

Matrix predict(const TwoLayerModel &model, const Matrix &inputs) {
  return kernels::matmul_nt(feature_map(model, inputs), model.theta2);
}

RFModel train_rf(Matrix V, Activation act, const Matrix &X, const Matrix &Y,
                 const MinNormOptions &opts) {
  if (X.rows() != Y.rows())
    throw ShapeError("train_rf: X has " + std::to_string(X.rows()) + " rows, Y has " +
                     std::to_string(Y.rows()));
  require_sphere_rows(X);
  if (V.rows() < X.rows())
    throw PreconditionError("train_rf: p = " + std::to_string(V.rows()) +
                            " < n = " + std::to_string(X.rows()) +
                            "; the interpolation problem is rank deficient");
  RFModel model;
  model.V = std::move(V);
  model.activation = std::move(act);
  model.theta_star = min_norm_solve(feature_map(model, X), Y, opts);
  return model;
}

TwoLayerGradient two_layer_gradient(const TwoLayerModel &model, const Matrix &X,
                                    const Matrix &Y) {
  if (X.rows() != Y.rows() || Y.cols() != model.k() || X.cols() != model.d())
    throw ShapeError("two_layer_gradient: shape mismatch");
  const double n = static_cast<double>(X.rows());
  const Matrix z = kernels::matmul_nt(X, model.theta1);
  Matrix a = z;
  model.activation.apply(a.flat());
  Matrix err = kernels::matmul_nt(a, model.theta2);
  double loss = 0.0;
  auto e = err.flat();
  auto y = Y.flat();
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] -= y[i];
    loss += e[i] * e[i];
  }
  for (double &v : e)
    v *= 2.0 / n;

  TwoLayerGradient g;
  g.loss = loss / n;
  g.theta2 = kernels::matmul_tn(err, a);
  const Matrix da = kernels::matmul(err, model.theta2);
  Matrix dz = z;
  model.activation.apply_derivative(dz.flat());
  auto dzf = dz.flat();
  auto daf = da.flat();
  for (std::size_t i = 0; i < dzf.size(); ++i)
    dzf[i] *= daf[i];
  g.theta1 = kernels::matmul_tn(dz, X);
  return g;
}

TwoLayerModel train_two_layer(TwoLayerModel model, const Matrix &X, const Matrix &Y,
                              double step, std::size_t steps) {
  if (model.theta2.cols() != model.h() || model.theta2_init.rows() != model.k() ||
      model.theta2_init.cols() != model.h())
    throw ShapeError("train_two_layer: inconsistent layer shapes");
  for (std::size_t s = 0; s < steps; ++s) {
    const TwoLayerGradient g = two_layer_gradient(model, X, Y);
    if (!std::isfinite(g.loss))
      throw NumericalError("train_two_layer: loss diverged at step " + std::to_string(s));
    auto t1 = model.theta1.flat();
    auto g1 = g.theta1.flat();
    for (std::size_t i = 0; i < t1.size(); ++i)
      t1[i] -= step * g1[i];
    auto t2 = model.theta2.flat();
    auto g2 = g.theta2.flat();
    for (std::size_t i = 0; i < t2.size(); ++i)
      t2[i] -= step * g2[i];
  }
  if (!model.theta1.all_finite() || !model.theta2.all_finite())
    throw NumericalError("train_two_layer: parameters diverged at step " + std::to_string(steps));
  return model;
}

} // namespace rfrecon
