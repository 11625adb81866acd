#include "rfrecon/metrics.hpp"

#include "rfrecon/errors.hpp"
#include "rfrecon/kernels.hpp"
#include "rfrecon/recon.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace rfrecon {

std::vector<std::size_t> hungarian(const Matrix &cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n)
    throw ShapeError("hungarian: cost matrix must be square");
  if (n == 0)
    return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c])
          continue;
        const double cur = cost(r - 1, c - 1) - u[r] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t c = way[col0];
      match[col0] = match[c];
      col0 = c;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t c = 1; c <= n; ++c)
    assignment[match[c] - 1] = c - 1;
  return assignment;
}

AssignmentResult assignment_rho(const Matrix &X, const Matrix &X_hat,
                                bool allow_sign_flips) {
  if (X.rows() != X_hat.rows() || X.cols() != X_hat.cols())
    throw ShapeError("assignment_rho: X is " + std::to_string(X.rows()) + "x" +
                     std::to_string(X.cols()) + ", X_hat is " + std::to_string(X_hat.rows()) +
                     "x" + std::to_string(X_hat.cols()));
  const std::size_t n = X.rows(), d = X.cols();
  Matrix cost(n, n);
  std::vector<char> flipped(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double plus = 0.0, minus = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double a = X(i, c), b = X_hat(j, c);
        plus += (a - b) * (a - b);
        minus += (a + b) * (a + b);
      }
      plus = std::sqrt(plus);
      minus = std::sqrt(minus);
      if (allow_sign_flips && minus < plus) {
        cost(i, j) = minus;
        flipped[i * n + j] = 1;
      } else {
        cost(i, j) = plus;
      }
    }
  AssignmentResult res;
  res.permutation = hungarian(cost);
  res.sign_flips.resize(n);
  res.distances.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = res.permutation[i];
    res.distances[i] = cost(i, j);
    res.sign_flips[i] = flipped[i * n + j] ? -1 : 1;
    res.total_cost += cost(i, j);
  }
  res.rho = n == 0 ? 0.0 : res.total_cost / (static_cast<double>(n) * std::sqrt(static_cast<double>(d)));
  return res;
}

double span_residual(const Matrix &weights, const Activation &act, const Matrix &X,
                     const Matrix &X_hat) {
  const Matrix phi = feature_map(weights, act, X);
  const Matrix phi_hat = feature_map(weights, act, X_hat);
  const SpanProjection proj = project_off_span(phi_hat, phi);
  double sum = 0.0;
  for (std::size_t i = 0; i < proj.residual.rows(); ++i)
    sum += norm2(proj.residual.row(i));
  return sum / (static_cast<double>(X.rows()) * std::sqrt(static_cast<double>(weights.rows())));
}

double span_residual(const RFModel &model, const Matrix &X, const Matrix &X_hat) {
  return span_residual(model.V, model.activation, X, X_hat);
}

double span_residual(const TwoLayerModel &model, const Matrix &X, const Matrix &X_hat) {
  return span_residual(model.theta1, model.activation, X, X_hat);
}

double training_mse(const Matrix &predictions, const Matrix &Y) {
  if (predictions.rows() != Y.rows() || predictions.cols() != Y.cols())
    throw ShapeError("training_mse: prediction and label shapes differ");
  double s = 0.0;
  auto p = predictions.flat();
  auto y = Y.flat();
  for (std::size_t i = 0; i < p.size(); ++i)
    s += (p[i] - y[i]) * (p[i] - y[i]);
  return p.empty() ? 0.0 : s / static_cast<double>(p.size());
}

double training_mse(const RFModel &model, const Matrix &X, const Matrix &Y) {
  return training_mse(predict(model, X), Y);
}

double training_mse(const TwoLayerModel &model, const Matrix &X, const Matrix &Y) {
  return training_mse(predict(model, X), Y);
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["rho"] = assignment.rho;
  j["residual"] = residual;
  j["train_mse"] = train_mse;
  j["permutation"] = assignment.permutation;
  j["sign_flips"] = assignment.sign_flips;
  return j.dump();
}

} // namespace rfrecon
