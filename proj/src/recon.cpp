#include "rfrecon/recon.hpp"

#include "rfrecon/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace rfrecon {

double ReconProblem::target_norm_sq() const {
  double s = 0.0;
  for (double v : targets.flat())
    s += v * v;
  return s;
}

ReconProblem ReconProblem::from_rf(const RFModel &model, std::size_t n_candidates) {
  ReconProblem p;
  p.weights = model.V;
  p.activation = model.activation;
  p.targets = model.theta_star.transposed();
  p.n_candidates = n_candidates;
  p.validate();
  return p;
}

ReconProblem ReconProblem::from_two_layer(const TwoLayerModel &model,
                                          std::size_t n_candidates) {
  ReconProblem p;
  p.weights = model.theta1;
  p.activation = model.activation;
  p.targets = model.theta2;
  auto t = p.targets.flat();
  auto init = model.theta2_init.flat();
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] -= init[i];
  p.n_candidates = n_candidates;
  p.validate();
  return p;
}

void ReconProblem::validate() const {
  if (weights.empty())
    throw ShapeError("ReconProblem: empty weight matrix");
  if (targets.cols() != weights.rows() || targets.rows() == 0)
    throw ShapeError("ReconProblem: target length " + std::to_string(targets.cols()) +
                     " != feature dimension " + std::to_string(weights.rows()));
  if (n_candidates == 0)
    throw PreconditionError("ReconProblem: n_candidates must be >= 1");
}

void ReconConfig::validate() const {
  if (!(step > 0.0))
    throw PreconditionError("ReconConfig: step must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw PreconditionError("ReconConfig: momentum must lie in [0, 1)");
  if (!(threshold > 0.0))
    throw PreconditionError("ReconConfig: threshold must be positive");
}

ReconState ReconState::start(Matrix x_hat) {
  ReconState s;
  retract_rows(x_hat);
  s.momentum = Matrix(x_hat.rows(), x_hat.cols());
  s.x_hat = std::move(x_hat);
  return s;
}

void retract_rows(Matrix &x) {
  const double radius = std::sqrt(static_cast<double>(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double nrm = norm2(row);
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw NumericalError("retract_rows: row " + std::to_string(i) + " has norm " +
                           std::to_string(nrm));
    const double scale = radius / nrm;
    for (double &v : row)
      v *= scale;
  }
}

// ---------------------------------------------------------------------------

namespace {

CgResult solve_checked(const Matrix &gram, std::span<const double> rhs,
                       const CgOptions &cg) {
  CgResult res = cg_solve(gram, rhs, cg);
  if (!res.converged && res.relative_residual > 1e-6)
    throw SolverError("CG failed on the Gram system: relative residual " +
                          std::to_string(res.relative_residual) + " after " +
                          std::to_string(res.iterations) + " iterations, condition estimate " +
                          std::to_string(res.condition_estimate),
                      res.iterations, res.condition_estimate);
  return res;
}

Matrix add_jitter(Matrix g, double scale) {
  double trace = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    trace += g(i, i);
  const double shift = scale * trace / static_cast<double>(g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i)
    g(i, i) += shift;
  return g;
}

} // namespace

SpanProjection project_off_span(const Matrix &features, const Matrix &vectors,
                                const CgOptions &cg, double jitter_condition,
                                double jitter_scale) {
  const std::size_t n = features.rows(), p = features.cols(), k = vectors.rows();
  if (vectors.cols() != p)
    throw ShapeError("project_off_span: vectors have length " +
                     std::to_string(vectors.cols()) + ", features " + std::to_string(p));
  SpanProjection out;
  out.alpha = Matrix(k, n);
  out.residual = vectors;

  const bool wide = n <= p;
  // wide: (F F^T) alpha = F u, r = u - F^T alpha.
  // tall: (F^T F) beta = u,    r = u - (F^T F) beta, alpha = F beta.
  const Matrix gram = wide ? kernels::gram(features) : kernels::matmul_tn(features, features);
  Matrix jittered_gram;
  bool jittered = false;

  for (std::size_t t = 0; t < k; ++t) {
    const auto u = vectors.row(t);
    const Vector rhs = wide ? kernels::matvec(features, u) : Vector(u.begin(), u.end());
    CgResult sol = solve_checked(jittered ? jittered_gram : gram, rhs, cg);
    if (!jittered && sol.condition_estimate > jitter_condition) {
      // Near-duplicate candidate rows; retry once on a shifted Gram.
      jittered_gram = add_jitter(gram, jitter_scale);
      jittered = true;
      sol = solve_checked(jittered_gram, rhs, cg);
    }
    out.condition_estimate = std::max(out.condition_estimate, sol.condition_estimate);
    out.cg_iterations += sol.iterations;
    auto r = out.residual.row(t);
    if (wide) {
      std::copy(sol.x.begin(), sol.x.end(), out.alpha.row(t).begin());
      const Vector back = kernels::matvec_t(features, sol.x);
      for (std::size_t j = 0; j < p; ++j)
        r[j] -= back[j];
    } else {
      const Vector a = kernels::matvec(features, sol.x);
      std::copy(a.begin(), a.end(), out.alpha.row(t).begin());
      const Vector back = kernels::matvec(jittered ? jittered_gram : gram, sol.x);
      for (std::size_t j = 0; j < p; ++j)
        r[j] -= back[j];
    }
  }
  out.jittered = jittered;
  return out;
}

ReconLoss recon_loss(const ReconProblem &problem, const Matrix &x_hat,
                     const ReconConfig &config) {
  if (x_hat.cols() != problem.d())
    throw ShapeError("recon_loss: candidates have " + std::to_string(x_hat.cols()) +
                     " columns, model expects d = " + std::to_string(problem.d()));
  ReconLoss out;
  out.pre_activations = kernels::matmul_nt(x_hat, problem.weights);
  Matrix features = out.pre_activations;
  problem.activation.apply(features.flat());
  SpanProjection proj = project_off_span(features, problem.targets, config.cg,
                                         config.jitter_condition, config.jitter_scale);
  // ||r||^2 equals theta^T theta - theta^T Phi^T alpha at the exact alpha and
  // its error is quadratic (not linear) in the CG error.
  double loss = 0.0;
  for (double v : proj.residual.flat())
    loss += v * v;
  out.loss = loss;
  const double denom = problem.target_norm_sq();
  out.normalized = denom > 0.0 ? loss / denom : 0.0;
  out.alpha = std::move(proj.alpha);
  out.residual = std::move(proj.residual);
  out.condition_estimate = proj.condition_estimate;
  out.jittered = proj.jittered;
  return out;
}

Matrix recon_grad(const ReconProblem &problem, const ReconLoss &at) {
  // dL/dPhi_hat (n x p) = -2 sum_t alpha_t r_t^T
  Matrix cot = kernels::matmul_tn(at.alpha, at.residual);
  for (double &v : cot.flat())
    v *= -2.0;
  return feature_pullback(problem.weights, problem.activation, at.pre_activations, cot);
}

Matrix recon_grad(const ReconProblem &problem, const Matrix &x_hat,
                  const ReconConfig &config) {
  return recon_grad(problem, recon_loss(problem, x_hat, config));
}

ReconState recon_step(ReconState state, const Matrix &grad, const ReconConfig &config) {
  if (grad.rows() != state.x_hat.rows() || grad.cols() != state.x_hat.cols() ||
      state.momentum.rows() != grad.rows() || state.momentum.cols() != grad.cols())
    throw ShapeError("recon_step: gradient and state shapes differ");
  if (!grad.all_finite())
    throw DivergenceError("recon_step: non-finite gradient at iteration " +
                              std::to_string(state.iteration),
                          state.x_hat);
  const Matrix last_good = state.x_hat;
  auto m = state.momentum.flat();
  auto x = state.x_hat.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = config.momentum * m[i] + g[i];
    x[i] -= config.step * m[i];
  }
  try {
    retract_rows(state.x_hat);
  } catch (const NumericalError &e) {
    throw DivergenceError(std::string("recon_step: ") + e.what(), last_good);
  }
  if (!state.x_hat.all_finite())
    throw DivergenceError("recon_step: non-finite iterate at iteration " +
                              std::to_string(state.iteration),
                          last_good);
  ++state.iteration;
  return state;
}

ReconResult reconstruct_from(const ReconProblem &problem, const ReconConfig &config,
                             ReconState state) {
  problem.validate();
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  const double denom = problem.target_norm_sq();
  const double inv = denom > 0.0 ? 1.0 / denom : 1.0;

  ReconResult res;
  while (true) {
    const ReconLoss eval = recon_loss(problem, state.x_hat, config);
    if (!std::isfinite(eval.loss))
      throw DivergenceError("reconstruct: non-finite loss at iteration " +
                                std::to_string(state.iteration),
                            state.x_hat);
    const bool done = eval.normalized < config.threshold;
    const bool out_of_budget = state.iteration >= config.max_iterations;
    const bool log_now =
        config.log_every > 0 && state.iteration % config.log_every == 0;
    if (log_now || done || out_of_budget)
      state.trace.push_back({state.iteration, eval.normalized, elapsed_ms()});
    res.final_normalized_loss = eval.normalized;
    if (done || out_of_budget) {
      res.converged = done;
      break;
    }
    Matrix grad = recon_grad(problem, eval);
    for (double &v : grad.flat())
      v *= inv;
    state = recon_step(std::move(state), grad, config);
  }
  res.iterations = state.iteration;
  res.x_hat = std::move(state.x_hat);
  res.momentum = std::move(state.momentum);
  res.trace = std::move(state.trace);
  return res;
}

ReconResult reconstruct(const ReconProblem &problem, const ReconConfig &config,
                        RngStream rng) {
  problem.validate();
  Matrix init = gaussian_matrix(rng, problem.n_candidates, problem.d(), 1.0);
  return reconstruct_from(problem, config, ReconState::start(std::move(init)));
}

} // namespace rfrecon
