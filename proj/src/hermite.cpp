#include "rfrecon/features.hpp"

#include "rfrecon/errors.hpp"
#include "rfrecon/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rfrecon {

namespace {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights; // weights already include the Gaussian density
};

// Golub-Welsch for the standard normal measure: nodes are the eigenvalues of
// the Jacobi matrix of the orthonormal probabilists' Hermite recurrence and
// w_i = 1 / sum_l h_l(x_i)^2. The sum is accumulated with the factor
// exp(-x^2/2) split over the squares so it stays finite at the outer nodes.
Rule gauss_hermite(std::size_t n) {
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (std::size_t k = 1; k < n; ++k)
    off[k - 1] = std::sqrt(static_cast<double>(k));
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = tridiagonal_eigenvalue(diag, off, i);
    double prev = 0.0, cur = std::exp(-0.25 * x * x), sum = cur * cur;
    for (std::size_t l = 0; l + 1 < n; ++l) {
      const double next = (x * cur - std::sqrt(static_cast<double>(l)) * prev) /
                          std::sqrt(static_cast<double>(l + 1));
      prev = cur;
      cur = next;
      sum += cur * cur;
    }
    r.nodes[i] = x;
    r.weights[i] = std::exp(-0.5 * x * x) / sum;
  }
  return r;
}

// Gauss-Legendre on [a, b], weights multiplied by the standard normal density.
void gauss_legendre_panel(std::size_t n, double a, double b, Rule &out) {
  const std::size_t m = (n + 1) / 2;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int its = 0; its < 100; ++its) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = ((2.0 * jd - 1.0) * z * p2 - (jd - 1.0) * p3) / jd;
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16)
        break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = mid + half * x[i];
    out.nodes.push_back(t);
    out.weights.push_back(half * w[i] * inv_sqrt_2pi * std::exp(-0.5 * t * t));
  }
}

// Beyond |t| = 14 the Gaussian density is below 1e-42.
constexpr double kTail = 14.0;

Rule piecewise_rule(std::size_t n, std::vector<double> kinks) {
  kinks.erase(std::remove_if(kinks.begin(), kinks.end(),
                             [](double k) { return std::abs(k) >= kTail; }),
              kinks.end());
  std::sort(kinks.begin(), kinks.end());
  std::vector<double> edges{-kTail};
  edges.insert(edges.end(), kinks.begin(), kinks.end());
  edges.push_back(kTail);
  const std::size_t panels = edges.size() - 1;
  const std::size_t per_panel = std::max<std::size_t>(2, n / panels);
  Rule r;
  for (std::size_t i = 0; i < panels; ++i)
    gauss_legendre_panel(per_panel, edges[i], edges[i + 1], r);
  return r;
}

HermiteProfile integrate(const Activation &act, std::size_t max_order, std::size_t n) {
  const Rule rule = act.kinks().empty() ? gauss_hermite(n) : piecewise_rule(n, act.kinks());
  HermiteProfile prof;
  prof.mu.assign(max_order + 1, 0.0);
  prof.quad_points = n;
  std::vector<double> h(max_order + 1);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = rule.nodes[q];
    const double f = act.value(t);
    const double wf = rule.weights[q] * f;
    // Orthonormal recurrence: h_{l+1} = (t h_l - sqrt(l) h_{l-1}) / sqrt(l+1).
    h[0] = 1.0;
    if (max_order >= 1)
      h[1] = t;
    for (std::size_t l = 1; l < max_order; ++l)
      h[l + 1] = (t * h[l] - std::sqrt(static_cast<double>(l)) * h[l - 1]) /
                 std::sqrt(static_cast<double>(l + 1));
    for (std::size_t l = 0; l <= max_order; ++l)
      prof.mu[l] += wf * h[l];
    prof.second_moment += wf * f;
  }
  return prof;
}

} // namespace

HermiteProfile hermite_coefficients(const Activation &act, const HermiteOptions &opts) {
  if (opts.quad_points < 2 * opts.max_order + 2)
    throw PreconditionError("hermite_coefficients: need at least 2*max_order+2 = " +
                            std::to_string(2 * opts.max_order + 2) + " quadrature points");
  HermiteProfile prof = integrate(act, opts.max_order, opts.quad_points);
  const HermiteProfile check = integrate(act, opts.max_order, 2 * opts.quad_points);
  for (std::size_t l = 0; l <= opts.max_order; ++l)
    if (std::abs(prof.mu[l] - check.mu[l]) > opts.convergence_tol)
      throw NumericalError("hermite_coefficients: quadrature not converged for mu_" +
                           std::to_string(l) + " (change " +
                           std::to_string(std::abs(prof.mu[l] - check.mu[l])) +
                           " under node doubling)");

  bool odd = false, even = false;
  for (std::size_t l = 3; l <= opts.max_order; ++l) {
    prof.sum_sq_order_ge_3 += prof.mu[l] * prof.mu[l];
    if (std::abs(prof.mu[l]) > opts.nonzero_tol)
      (l % 2 ? odd : even) = true;
  }
  prof.mixed_parity_order_ge_3 = odd && even;
  return prof;
}

AssumptionReport assumption_check(const HermiteProfile &profile, double zero_tol) {
  AssumptionReport rep;
  const auto mu = [&](std::size_t l) { return l < profile.mu.size() ? profile.mu[l] : 0.0; };
  rep.mu1_nonzero = std::abs(mu(1)) > zero_tol;
  rep.mu0_zero = std::abs(mu(0)) <= zero_tol;
  rep.mu2_zero = std::abs(mu(2)) <= zero_tol;
  rep.mixed_parity = profile.mixed_parity_order_ge_3;
  rep.sign_ambiguity = !rep.mixed_parity;
  if (!rep.mu1_nonzero)
    rep.messages.push_back("mu_1 is zero: no linear component");
  if (!rep.mu0_zero)
    rep.messages.push_back("mu_0 is non-zero");
  if (!rep.mu2_zero)
    rep.messages.push_back("mu_2 is non-zero");
  if (rep.sign_ambiguity)
    rep.messages.push_back(
        "warning: sign ambiguity possible (no two non-zero Hermite coefficients of "
        "order >= 3 with different parity); reconstructions may be negated");
  return rep;
}

} // namespace rfrecon
