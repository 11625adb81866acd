#pragma once

// Slow, independent reference computations used only by the tests.

#include "rfrecon/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

using rfrecon::Matrix;
using rfrecon::Vector;

// Dense solve by Gaussian elimination with partial pivoting.
inline Vector gauss_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c)))
        piv = r;
    if (a(piv, c) == 0.0)
      throw std::runtime_error("singular");
    for (std::size_t j = 0; j < n; ++j)
      std::swap(a(c, j), a(piv, j));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j)
        a(r, j) -= f * a(c, j);
      b[r] -= f * b[c];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j)
      s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline Matrix naive_matmul(const Matrix &a, const Matrix &b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t l = 0; l < a.cols(); ++l)
        s += static_cast<long double>(a(i, l)) * b(l, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

// Orthonormal basis of the row span (modified Gram-Schmidt, twice).
inline std::vector<Vector> row_basis(const Matrix &f, double drop = 1e-10) {
  std::vector<Vector> q;
  for (std::size_t i = 0; i < f.rows(); ++i) {
    Vector v(f.row(i).begin(), f.row(i).end());
    const double n0 = rfrecon::norm2(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &u : q) {
        const double c = rfrecon::dot(u, v);
        for (std::size_t j = 0; j < v.size(); ++j)
          v[j] -= c * u[j];
      }
    const double nv = rfrecon::norm2(v);
    if (nv > drop * std::max(1.0, n0)) {
      for (double &x : v)
        x /= nv;
      q.push_back(std::move(v));
    }
  }
  return q;
}

inline Vector project_off(const std::vector<Vector> &basis, std::span<const double> x) {
  Vector v(x.begin(), x.end());
  for (int pass = 0; pass < 2; ++pass)
    for (const auto &u : basis) {
      const double c = rfrecon::dot(u, v);
      for (std::size_t j = 0; j < v.size(); ++j)
        v[j] -= c * u[j];
    }
  return v;
}

// Exhaustive minimum of sum_i cost(i, pi(i)) over all permutations.
inline double brute_assignment(const Matrix &cost) {
  const std::size_t n = cost.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// rho by enumerating all n! permutations and all 2^n sign patterns.
inline double brute_rho(const Matrix &X, const Matrix &Xh, bool flips) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t patterns = flips ? (std::size_t{1} << n) : 1;
  do {
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sg = (mask >> i) & 1 ? -1.0 : 1.0;
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double e = X(i, j) - sg * Xh(perm[i], j);
          q += e * e;
        }
        s += std::sqrt(q);
      }
      best = std::min(best, s);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / (static_cast<double>(n) * std::sqrt(static_cast<double>(d)));
}

// Central difference of f along every entry of x.
inline Matrix central_gradient(const std::function<double(const Matrix &)> &f, Matrix x,
                               double h) {
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x.flat()[i];
    x.flat()[i] = keep + h;
    const double fp = f(x);
    x.flat()[i] = keep - h;
    const double fm = f(x);
    x.flat()[i] = keep;
    g.flat()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double max_abs_diff(const Matrix &a, const Matrix &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

inline double rel_error(const Matrix &a, const Matrix &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a.flat()[i] - b.flat()[i]) * (a.flat()[i] - b.flat()[i]);
    den += b.flat()[i] * b.flat()[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

} // namespace oracle
