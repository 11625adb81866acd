// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Optional arguments select criteria by number.

#include "rfrecon/datagen.hpp"
#include "rfrecon/features.hpp"
#include "rfrecon/harness.hpp"
#include "rfrecon/metrics.hpp"
#include "rfrecon/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

using namespace rfrecon;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RFModel rf_instance(std::uint64_t seed, std::size_t d, std::size_t n, std::size_t p,
                    const Activation &act, Dataset *data = nullptr) {
  Dataset ds = synthetic_dataset(seed, n, d);
  RngStream rng = RngStream(seed).derive(p).derive(1);
  RFModel m = train_rf(gaussian_matrix(rng, p, d, 1.0 / std::sqrt(double(d))), act, ds.X, ds.Y);
  if (data)
    *data = std::move(ds);
  return m;
}

Matrix sphere_rows(RngStream &rng, std::size_t n, std::size_t d) { return sphere_uniform(rng, n, d); }

std::vector<SweepRecord> phase_records;

// Criterion 1 and 2 share the synthetic d = 100, n = 20 cells.
SweepConfig phase_config() {
  SweepConfig c;
  c.d = 100;
  c.n = 20;
  c.activation = "relu";
  c.p_grid = {"2n", "1dn", "10dn"};
  c.seeds = {0, 1, 2};
  c.recon.step = 100.0;
  c.recon.momentum = 0.95;
  c.recon.max_iterations = 20000;
  c.recon.threshold = 1e-8;
  c.jobs = 0;
  return c;
}

const std::vector<SweepRecord> &phase_sweep() {
  if (phase_records.empty()) {
    const SweepConfig c = phase_config();
    phase_records = run_sweep(c, [](const SweepRecord &r) {
                      std::fprintf(stderr, "  cell p=%zu seed=%llu rho=%.4f mse=%.2e conv=%d iters=%zu %.0fs\n",
                                   r.p, static_cast<unsigned long long>(r.seed), r.rho,
                                   r.train_mse, int(r.converged), r.recon_iters,
                                   r.recon_ms / 1000.0);
                    }).records;
  }
  return phase_records;
}

Outcome criterion1() {
  const auto &recs = phase_sweep();
  const std::size_t n = 20, pmax = 20000;
  bool mse_ok = true;
  double worst_mse = 0.0;
  std::map<std::size_t, std::vector<double>> rho;
  for (const auto &r : recs) {
    if (!r.ok())
      return {false, fmt("cell p=%zu seed=%llu failed in %s: %s", r.p,
                         static_cast<unsigned long long>(r.seed), r.error_stage.c_str(),
                         r.error_message.c_str())};
    rho[r.p].push_back(r.rho);
  }
  std::map<std::size_t, double> mse_mean;
  for (const auto &r : recs)
    mse_mean[r.p] += r.train_mse / 3.0;
  for (const auto &[p, m] : mse_mean) {
    worst_mse = std::max(worst_mse, m);
    mse_ok &= m < 1e-6;
  }
  const auto mean = [](const std::vector<double> &v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  };
  const double low = mean(rho[2 * n]), high = mean(rho[pmax]);
  return {mse_ok && low > 0.5 && high < 0.1,
          fmt("max mean train MSE %.2e (< 1e-6), mean rho at p=2n %.4f (> 0.5), at p=10dn %.4f "
              "(< 0.1), middle p=dn %.4f",
              worst_mse, low, high, mean(rho[2000]))};
}

Outcome criterion2() {
  const auto &recs = phase_sweep();
  // The converged 10dn cells.
  double worst = 0.0;
  std::size_t converged = 0;
  for (const auto &r : recs)
    if (r.p == 20000 && r.ok() && r.converged) {
      ++converged;
      worst = std::max(worst, r.residual);
    }
  SweepConfig c = phase_config();
  double sq_resid = 0.0, sq_rho = 0.0;
  for (std::uint64_t s : c.seeds) {
    const SweepRecord r = run_cell(c, c.n, s);
    if (!r.ok())
      return {false, "p = n cell failed: " + r.error_message};
    sq_resid = std::max(sq_resid, r.residual);
    sq_rho += r.rho / double(c.seeds.size());
  }
  return {converged > 0 && worst < 1e-3 && sq_resid < 1e-10 && sq_rho > 0.5,
          fmt("p=10dn: %zu converged cells, max residual %.2e (< 1e-3); p=n: max residual %.2e "
              "(< 1e-10), mean rho %.4f (> 0.5)",
              converged, worst, sq_resid, sq_rho)};
}

Outcome criterion3() {
  double worst = 0.0;
  RngStream rng(3003);
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    const std::size_t d = 8 + inst, n = 4 + inst, p = 60 + 40 * inst;
    Dataset ds;
    const RFModel m = rf_instance(inst, d, n, p, inst % 2 ? Activation::relu() : Activation::tanh(), &ds);
    const ReconProblem pr = ReconProblem::from_rf(m, n);
    for (int t = 0; t < 10; ++t) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_u64() % i]);
      Matrix xp(n, d);
      for (std::size_t i = 0; i < n; ++i)
        std::copy(ds.X.row(perm[i]).begin(), ds.X.row(perm[i]).end(), xp.row(i).begin());
      worst = std::max(worst, recon_loss(pr, xp).normalized);
    }
  }
  return {worst < 1e-12, fmt("max normalized loss at permuted data %.2e (< 1e-12), 50 cases", worst)};
}

Outcome criterion4() {
  double worst = 0.0;
  RngStream rng(4004);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 2 + t % 7, n = 1 + t % 4, p = 16 + 16 * (t % 4);
    const RFModel m = rf_instance(500 + t, d, n, p, Activation::tanh());
    const ReconProblem pr = ReconProblem::from_rf(m, n);
    Matrix x = sphere_rows(rng, n, d);
    const Matrix g = recon_grad(pr, x);
    const double h = 1e-5;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = x.flat()[i];
      x.flat()[i] = keep + h;
      const double lp = recon_loss(pr, x).loss;
      x.flat()[i] = keep - h;
      const double lm = recon_loss(pr, x).loss;
      x.flat()[i] = keep;
      const double fd = (lp - lm) / (2 * h);
      num += (g.flat()[i] - fd) * (g.flat()[i] - fd);
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst < 1e-5, fmt("max relative gradient error %.2e (< 1e-5), 20 tanh instances", worst)};
}

double brute_rho(const Matrix &X, const Matrix &Xh, bool flips) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    for (std::size_t mask = 0; mask < (flips ? (1u << n) : 1u); ++mask) {
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
  return best / (double(n) * std::sqrt(double(d)));
}

Outcome criterion5() {
  RngStream rng(5005);
  std::size_t mismatches = 0, cases = 0;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 6, d = 3 + t % 4;
    const Matrix X = sphere_rows(rng, n, d), Xh = sphere_rows(rng, n, d);
    for (bool flips : {false, true}) {
      const double a = assignment_rho(X, Xh, flips).rho, b = brute_rho(X, Xh, flips);
      ++cases;
      mismatches += a != b;
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return {mismatches == 0, fmt("%zu of %zu cases differ from n!*2^n enumeration (max |diff| %.1e)",
                               mismatches, cases, worst)};
}

Outcome criterion6() {
  const HermiteProfile id = hermite_coefficients(Activation::identity());
  bool ok = std::abs(id.mu[1] - 1.0) <= 1e-10;
  double id_other = 0.0;
  for (std::size_t l = 0; l < id.mu.size(); ++l)
    if (l != 1)
      id_other = std::max(id_other, std::abs(id.mu[l]));
  ok &= id_other < 1e-10;
  const HermiteProfile relu = hermite_coefficients(Activation::relu());
  const double relu_odd = std::max(std::abs(relu.mu[3]), std::abs(relu.mu[5]));
  ok &= relu_odd < 1e-8;
  const HermiteProfile tanh = hermite_coefficients(Activation::tanh());
  double tanh_even = 0.0;
  for (std::size_t l = 0; l < tanh.mu.size(); l += 2)
    tanh_even = std::max(tanh_even, std::abs(tanh.mu[l]));
  ok &= tanh_even < 1e-8;
  const bool mixed = hermite_coefficients(Activation::relu_plus_tanh()).mixed_parity_order_ge_3;
  ok &= mixed;
  return {ok, fmt("identity |mu1-1| %.1e, others %.1e; relu |mu3|,|mu5| %.1e; tanh even %.1e; "
                  "relu+tanh mixed parity %s",
                  std::abs(id.mu[1] - 1.0), id_other, relu_odd, tanh_even, mixed ? "yes" : "no")};
}

Outcome criterion7() {
  RngStream rng(7007);
  double tanh_worst = 0.0, mixed_min = INFINITY;
  for (int t = 0; t < 10; ++t) {
    const std::size_t d = 6, n = 3, p = 80;
    const Matrix x = sphere_rows(rng, n, d);
    Matrix flipped = x;
    for (double &v : flipped.row(t % n))
      v = -v;
    for (const Activation &act : {Activation::tanh(), Activation::relu_plus_tanh()}) {
      const ReconProblem pr = ReconProblem::from_rf(rf_instance(700 + t, d, n, p, act), n);
      const double l = recon_loss(pr, x).loss, lf = recon_loss(pr, flipped).loss;
      const double rel = std::abs(lf - l) / std::max(l, 1e-30);
      if (act.kind() == ActivationKind::tanh)
        tanh_worst = std::max(tanh_worst, rel);
      else
        mixed_min = std::min(mixed_min, rel);
    }
  }
  return {tanh_worst < 1e-9 && mixed_min > 1e-3,
          fmt("tanh max relative change %.1e (< 1e-9); relu+tanh min relative change %.2e (> 1e-3)",
              tanh_worst, mixed_min)};
}

SweepConfig two_layer_config() {
  SweepConfig c;
  c.d = 30;
  c.n = 6;
  c.k = 3;
  c.model_kind = "two-layer";
  c.activation = "relu";
  c.p_grid = {"4dn"};
  c.seeds = {0, 1, 2};
  c.nn_step = 1e-3;
  c.nn_steps = 20000;
  c.recon.step = 2.0;
  c.recon.max_iterations = 20000;
  c.jobs = 0;
  return c;
}

Outcome criterion8() {
  const SweepConfig c = two_layer_config();
  const SweepResult res = run_sweep(c);
  std::size_t good = 0;
  std::string detail;
  bool trained = true;
  for (const auto &r : res.records) {
    if (!r.ok())
      return {false, "cell failed in " + r.error_stage + ": " + r.error_message};
    trained &= r.train_mse < 1e-4;
    good += r.train_mse < 1e-4 && r.converged && r.rho < 0.2;
    detail += fmt(" seed %llu: mse %.1e conv %d after %zu its, rho %.3f, residual %.2e;",
                  static_cast<unsigned long long>(r.seed), r.train_mse, int(r.converged),
                  r.recon_iters, r.rho, r.residual);
  }
  return {trained && good >= 2, fmt("%zu of 3 seeds converged with rho < 0.2 after training to MSE < 1e-4 "
                                    "(need 2):", good) + detail};
}

Outcome criterion9() {
  RngStream rng(9009);
  std::vector<CifarRecord> recs(40);
  for (std::size_t r = 0; r < recs.size(); ++r) {
    recs[r].label = static_cast<std::uint8_t>(r % 10);
    for (auto &px : recs[r].pixels)
      px = static_cast<std::uint8_t>(rng.next_u64());
  }
  const auto bytes = serialize_cifar_batch(recs);
  const auto parsed = parse_cifar_batch(bytes);
  const bool round_trip = parsed == recs && serialize_cifar_batch(parsed) == bytes;
  const Dataset ds = build_cifar_subset(parsed, 6, 9, 8);
  double worst = 0.0;
  bool labels = true;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    worst = std::max(worst, std::abs(norm2(ds.X.row(i)) - std::sqrt(3072.0)));
    labels &= ds.Y(i, 0) == (i < ds.n() / 2 ? -1.0 : 1.0);
  }
  return {round_trip && worst < 1e-8 && labels,
          fmt("round trip %s; max |row norm - sqrt(3072)| %.1e (< 1e-8); labels (-1^n/2, +1^n/2) %s",
              round_trip ? "bit-exact" : "differs", worst, labels ? "yes" : "no")};
}

Outcome criterion10() {
  SweepConfig c;
  c.d = 10;
  c.n = 3;
  c.activation = "tanh";
  c.p_grid = {"n", "2n", "dn", "10dn"};
  c.seeds = {0, 1, 2};
  c.recon.step = 1.0;
  c.recon.max_iterations = 2000;
  const SweepRecord a = run_cell(c, 300, 1), b = run_cell(c, 300, 1);
  const bool cells = a.same_result(b);
  c.jobs = 1;
  const SweepResult one = run_sweep(c);
  c.jobs = 3;
  const SweepResult three = run_sweep(c);
  bool same = one.aggregates.size() == three.aggregates.size();
  for (std::size_t i = 0; same && i < one.aggregates.size(); ++i) {
    const AggregateRow &x = one.aggregates[i], &y = three.aggregates[i];
    same = x.p == y.p && x.rho_mean == y.rho_mean && x.rho_std == y.rho_std &&
           x.mse_mean == y.mse_mean && x.mse_std == y.mse_std &&
           x.residual_mean == y.residual_mean && x.residual_std == y.residual_std &&
           x.n_seeds == y.n_seeds;
  }
  return {cells && same, fmt("repeated run_cell identical: %s; aggregates with 1 vs 3 jobs identical: %s",
                             cells ? "yes" : "no", same ? "yes" : "no")};
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"phase transition (d=100, n=20, relu)", criterion1},
      {"span-inclusion residual", criterion2},
      {"exact minimum at permuted training data", criterion3},
      {"gradient vs central differences", criterion4},
      {"Hungarian vs exhaustive enumeration", criterion5},
      {"Hermite coefficient checks", criterion6},
      {"sign-ambiguity invariance", criterion7},
      {"two-layer desk-scale reconstruction", criterion8},
      {"CIFAR ingestion", criterion9},
      {"determinism", criterion10},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
    only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.contains(id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s | %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
