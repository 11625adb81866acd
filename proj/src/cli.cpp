#include "rfrecon/cli.hpp"

#include "rfrecon/datagen.hpp"
#include "rfrecon/errors.hpp"
#include "rfrecon/features.hpp"
#include "rfrecon/harness.hpp"
#include "rfrecon/metrics.hpp"
#include "rfrecon/model_io.hpp"
#include "rfrecon/recon.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace rfrecon {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string activation;
  std::string p_grid;
  std::optional<unsigned> jobs;

  std::string data;
  std::string model;
  std::string recon;
  std::string p;
  std::string kind;
  std::optional<std::size_t> n;
  std::optional<std::size_t> d;
  std::optional<std::size_t> k;
  std::optional<std::size_t> max_iter;
  std::string checkpoint;
  std::string resume;
  std::string trace;
  std::string sign_flips = "auto";
  std::size_t columns = 10;
  std::size_t max_order = 8;
};

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(item);
  return out;
}

SweepConfig base_config(const Options &o) {
  SweepConfig c = o.config.empty() ? SweepConfig{} : load_sweep_config(o.config);
  apply_env_overrides(c);
  if (!o.activation.empty())
    c.activation = o.activation;
  if (!o.p_grid.empty())
    c.p_grid = split_list(o.p_grid);
  if (o.jobs)
    c.jobs = *o.jobs;
  if (o.seed)
    c.seeds = {*o.seed};
  if (o.d)
    c.d = *o.d;
  if (o.n)
    c.n = *o.n;
  if (o.k)
    c.k = *o.k;
  if (!o.kind.empty())
    c.model_kind = o.kind;
  if (o.max_iter)
    c.recon.max_iterations = *o.max_iter;
  return c;
}

bool resolve_flips(const std::string &mode, const Activation &act) {
  if (mode == "on")
    return true;
  if (mode == "off")
    return false;
  return assumption_check(hermite_coefficients(act)).sign_ambiguity;
}

int cmd_gen_data(const Options &o, std::ostream &out) {
  const SweepConfig c = base_config(o);
  const Dataset ds = make_dataset(c, o.seed.value_or(0));
  save_dataset(ds, o.out);
  out << "wrote " << ds.n() << " x " << ds.d() << " dataset (k = " << ds.k() << ") to " << o.out
      << '\n';
  return 0;
}

int cmd_train(const Options &o, std::ostream &out) {
  const SweepConfig c = base_config(o);
  const Dataset ds = load_dataset(o.data);
  const Activation act = Activation::from_name(c.activation);
  const std::size_t p = resolve_p(o.p, ds.d(), ds.n());
  const std::uint64_t seed = o.seed.value_or(0);
  RngStream rng = RngStream(seed).derive(p).derive(1);
  double mse = 0.0;
  if (c.model_kind == "rf") {
    Matrix V = gaussian_matrix(rng, p, ds.d(), 1.0 / std::sqrt(static_cast<double>(ds.d())));
    const RFModel m = train_rf(std::move(V), act, ds.X, ds.Y);
    mse = training_mse(m, ds.X, ds.Y);
    save_model(m, o.out);
  } else if (c.model_kind == "two-layer") {
    if (p < ds.k())
      throw PreconditionError("p smaller than the number of outputs");
    TwoLayerModel m = init_two_layer(rng, ds.d(), p / ds.k(), ds.k(), act);
    m = train_two_layer(std::move(m), ds.X, ds.Y, c.nn_step, c.nn_steps);
    mse = training_mse(m, ds.X, ds.Y);
    save_model(m, o.out);
  } else {
    throw PreconditionError("unknown model kind '" + c.model_kind + "'");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", mse);
  out << "p = " << p << ", train_mse = " << buf << ", model written to " << o.out << '\n';
  return 0;
}

int cmd_reconstruct(const Options &o, std::ostream &out) {
  const SweepConfig c = base_config(o);
  const StoredObject obj = load_model(o.model);
  ReconProblem problem;
  std::size_t n = o.n.value_or(0);
  std::optional<ReconState> resume;
  if (!o.resume.empty()) {
    auto stored = load_model(o.resume);
    auto *cp = std::get_if<ReconCheckpoint>(&stored);
    if (!cp)
      throw PreconditionError("'" + o.resume + "' is not a reconstruction checkpoint");
    resume = std::move(cp->state);
    n = resume->x_hat.rows();
  }
  if (n == 0)
    throw PreconditionError("reconstruct needs --n (number of training samples)");
  if (const auto *rf = std::get_if<RFModel>(&obj))
    problem = ReconProblem::from_rf(*rf, n);
  else if (const auto *nn = std::get_if<TwoLayerModel>(&obj))
    problem = ReconProblem::from_two_layer(*nn, n);
  else
    throw PreconditionError("'" + o.model + "' holds a checkpoint, not a model");

  const std::uint64_t seed = o.seed.value_or(0);
  const ReconResult res =
      resume ? reconstruct_from(problem, c.recon, std::move(*resume))
             : reconstruct(problem, c.recon, RngStream(seed).derive(problem.p()).derive(2));

  Dataset rec;
  rec.X = res.x_hat;
  rec.Y = Matrix(res.x_hat.rows(), 0);
  rec.meta.source = "reconstruction";
  rec.meta.seed = seed;
  save_dataset(rec, o.out);
  if (!o.checkpoint.empty()) {
    ReconCheckpoint cp;
    cp.state.x_hat = res.x_hat;
    cp.state.momentum = res.momentum;
    cp.state.iteration = res.iterations;
    cp.activation = problem.activation;
    save_model(cp, o.checkpoint);
  }
  if (!o.trace.empty()) {
    std::ofstream f(o.trace);
    write_trace_csv(f, res.trace);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", res.final_normalized_loss);
  out << (res.converged ? "converged" : "not converged") << " after " << res.iterations
      << " iterations, normalized loss " << buf << '\n';
  return 0;
}

int cmd_evaluate(const Options &o, std::ostream &out) {
  const Dataset ds = load_dataset(o.data);
  const Dataset rec = load_dataset(o.recon);
  MetricsReport report;
  std::optional<StoredObject> model;
  if (!o.model.empty())
    model = load_model(o.model);
  bool flips = o.sign_flips == "on";
  if (o.sign_flips == "auto") {
    if (model) {
      std::visit(
          [&](const auto &m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (!std::is_same_v<T, ReconCheckpoint>)
              flips = resolve_flips("auto", m.activation);
          },
          *model);
    } else if (!o.activation.empty()) {
      flips = resolve_flips("auto", Activation::from_name(o.activation));
    }
  }
  report.assignment = assignment_rho(ds.X, rec.X, flips);
  report.residual = std::nan("");
  report.train_mse = std::nan("");
  if (model) {
    if (const auto *rf = std::get_if<RFModel>(&*model)) {
      report.residual = span_residual(*rf, ds.X, rec.X);
      report.train_mse = training_mse(*rf, ds.X, ds.Y);
    } else if (const auto *nn = std::get_if<TwoLayerModel>(&*model)) {
      report.residual = span_residual(*nn, ds.X, rec.X);
      report.train_mse = training_mse(*nn, ds.X, ds.Y);
    }
  }
  out << report.to_json() << '\n';
  return 0;
}

int cmd_sweep(const Options &o, std::ostream &out, std::ostream &err) {
  SweepConfig c = base_config(o);
  if (!o.out.empty())
    c.out_dir = o.out;
  c.validate();
  const SweepResult res = run_sweep(c, [&](const SweepRecord &r) {
    err << "p=" << r.p << " seed=" << r.seed;
    if (r.ok())
      err << " rho=" << r.rho << " mse=" << r.train_mse << " iters=" << r.recon_iters
          << (r.converged ? "" : " (not converged)") << '\n';
    else
      err << " failed in " << r.error_stage << ": " << r.error_message << '\n';
  });
  write_sweep_outputs(c, res);
  out << "p,rho_mean,rho_std,mse_mean,residual_mean,n_seeds\n";
  for (const auto &a : res.aggregates)
    out << a.p << ',' << a.rho_mean << ',' << a.rho_std << ',' << a.mse_mean << ','
        << a.residual_mean << ',' << a.n_seeds << '\n';
  out << res.records.size() - res.failed << "/" << res.records.size() << " cells succeeded; "
      << "outputs in " << c.out_dir << '\n';
  return res.failed == 0 ? 0 : 1;
}

int cmd_hermite(const Options &o, std::ostream &out) {
  const Activation act = Activation::from_name(o.activation.empty() ? "relu" : o.activation);
  HermiteOptions opts;
  opts.max_order = o.max_order;
  opts.quad_points = std::max(opts.quad_points, 2 * o.max_order + 2);
  const HermiteProfile prof = hermite_coefficients(act, opts);
  const AssumptionReport rep = assumption_check(prof);
  char buf[96];
  out << "activation " << act.name() << " (" << prof.quad_points << " quadrature points)\n";
  for (std::size_t l = 0; l < prof.mu.size(); ++l) {
    std::snprintf(buf, sizeof buf, "  mu_%zu = % .12e\n", l, prof.mu[l]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  E[phi^2] = %.12e, sum_{l>=3} mu_l^2 = %.6e\n",
                prof.second_moment, prof.sum_sq_order_ge_3);
  out << buf;
  out << "  mu1 != 0: " << (rep.mu1_nonzero ? "yes" : "no")
      << ", mu0 = 0: " << (rep.mu0_zero ? "yes" : "no")
      << ", mu2 = 0: " << (rep.mu2_zero ? "yes" : "no")
      << ", mixed parity (order >= 3): " << (rep.mixed_parity ? "yes" : "no") << '\n';
  for (const auto &m : rep.messages)
    out << "  " << m << '\n';
  if (rep.sign_ambiguity)
    out << "  WARNING: sign ambiguity, reconstructions are determined up to per-row sign\n";
  return 0;
}

// Row i of the ground truth fixes the per-row scale used to undo the
// normalization; a matched reconstruction is shown with its partner's.
std::vector<double> to_pixels(const Dataset &ds, std::span<const double> x, std::size_t i) {
  if (ds.meta.normalization)
    return denormalize(*ds.meta.normalization, x, i);
  // Synthetic rows have unit-variance coordinates; map +-3 to [0, 1].
  std::vector<double> px(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    px[j] = 0.5 + x[j] / 6.0;
  return px;
}

int cmd_export_images(const Options &o, std::ostream &out) {
  const Dataset ds = load_dataset(o.data);
  const Dataset rec = load_dataset(o.recon);
  const bool flips = o.sign_flips != "off";
  const AssignmentResult a = assignment_rho(ds.X, rec.X, flips);
  const std::size_t n = ds.n();
  const std::size_t cols = std::max<std::size_t>(1, std::min(o.columns, n));
  const Image blank = row_image(std::vector<double>(ds.d(), 1.0));
  std::vector<Image> tiles;
  for (std::size_t r0 = 0; r0 < n; r0 += cols) {
    const std::size_t r1 = std::min(n, r0 + cols);
    for (std::size_t i = r0; i < r0 + cols; ++i)
      tiles.push_back(i < r1 ? row_image(to_pixels(ds, ds.X.row(i), i)) : blank);
    for (std::size_t i = r0; i < r0 + cols; ++i) {
      if (i >= r1) {
        tiles.push_back(blank);
        continue;
      }
      const auto src = rec.X.row(a.permutation[i]);
      const double s = flips ? a.sign_flips[i] : 1.0;
      std::vector<double> x(src.begin(), src.end());
      for (double &v : x)
        v *= s;
      tiles.push_back(row_image(to_pixels(ds, x, i)));
    }
  }
  write_ppm(tile_images(tiles, cols), o.out);
  out << "wrote " << n << " image pairs to " << o.out << '\n';
  return 0;
}

} // namespace

int cli_dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"rfrecon: train random-features and two-layer models, then reconstruct their "
               "training data from the weights"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App *sc) {
    sc->add_option("--config", o.config, "JSON sweep/config file")->check(CLI::ExistingFile);
    sc->add_option("--seed", o.seed, "RNG seed");
    sc->add_option("--activation", o.activation, "relu | tanh | relu+tanh | identity");
  };

  auto *gen = app.add_subcommand("gen-data", "generate or load a dataset and save it");
  add_common(gen);
  gen->add_option("--out", o.out, "output dataset file")->required();
  gen->add_option("--d", o.d, "input dimension (synthetic)");
  gen->add_option("--n", o.n, "number of samples");
  gen->add_option("--k", o.k, "number of outputs (synthetic)");

  auto *train = app.add_subcommand("train", "train an RF or two-layer model on a dataset");
  add_common(train);
  train->add_option("--data", o.data, "dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--p", o.p, "number of features (or 2n, 1dn, ...)")->required();
  train->add_option("--kind", o.kind, "rf | two-layer");
  train->add_option("--out", o.out, "output model file")->required();

  auto *recon = app.add_subcommand("reconstruct", "reconstruct training data from a model");
  add_common(recon);
  recon->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  recon->add_option("--n", o.n, "number of samples to reconstruct");
  recon->add_option("--max-iter", o.max_iter, "iteration cap");
  recon->add_option("--resume", o.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  recon->add_option("--checkpoint", o.checkpoint, "write the final optimizer state here");
  recon->add_option("--trace", o.trace, "write the loss trace CSV here");
  recon->add_option("--out", o.out, "output dataset file with the reconstruction")->required();

  auto *eval = app.add_subcommand("evaluate", "score a reconstruction");
  eval->add_option("--data", o.data, "ground-truth dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--recon", o.recon, "reconstructed dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--model", o.model, "model file (enables residual and MSE)")
      ->check(CLI::ExistingFile);
  eval->add_option("--activation", o.activation, "activation deciding sign flips");
  eval->add_option("--sign-flips", o.sign_flips, "auto | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}));

  auto *sweep = app.add_subcommand("sweep", "run a (p, seed) grid and write CSV tables");
  add_common(sweep);
  sweep->add_option("--out", o.out, "output directory");
  sweep->add_option("--p-grid", o.p_grid, "comma-separated p values, e.g. 2n,1dn,10dn");
  sweep->add_option("--jobs", o.jobs, "worker count (0 = all cores)");
  sweep->add_option("--max-iter", o.max_iter, "reconstruction iteration cap");

  auto *herm = app.add_subcommand("hermite", "Hermite coefficients and assumption report");
  herm->add_option("--activation", o.activation, "relu | tanh | relu+tanh | identity");
  herm->add_option("--max-order", o.max_order, "highest coefficient order");

  auto *img = app.add_subcommand("export-images", "PPM grid: ground truth rows above matches");
  img->add_option("--data", o.data, "ground-truth dataset")->required()->check(CLI::ExistingFile);
  img->add_option("--recon", o.recon, "reconstructed dataset")->required()->check(CLI::ExistingFile);
  img->add_option("--out", o.out, "output .ppm")->required();
  img->add_option("--columns", o.columns, "images per row");
  img->add_option("--sign-flips", o.sign_flips, "auto | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*gen)
      return cmd_gen_data(o, out);
    if (*train)
      return cmd_train(o, out);
    if (*recon)
      return cmd_reconstruct(o, out);
    if (*eval)
      return cmd_evaluate(o, out);
    if (*sweep)
      return cmd_sweep(o, out, err);
    if (*herm)
      return cmd_hermite(o, out);
    if (*img)
      return cmd_export_images(o, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace rfrecon
