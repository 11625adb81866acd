#include "rfrecon/harness.hpp"

#include "rfrecon/datagen.hpp"
#include "rfrecon/errors.hpp"
#include "rfrecon/features.hpp"
#include "rfrecon/kernels.hpp"
#include "rfrecon/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace rfrecon {

// ---------------------------------------------------------------------------
// Configuration

std::size_t resolve_p(const std::string &spec, std::size_t d, std::size_t n) {
  if (spec.empty())
    throw PreconditionError("empty p-grid entry");
  std::string s = spec;
  double unit = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "dn") == 0) {
    unit = static_cast<double>(d) * static_cast<double>(n);
    s.resize(s.size() - 2);
  } else if (s.back() == 'n') {
    unit = static_cast<double>(n);
    s.pop_back();
  }
  double mult = 1.0;
  if (!s.empty()) {
    std::size_t used = 0;
    try {
      mult = std::stod(s, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != s.size())
      throw PreconditionError("cannot parse p-grid entry '" + spec + "'");
  } else if (unit == 1.0) {
    throw PreconditionError("cannot parse p-grid entry '" + spec + "'");
  }
  const double p = std::round(mult * unit);
  if (!(p >= 1.0))
    throw PreconditionError("p-grid entry '" + spec + "' resolves to " + std::to_string(p));
  return static_cast<std::size_t>(p);
}

std::vector<std::size_t> SweepConfig::resolved_p_grid() const {
  if (p_grid.empty())
    throw PreconditionError("p grid is empty");
  std::vector<std::size_t> ps;
  for (const auto &s : p_grid)
    ps.push_back(resolve_p(s, d, n));
  for (std::size_t i = 1; i < ps.size(); ++i)
    if (ps[i] <= ps[i - 1])
      throw PreconditionError("p grid must be strictly ascending (entry '" + p_grid[i] + "')");
  return ps;
}

void SweepConfig::validate() const {
  static const std::set<std::string> sources = {"synthetic", "cifar-binary", "cifar-onehot"};
  if (!sources.contains(source))
    throw PreconditionError("unknown data source '" + source + "'");
  if (model_kind != "rf" && model_kind != "two-layer")
    throw PreconditionError("unknown model kind '" + model_kind + "'");
  if (sign_flips != "auto" && sign_flips != "on" && sign_flips != "off")
    throw PreconditionError("sign_flips must be auto, on or off");
  if (source == "synthetic" && (d == 0 || n == 0 || k == 0))
    throw PreconditionError("d, n and k must be positive");
  (void)Activation::from_name(activation);
  (void)resolved_p_grid();
  if (seeds.empty())
    throw PreconditionError("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw PreconditionError("seeds must be distinct");
  recon.validate();
}

SweepConfig parse_sweep_config(const std::string &json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception &e) {
    throw PreconditionError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw PreconditionError("config must be a JSON object");
  static const std::set<std::string> known = {
      "source", "cifar_path", "class_a", "class_b", "onehot_classes", "d", "n", "k",
      "activation", "model_kind", "p_grid", "seeds", "recon", "nn_step", "nn_steps",
      "sign_flips", "out_dir", "jobs"};
  for (const auto &[key, _] : j.items())
    if (!known.contains(key))
      throw PreconditionError("unknown config key '" + key + "'");

  SweepConfig c;
  try {
    c.source = j.value("source", c.source);
    c.cifar_path = j.value("cifar_path", c.cifar_path);
    c.class_a = j.value("class_a", c.class_a);
    c.class_b = j.value("class_b", c.class_b);
    c.onehot_classes = j.value("onehot_classes", c.onehot_classes);
    c.d = j.value("d", c.d);
    c.n = j.value("n", c.n);
    c.k = j.value("k", c.k);
    c.activation = j.value("activation", c.activation);
    c.model_kind = j.value("model_kind", c.model_kind);
    if (j.contains("p_grid")) {
      c.p_grid.clear();
      for (const auto &e : j["p_grid"])
        c.p_grid.push_back(e.is_string() ? e.get<std::string>() : std::to_string(e.get<std::size_t>()));
    }
    c.seeds = j.value("seeds", c.seeds);
    c.nn_step = j.value("nn_step", c.nn_step);
    c.nn_steps = j.value("nn_steps", c.nn_steps);
    c.sign_flips = j.value("sign_flips", c.sign_flips);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("recon")) {
      const auto &r = j["recon"];
      static const std::set<std::string> rkeys = {"step", "momentum", "max_iterations",
                                                  "threshold", "log_every"};
      for (const auto &[key, _] : r.items())
        if (!rkeys.contains(key))
          throw PreconditionError("unknown recon config key '" + key + "'");
      c.recon.step = r.value("step", c.recon.step);
      c.recon.momentum = r.value("momentum", c.recon.momentum);
      c.recon.max_iterations = r.value("max_iterations", c.recon.max_iterations);
      c.recon.threshold = r.value("threshold", c.recon.threshold);
      c.recon.log_every = r.value("log_every", c.recon.log_every);
    }
  } catch (const nlohmann::json::exception &e) {
    throw PreconditionError(std::string("config has a field of the wrong type: ") + e.what());
  }
  return c;
}

SweepConfig load_sweep_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str());
}

void apply_env_overrides(SweepConfig &config) {
  if (const char *out = std::getenv("RFRECON_OUT_DIR"); out && *out)
    config.out_dir = out;
  if (const char *jobs = std::getenv("RFRECON_JOBS"); jobs && *jobs)
    config.jobs = static_cast<unsigned>(std::stoul(jobs));
}

// ---------------------------------------------------------------------------
// Cells

bool SweepRecord::same_result(const SweepRecord &o) const {
  const auto same = [](double a, double b) {
    return a == b || (std::isnan(a) && std::isnan(b));
  };
  return d == o.d && n == o.n && p == o.p && seed == o.seed &&
         same(train_mse, o.train_mse) && same(rho, o.rho) && same(residual, o.residual) &&
         converged == o.converged && recon_iters == o.recon_iters &&
         error_stage == o.error_stage;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

Dataset make_dataset(const SweepConfig &c, std::uint64_t seed) {
  if (c.source == "synthetic")
    return synthetic_dataset(seed, c.n, c.d, c.k);
  const auto records = load_cifar(c.cifar_path);
  if (c.source == "cifar-binary")
    return build_cifar_subset(records, c.class_a, c.class_b, c.n);
  if (c.onehot_classes.empty() || c.n % c.onehot_classes.size() != 0)
    throw PreconditionError("cifar-onehot: n must be a multiple of the class count");
  return one_hot_labels(records, c.onehot_classes, c.n / c.onehot_classes.size());
}

namespace {

bool flips_enabled(const SweepConfig &c, const Activation &act) {
  if (c.sign_flips == "on")
    return true;
  if (c.sign_flips == "off")
    return false;
  static std::mutex mu;
  static std::map<std::string, bool> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(act.name());
  if (it == cache.end())
    it = cache.emplace(act.name(), assumption_check(hermite_coefficients(act)).sign_ambiguity).first;
  return it->second;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

SweepRecord run_cell(const SweepConfig &config, std::size_t p, std::uint64_t seed) {
  SweepRecord rec;
  rec.d = config.d;
  rec.n = config.n;
  rec.p = p;
  rec.seed = seed;
  rec.train_mse = rec.rho = rec.residual = kNaN;

  std::string stage = "config";
  try {
    const Activation act = Activation::from_name(config.activation);
    stage = "data";
    const Dataset ds = make_dataset(config, seed);
    rec.d = ds.d();
    rec.n = ds.n();
    const RngStream cell = RngStream(seed).derive(p);
    RngStream weights_rng = cell.derive(1);

    stage = "train";
    auto t0 = std::chrono::steady_clock::now();
    ReconProblem problem;
    Matrix features_weights;
    if (config.model_kind == "rf") {
      Matrix V = gaussian_matrix(weights_rng, p, ds.d(), 1.0 / std::sqrt(static_cast<double>(ds.d())));
      const RFModel model = train_rf(std::move(V), act, ds.X, ds.Y);
      rec.train_mse = training_mse(model, ds.X, ds.Y);
      problem = ReconProblem::from_rf(model, ds.n());
    } else {
      const std::size_t h = p / ds.k();
      if (h == 0)
        throw PreconditionError("p = " + std::to_string(p) + " smaller than k");
      TwoLayerModel model = init_two_layer(weights_rng, ds.d(), h, ds.k(), act);
      model = train_two_layer(std::move(model), ds.X, ds.Y, config.nn_step, config.nn_steps);
      rec.train_mse = training_mse(model, ds.X, ds.Y);
      problem = ReconProblem::from_two_layer(model, ds.n());
    }
    rec.train_ms = ms_since(t0);

    stage = "recon";
    t0 = std::chrono::steady_clock::now();
    const ReconResult res = reconstruct(problem, config.recon, cell.derive(2));
    rec.recon_ms = ms_since(t0);
    rec.converged = res.converged;
    rec.recon_iters = res.iterations;

    stage = "metrics";
    rec.rho = assignment_rho(ds.X, res.x_hat, flips_enabled(config, act)).rho;
    rec.residual = span_residual(problem.weights, act, ds.X, res.x_hat);
  } catch (const std::exception &e) {
    rec.error_stage = stage;
    rec.error_message = e.what();
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<AggregateRow> aggregate(const std::vector<SweepRecord> &records) {
  std::map<std::size_t, std::vector<const SweepRecord *>> by_p;
  for (const auto &r : records)
    by_p[r.p].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto &[p, recs] : by_p) {
    AggregateRow row;
    row.p = p;
    std::vector<const SweepRecord *> good;
    for (const auto *r : recs)
      if (r->ok())
        good.push_back(r);
    row.n_seeds = good.size();
    const auto stats = [&](auto field, double &mean, double &sd) {
      if (good.empty()) {
        mean = sd = kNaN;
        return;
      }
      double s = 0.0;
      for (const auto *r : good)
        s += field(*r);
      mean = s / static_cast<double>(good.size());
      double v = 0.0;
      for (const auto *r : good)
        v += (field(*r) - mean) * (field(*r) - mean);
      sd = std::sqrt(v / static_cast<double>(good.size()));
    };
    stats([](const SweepRecord &r) { return r.rho; }, row.rho_mean, row.rho_std);
    stats([](const SweepRecord &r) { return r.train_mse; }, row.mse_mean, row.mse_std);
    stats([](const SweepRecord &r) { return r.residual; }, row.residual_mean, row.residual_std);
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_sweep(const SweepConfig &config, const ProgressFn &progress) {
  config.validate();
  const auto ps = config.resolved_p_grid();
  struct Cell {
    std::size_t p;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t p : ps)
    for (std::uint64_t s : config.seeds)
      cells.push_back({p, s});

  SweepResult result;
  result.records.resize(cells.size());
  unsigned jobs = config.jobs ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cells.size()));

  std::mutex out_mu;
  const auto finish = [&](std::size_t idx, SweepRecord rec) {
    std::lock_guard lock(out_mu);
    result.records[idx] = std::move(rec);
    if (progress)
      progress(result.records[idx]);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      finish(i, run_cell(config, cells[i].p, cells[i].seed));
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        kernels::set_threads(1);
        for (std::size_t i = next++; i < cells.size(); i = next++)
          finish(i, run_cell(config, cells[i].p, cells[i].seed));
      });
    for (auto &t : pool)
      t.join();
  }
  for (const auto &r : result.records)
    if (!r.ok())
      ++result.failed;
  result.aggregates = aggregate(result.records);
  return result;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v))
    return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string &s) {
  if (s == "nan")
    return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size())
    throw FormatError("bad number '" + s + "' in CSV", 0);
  return v;
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  return out;
}

constexpr const char *kRecordsHeader =
    "d,n,p,seed,train_mse,rho,residual,converged,recon_iters,train_ms,recon_ms";
constexpr const char *kAggregatesHeader =
    "p,rho_mean,rho_std,mse_mean,mse_std,residual_mean,residual_std,n_seeds";

} // namespace

void write_records_csv(std::ostream &out, const std::vector<SweepRecord> &records) {
  out << kRecordsHeader << '\n';
  for (const auto &r : records)
    out << r.d << ',' << r.n << ',' << r.p << ',' << r.seed << ',' << fmt_double(r.train_mse)
        << ',' << fmt_double(r.rho) << ',' << fmt_double(r.residual) << ','
        << (r.converged ? 1 : 0) << ',' << r.recon_iters << ',' << fmt_double(r.train_ms) << ','
        << fmt_double(r.recon_ms) << '\n';
}

std::vector<SweepRecord> read_records_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader)
    throw FormatError("records CSV header mismatch", 0);
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto f = split_csv(line);
    if (f.size() != 11)
      throw FormatError("records CSV row has " + std::to_string(f.size()) + " fields", 0);
    SweepRecord r;
    r.d = std::stoull(f[0]);
    r.n = std::stoull(f[1]);
    r.p = std::stoull(f[2]);
    r.seed = std::stoull(f[3]);
    r.train_mse = parse_double(f[4]);
    r.rho = parse_double(f[5]);
    r.residual = parse_double(f[6]);
    r.converged = f[7] == "1";
    r.recon_iters = std::stoull(f[8]);
    r.train_ms = parse_double(f[9]);
    r.recon_ms = parse_double(f[10]);
    if (std::isnan(r.rho))
      r.error_stage = "unknown";
    out.push_back(r);
  }
  return out;
}

void write_aggregates_csv(std::ostream &out, const std::vector<AggregateRow> &rows) {
  out << kAggregatesHeader << '\n';
  for (const auto &a : rows)
    out << a.p << ',' << fmt_double(a.rho_mean) << ',' << fmt_double(a.rho_std) << ','
        << fmt_double(a.mse_mean) << ',' << fmt_double(a.mse_std) << ','
        << fmt_double(a.residual_mean) << ',' << fmt_double(a.residual_std) << ',' << a.n_seeds
        << '\n';
}

std::vector<AggregateRow> read_aggregates_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line != kAggregatesHeader)
    throw FormatError("aggregates CSV header mismatch", 0);
  std::vector<AggregateRow> out;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto f = split_csv(line);
    if (f.size() != 8)
      throw FormatError("aggregates CSV row has " + std::to_string(f.size()) + " fields", 0);
    AggregateRow a;
    a.p = std::stoull(f[0]);
    a.rho_mean = parse_double(f[1]);
    a.rho_std = parse_double(f[2]);
    a.mse_mean = parse_double(f[3]);
    a.mse_std = parse_double(f[4]);
    a.residual_mean = parse_double(f[5]);
    a.residual_std = parse_double(f[6]);
    a.n_seeds = std::stoull(f[7]);
    out.push_back(a);
  }
  return out;
}

void write_trace_csv(std::ostream &out, const std::vector<TracePoint> &trace) {
  out << "iteration,normalized_loss,wall_ms\n";
  for (const auto &t : trace)
    out << t.iteration << ',' << fmt_double(t.normalized_loss) << ',' << fmt_double(t.wall_ms)
        << '\n';
}

void write_sweep_outputs(const SweepConfig &config, const SweepResult &result) {
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "records.csv");
    write_records_csv(f, result.records);
  }
  {
    std::ofstream f(dir / "aggregates.csv");
    write_aggregates_csv(f, result.aggregates);
  }
  nlohmann::json summary;
  summary["cells"] = result.records.size();
  summary["failed"] = result.failed;
  summary["failures"] = nlohmann::json::array();
  for (const auto &r : result.records)
    if (!r.ok())
      summary["failures"].push_back(
          {{"p", r.p}, {"seed", r.seed}, {"stage", r.error_stage}, {"message", r.error_message}});
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
}

} // namespace rfrecon
