#pragma once

// Sweep orchestration: one cell = generate data, train, reconstruct, score.

#include "rfrecon/datagen.hpp"
#include "rfrecon/recon.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace rfrecon {

struct SweepConfig {
  std::string source = "synthetic";     // synthetic | cifar-binary | cifar-onehot
  std::string cifar_path;               // directory with data_batch_*.bin or one file
  int class_a = 6;                      // frog, label -1
  int class_b = 9;                      // truck, label +1
  std::vector<int> onehot_classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t d = 100;
  std::size_t n = 20;
  std::size_t k = 1;
  std::string activation = "relu";
  std::string model_kind = "rf";        // rf | two-layer
  /// Entries are integers or multipliers: "0.5n", "2n", "1dn", "10dn".
  std::vector<std::string> p_grid = {"2n", "1dn", "10dn"};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  ReconConfig recon;
  double nn_step = 1e-5;
  std::size_t nn_steps = 1000000;
  std::string sign_flips = "auto";      // auto | on | off
  std::string out_dir = "sweep_out";
  unsigned jobs = 0;                    // 0 = hardware concurrency

  /// Resolved, ascending p values; throws PreconditionError if the grid is
  /// empty, unsorted or contains duplicates, or seeds repeat.
  std::vector<std::size_t> resolved_p_grid() const;
  void validate() const;
};

/// "10dn" -> 10 * d * n, "0.5n" -> n / 2, "400" -> 400. Rounds to nearest.
std::size_t resolve_p(const std::string &spec, std::size_t d, std::size_t n);

/// Reads the JSON config document (see README for the schema). Unknown keys
/// are rejected.
SweepConfig load_sweep_config(const std::filesystem::path &path);
SweepConfig parse_sweep_config(const std::string &json_text);
/// RFRECON_OUT_DIR and RFRECON_JOBS override out_dir and jobs.
void apply_env_overrides(SweepConfig &config);

struct SweepRecord {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  double train_mse = 0.0;
  double rho = 0.0;
  double residual = 0.0;
  bool converged = false;
  std::size_t recon_iters = 0;
  double train_ms = 0.0;
  double recon_ms = 0.0;
  std::string error_stage;   // empty on success
  std::string error_message;

  bool ok() const { return error_stage.empty(); }
  /// Field equality ignoring wall-clock times.
  bool same_result(const SweepRecord &other) const;
};

/// Training data for a cell, from the configured source. Synthetic data uses
/// `seed`; CIFAR subsets ignore it.
Dataset make_dataset(const SweepConfig &config, std::uint64_t seed);

/// Fully determined by (config, p, seed): data from stream (seed), weights
/// and reconstruction init from streams keyed by (seed, p). Stage errors are
/// captured in the record, never thrown.
SweepRecord run_cell(const SweepConfig &config, std::size_t p, std::uint64_t seed);

struct AggregateRow {
  std::size_t p = 0;
  double rho_mean = 0.0, rho_std = 0.0;
  double mse_mean = 0.0, mse_std = 0.0;
  double residual_mean = 0.0, residual_std = 0.0;
  std::size_t n_seeds = 0;   // successful cells
};

/// Per-p mean and population standard deviation over successful cells.
std::vector<AggregateRow> aggregate(const std::vector<SweepRecord> &records);

struct SweepResult {
  std::vector<SweepRecord> records;   // grid order: p-major, then seeds
  std::vector<AggregateRow> aggregates;
  std::size_t failed = 0;
};

using ProgressFn = std::function<void(const SweepRecord &)>;

/// Runs every (p, seed) cell on a pool of `config.jobs` workers, each
/// single-threaded. Results do not depend on the worker count.
SweepResult run_sweep(const SweepConfig &config, const ProgressFn &progress = {});

/// Writes records.csv, aggregates.csv and summary.json into config.out_dir.
void write_sweep_outputs(const SweepConfig &config, const SweepResult &result);

// CSV: records.csv columns
//   d,n,p,seed,train_mse,rho,residual,converged,recon_iters,train_ms,recon_ms
// aggregates.csv columns
//   p,rho_mean,rho_std,mse_mean,mse_std,residual_mean,residual_std,n_seeds
// Failed cells appear with nan metrics. Doubles use 17 significant digits.
void write_records_csv(std::ostream &out, const std::vector<SweepRecord> &records);
std::vector<SweepRecord> read_records_csv(std::istream &in);
void write_aggregates_csv(std::ostream &out, const std::vector<AggregateRow> &rows);
std::vector<AggregateRow> read_aggregates_csv(std::istream &in);
/// iteration,normalized_loss,wall_ms
void write_trace_csv(std::ostream &out, const std::vector<TracePoint> &trace);

} // namespace rfrecon
