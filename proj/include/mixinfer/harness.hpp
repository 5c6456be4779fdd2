#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mixinfer/baselines.hpp"
#include "mixinfer/corpus.hpp"
#include "mixinfer/inference.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/synthetic.hpp"

namespace mixinfer {

enum class ExperimentMode { controlled, withheld, shift, scaling };
std::string to_string(ExperimentMode mode);
ExperimentMode parse_experiment_mode(std::string_view text);

enum class SweepAxis { estimate_bytes, T };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

// One experiment. The plain-text form is `key = value` per line with `#`
// comments; byte sizes accept KB/MB/GB suffixes (powers of 1000). Keys are
// the field names below; lists are comma separated.
struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::controlled;
  std::size_t categories = 5;  // per mixture
  std::size_t trials = 10;
  std::uint64_t train_bytes = 20'000'000;
  std::uint64_t estimate_bytes = 2'000'000;
  std::size_t num_merges = 3000;
  std::size_t T = 3000;
  std::vector<Method> methods{Method::attack, Method::tee, Method::tc, Method::random};
  std::size_t withheld_k = 0;
  double withheld_max_weight = 0.15;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  // Category pool: a manifest, or synthetic categories when empty.
  std::filesystem::path pool_manifest;
  std::size_t pool_size = 0;  // synthetic; 0 means `categories`
  SyntheticSpec synthetic;

  // Distribution shift: alternate estimation corpora, either a manifest with
  // the same ids as the pool, or synthetic rank shuffling of this fraction.
  std::filesystem::path shift_manifest;
  double shift_fraction = 0.0;

  SweepAxis sweep_axis = SweepAxis::estimate_bytes;
  std::vector<std::uint64_t> sweep_values;

  // Attack settings.
  std::size_t batch_limit = 10000;
  std::size_t max_rounds = 200;
  double epsilon = -1.0;
  SolverBackend solver = SolverBackend::embedded_simplex;
  std::string solver_command;

  // Encoding-efficiency baseline: single-category references and calibration
  // tokenizers are trained on tee_bytes (0 means train_bytes).
  std::size_t tee_calibration_mixtures = 4;
  std::uint64_t tee_bytes = 0;

  PretokenRules pretokenize;

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError with the offending line number.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
std::string format_experiment_config(const ExperimentConfig& cfg);

// log10 of the mean squared error; -infinity when the vectors are equal.
double log10_mse(const std::vector<double>& alpha_hat, const std::vector<double>& alpha_star);

struct MethodResult {
  Method method = Method::attack;
  std::vector<double> alpha_hat;
  // Against the visible categories' true weights as sampled.
  double log10_mse = 0.0;
  // Against those weights renormalized to sum to one.
  double log10_mse_normalized = 0.0;
  double seconds = 0.0;
  bool converged = true;
  std::string error;
  bool ok() const { return error.empty(); }
};

struct ReportRow {
  std::size_t trial = 0;
  std::uint64_t sweep_value = 0;  // scaling runs only
  std::vector<std::uint32_t> categories;  // pool ids the methods see
  std::vector<double> true_weights;       // for `categories`, unnormalized
  std::vector<std::uint32_t> withheld;
  double withheld_mass = 0.0;
  std::vector<MethodResult> methods;
  double seconds = 0.0;
  std::string error;  // trial-level failure; methods may be empty
};

struct ExperimentPool {
  std::vector<CategorySource> primary;
  std::vector<CategorySource> shifted;  // empty unless shifting
};

// Loads or generates the pool; synthetic categories get enough bytes for one
// category to fill the whole training budget plus the largest estimate.
ExperimentPool load_pool(const ExperimentConfig& cfg);

std::vector<ReportRow> run_controlled(const ExperimentConfig& cfg, const ExperimentPool& pool);
std::vector<ReportRow> run_withheld(const ExperimentConfig& cfg, const ExperimentPool& pool);
std::vector<ReportRow> run_shift(const ExperimentConfig& cfg, const ExperimentPool& pool);
std::vector<ReportRow> run_scaling(const ExperimentConfig& cfg, const ExperimentPool& pool);

// Dispatches on cfg.mode, loading the pool first.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::uint64_t sweep_value = 0;
  Method method = Method::attack;
  double mean_log10_mse = 0.0;
  double std_log10_mse = 0.0;  // sample deviation; 0 for a single trial
  std::size_t count = 0;       // finite, successful results
};

// Per method (and sweep value), over successful results with finite error.
std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows, const std::vector<Method>& methods);

// report.csv:  trial,method,category,true_weight,est_weight
// summary.csv: method,mean_log10_mse,std_log10_mse (scaling runs lead with sweep_value)
// trials.csv:  per trial and method: errors, timing, convergence, status
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary, bool with_sweep_value);
void write_trials_csv(std::ostream& out, const std::vector<ReportRow>& rows, bool with_sweep_value);
void write_reports(const std::filesystem::path& dir, const ExperimentConfig& cfg, const std::vector<ReportRow>& rows);

}  // namespace mixinfer
