#include "mixinfer/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "mixinfer/bpe.hpp"
#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"
#include "mixinfer/timeline.hpp"

namespace mixinfer {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view s, std::size_t line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'", line);
  return v;
}

double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a number, got '" + std::string(s) + "'", line);
  return v;
}

std::uint64_t parse_bytes(std::string_view s, std::size_t line) {
  std::uint64_t mult = 1;
  std::string upper(s);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (const auto& [suffix, m] : {std::pair<std::string_view, std::uint64_t>{"GB", 1'000'000'000ull},
                                  {"MB", 1'000'000ull}, {"KB", 1'000ull}, {"B", 1ull}}) {
    if (upper.size() > suffix.size() && std::string_view(upper).ends_with(suffix)) {
      mult = m;
      s = trim(s.substr(0, s.size() - suffix.size()));
      break;
    }
  }
  if (mult == 1) return parse_integer<std::uint64_t>(s, line);
  const double v = parse_real(s, line);
  if (v < 0) throw ConfigError("byte size must be non-negative", line);
  return static_cast<std::uint64_t>(std::llround(v * static_cast<double>(mult)));
}

bool parse_bool(std::string_view s, std::size_t line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'", line);
}

template <typename F>
auto rethrow_as_config(std::size_t line, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), line);
  }
}

std::string join_methods(const std::vector<Method>& methods) {
  std::string out;
  for (std::size_t i = 0; i < methods.size(); ++i) out += (i ? "," : "") + to_string(methods[i]);
  return out;
}

// Estimate prefix of at least `bytes`, cut after a document boundary.
std::string prefix_documents(const std::string& text, std::uint64_t bytes) {
  if (bytes >= text.size()) return text;
  const auto nl = text.find('\n', bytes > 0 ? bytes - 1 : 0);
  return nl == std::string::npos ? text : text.substr(0, nl + 1);
}

AttackConfig attack_config(const ExperimentConfig& cfg, std::size_t T) {
  AttackConfig a;
  a.T = T;
  a.epsilon = cfg.epsilon;
  a.max_rounds = cfg.max_rounds;
  a.solver = cfg.solver;
  a.batch_limit = cfg.batch_limit;
  a.external_command = cfg.solver_command;
  return a;
}

std::uint64_t largest_estimate(const ExperimentConfig& cfg) {
  std::uint64_t est = cfg.estimate_bytes;
  if (cfg.mode == ExperimentMode::scaling && cfg.sweep_axis == SweepAxis::estimate_bytes)
    for (auto v : cfg.sweep_values) est = std::max(est, v);
  return est;
}

std::size_t largest_T(const ExperimentConfig& cfg) {
  std::size_t T = cfg.T;
  if (cfg.mode == ExperimentMode::scaling && cfg.sweep_axis == SweepAxis::T)
    for (auto v : cfg.sweep_values) T = std::max<std::size_t>(T, v);
  return T;
}

// Everything a trial shares across methods and sweep values.
struct Trial {
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> chosen;  // pool ids in the mixture
  std::vector<double> weights;
  std::vector<std::size_t> visible;  // indices into chosen
  std::vector<std::size_t> withheld;
  MergeList merges;
  std::vector<std::string> estimates;  // per visible category
  // Encoding-efficiency models, built on first use.
  std::optional<std::vector<MergeList>> references;
  std::vector<std::pair<MergeList, std::vector<double>>> calibration;
};

std::vector<std::uint32_t> choose_categories(const ExperimentConfig& cfg, std::size_t pool_size,
                                             std::uint64_t seed) {
  std::vector<std::uint32_t> ids(pool_size);
  std::iota(ids.begin(), ids.end(), 0u);
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(cfg.categories);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Samples weights; with withholding, redraws until enough categories fall
// under the withheld mass cap.
void sample_weights(const ExperimentConfig& cfg, std::size_t k, Trial& trial) {
  const std::size_t n = cfg.categories;
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    trial.weights = sample_simplex_weights(n, derive_seed(trial.seed, 2 + 1000 * attempt)).weights;
    trial.visible.clear();
    trial.withheld.clear();
    if (k == 0) {
      trial.visible.resize(n);
      std::iota(trial.visible.begin(), trial.visible.end(), 0u);
      return;
    }
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < n; ++i)
      if (trial.weights[i] <= cfg.withheld_max_weight) eligible.push_back(i);
    if (eligible.size() < k) continue;
    std::mt19937_64 rng(derive_seed(trial.seed, 3));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    trial.withheld.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(trial.withheld.begin(), trial.withheld.end());
    for (std::size_t i = 0; i < n; ++i)
      if (!std::binary_search(trial.withheld.begin(), trial.withheld.end(), i)) trial.visible.push_back(i);
    return;
  }
  throw DataError("could not sample weights with " + std::to_string(k) + " categories at or below " +
                  number(cfg.withheld_max_weight));
}

Trial prepare_trial(const ExperimentConfig& cfg, const ExperimentPool& pool, std::size_t index, std::size_t k,
                    bool shift) {
  Trial trial;
  trial.seed = derive_seed(cfg.seed, index);
  trial.chosen = choose_categories(cfg, pool.primary.size(), trial.seed);
  sample_weights(cfg, k, trial);
  const auto budgets = allocate_budgets(MixtureSpec{trial.weights}, cfg.train_bytes);
  const std::uint64_t est = largest_estimate(cfg);
  WordTable words;
  std::vector<std::string> estimates(cfg.categories);
  for (std::size_t i = 0; i < cfg.categories; ++i) {
    const std::uint64_t split_seed = derive_seed(trial.seed, 100 + i);
    auto split = split_train_estimate(pool.primary[trial.chosen[i]], budgets[i], est, split_seed);
    words.merge(pretokenize(split.train, cfg.pretokenize));
    if (shift)
      estimates[i] = split_train_estimate(pool.shifted[trial.chosen[i]], budgets[i], est, split_seed).estimate;
    else
      estimates[i] = std::move(split.estimate);
  }
  const std::size_t merges = std::max(cfg.num_merges, largest_T(cfg));
  trial.merges = train(words, merges);
  if (trial.merges.size() < largest_T(cfg))
    throw DataError("training produced " + std::to_string(trial.merges.size()) + " merges, fewer than T");
  for (auto i : trial.visible) trial.estimates.push_back(std::move(estimates[i]));
  return trial;
}

void build_tee_models(const ExperimentConfig& cfg, const ExperimentPool& pool, Trial& trial) {
  if (trial.references) return;
  const std::uint64_t bytes = cfg.tee_bytes ? cfg.tee_bytes : cfg.train_bytes;
  const std::size_t merges = trial.merges.size();
  const std::size_t m = trial.visible.size();
  std::vector<MergeList> refs;
  for (std::size_t v = 0; v < m; ++v) {
    const auto& source = pool.primary[trial.chosen[trial.visible[v]]];
    const auto split = split_train_estimate(source, bytes, 0, derive_seed(trial.seed, 200 + v));
    refs.push_back(train(pretokenize(split.train, cfg.pretokenize), merges));
  }
  for (std::size_t j = 0; j < cfg.tee_calibration_mixtures; ++j) {
    const auto mix = sample_simplex_weights(m, derive_seed(trial.seed, 300 + j));
    const auto budgets = allocate_budgets(mix, bytes);
    WordTable words;
    for (std::size_t v = 0; v < m; ++v) {
      if (budgets[v] == 0) continue;
      const auto& source = pool.primary[trial.chosen[trial.visible[v]]];
      const auto split = split_train_estimate(source, budgets[v], 0, derive_seed(trial.seed, 400 + 1000 * j + v));
      words.merge(pretokenize(split.train, cfg.pretokenize));
    }
    trial.calibration.emplace_back(train(words, merges), mix.weights);
  }
  trial.references = std::move(refs);
}

std::vector<CalibrationPoint> calibration_points(const ExperimentConfig& cfg, const Trial& trial,
                                                 const std::vector<std::string>& samples) {
  std::vector<CalibrationPoint> points;
  for (const auto& [tokenizer, weights] : trial.calibration) {
    const auto eff = relative_efficiencies(tokenizer, *trial.references, samples, cfg.pretokenize);
    for (std::size_t i = 0; i < eff.size(); ++i) points.push_back({eff[i], weights[i]});
  }
  return points;
}

MethodResult run_method(const ExperimentConfig& cfg, const ExperimentPool& pool, Trial& trial, Method method,
                        const std::vector<std::string>& samples, std::size_t T) {
  MethodResult r;
  r.method = method;
  const auto start = Clock::now();
  try {
    switch (method) {
      case Method::attack: {
        std::vector<WordTable> tables;
        tables.reserve(samples.size());
        for (const auto& s : samples) tables.push_back(pretokenize(s, cfg.pretokenize));
        const auto timelines = replay_all(tables, trial.merges, T);
        const auto est = infer_mixture(trial.merges, timelines, attack_config(cfg, T));
        r.alpha_hat = est.alpha_hat;
        r.converged = est.converged;
        break;
      }
      case Method::tc:
        r.alpha_hat = tc_estimate(trial.merges, samples, cfg.pretokenize).alpha_hat;
        break;
      case Method::tee: {
        build_tee_models(cfg, pool, trial);
        const auto points = calibration_points(cfg, trial, samples);
        r.alpha_hat = tee_estimate(trial.merges, *trial.references, samples, cfg.pretokenize, points).alpha_hat;
        break;
      }
      case Method::random:
        r.alpha_hat = random_estimate(samples.size(), derive_seed(trial.seed, 4)).alpha_hat;
        break;
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    r.converged = false;
  }
  r.seconds = elapsed(start);
  return r;
}

void score_result(MethodResult& r, const std::vector<double>& truth) {
  if (!r.ok()) {
    r.log10_mse = r.log10_mse_normalized = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  r.log10_mse = log10_mse(r.alpha_hat, truth);
  const double mass = std::accumulate(truth.begin(), truth.end(), 0.0);
  auto normalized = truth;
  if (mass > 0)
    for (auto& w : normalized) w /= mass;
  r.log10_mse_normalized = log10_mse(r.alpha_hat, normalized);
}

ReportRow row_skeleton(const Trial& trial, std::size_t index) {
  ReportRow row;
  row.trial = index;
  for (auto i : trial.visible) {
    row.categories.push_back(trial.chosen[i]);
    row.true_weights.push_back(trial.weights[i]);
  }
  for (auto i : trial.withheld) {
    row.withheld.push_back(trial.chosen[i]);
    row.withheld_mass += trial.weights[i];
  }
  return row;
}

// Runs every trial (in parallel up to cfg.jobs) and returns rows in trial
// order; `values` holds sweep values, or a single 0 outside scaling runs.
std::vector<ReportRow> run_trials(const ExperimentConfig& cfg, const ExperimentPool& pool, std::size_t k, bool shift,
                                  const std::vector<std::uint64_t>& values) {
  cfg.validate();
  if (pool.primary.size() < cfg.categories)
    throw ConfigError("pool holds " + std::to_string(pool.primary.size()) + " categories, fewer than " +
                      std::to_string(cfg.categories));
  if (shift && pool.shifted.size() != pool.primary.size())
    throw ConfigError("shift sources must cover every pool category");
  const bool scaling = cfg.mode == ExperimentMode::scaling;
  const std::size_t per_trial = values.size();
  std::vector<ReportRow> rows(cfg.trials * per_trial);
  const auto trials = static_cast<std::ptrdiff_t>(cfg.trials);
#pragma omp parallel for num_threads(static_cast<int>(std::max<std::size_t>(cfg.jobs, 1))) schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < trials; ++t) {
    const auto index = static_cast<std::size_t>(t);
    const auto start = Clock::now();
    ReportRow* out = &rows[index * per_trial];
    try {
      Trial trial = prepare_trial(cfg, pool, index, k, shift);
      // Methods that do not depend on the sweep value are computed once.
      std::map<Method, MethodResult> fixed;
      for (std::size_t v = 0; v < per_trial; ++v) {
        ReportRow& row = out[v];
        row = row_skeleton(trial, index);
        row.sweep_value = scaling ? values[v] : 0;
        std::vector<std::string> samples;
        std::size_t T = cfg.T;
        if (scaling && cfg.sweep_axis == SweepAxis::estimate_bytes) {
          for (const auto& e : trial.estimates) samples.push_back(prefix_documents(e, values[v]));
        } else {
          samples = trial.estimates;
          if (scaling) T = values[v];
        }
        for (Method m : cfg.methods) {
          const bool value_free = scaling && cfg.sweep_axis == SweepAxis::T && m != Method::attack;
          MethodResult r;
          if (value_free && fixed.count(m)) {
            r = fixed[m];
          } else {
            r = run_method(cfg, pool, trial, m, samples, T);
            score_result(r, row.true_weights);
            if (value_free) fixed[m] = r;
          }
          if (!r.ok()) log::warning("trial " + std::to_string(index) + " " + to_string(m) + ": " + r.error);
          row.methods.push_back(std::move(r));
        }
      }
    } catch (const std::exception& e) {
      log::warning("trial " + std::to_string(index) + " failed: " + e.what());
      for (std::size_t v = 0; v < per_trial; ++v) {
        out[v] = ReportRow{};
        out[v].trial = index;
        out[v].sweep_value = scaling ? values[v] : 0;
        out[v].error = e.what();
      }
    }
    const double seconds = elapsed(start);
    for (std::size_t v = 0; v < per_trial; ++v) out[v].seconds = seconds;
    log::info("trial " + std::to_string(index) + " done in " + number(seconds) + "s");
  }
  if (scaling)
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ReportRow& a, const ReportRow& b) { return a.sweep_value < b.sweep_value; });
  return rows;
}

}  // namespace

std::string to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::controlled: return "controlled";
    case ExperimentMode::withheld: return "withheld";
    case ExperimentMode::shift: return "shift";
    case ExperimentMode::scaling: return "scaling";
  }
  return "unknown";
}

ExperimentMode parse_experiment_mode(std::string_view text) {
  if (text == "controlled") return ExperimentMode::controlled;
  if (text == "withheld") return ExperimentMode::withheld;
  if (text == "shift") return ExperimentMode::shift;
  if (text == "scaling") return ExperimentMode::scaling;
  throw InvalidArgument("unknown experiment mode '" + std::string(text) + "'");
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::T ? "T" : "estimate_bytes"; }

SweepAxis parse_sweep_axis(std::string_view text) {
  if (text == "T") return SweepAxis::T;
  if (text == "estimate_bytes") return SweepAxis::estimate_bytes;
  throw InvalidArgument("unknown sweep axis '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  if (categories == 0) throw ConfigError("categories must be at least 1");
  if (pool_manifest.empty() && pool_size != 0 && pool_size < categories)
    throw ConfigError("pool_size is smaller than categories");
  if (withheld_k >= categories) throw ConfigError("withheld_k must be smaller than categories");
  if (withheld_max_weight <= 0.0 || withheld_max_weight > 1.0)
    throw ConfigError("withheld_max_weight must lie in (0, 1]");
  if (train_bytes == 0) throw ConfigError("train_bytes must be positive");
  if (estimate_bytes == 0) throw ConfigError("estimate_bytes must be positive");
  if (T == 0) throw ConfigError("T must be positive");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if (shift_fraction < 0.0 || shift_fraction > 1.0) throw ConfigError("shift_fraction must lie in [0, 1]");
  if (mode == ExperimentMode::scaling) {
    if (sweep_values.empty()) throw ConfigError("scaling runs need sweep_values");
    for (auto v : sweep_values)
      if (v == 0) throw ConfigError("sweep values must be positive");
  }
  if (mode != ExperimentMode::scaling || sweep_axis != SweepAxis::T) {
    if (T > num_merges) throw ConfigError("T exceeds num_merges");
  }
  if (tee_calibration_mixtures == 0 &&
      std::find(methods.begin(), methods.end(), Method::tee) != methods.end())
    throw ConfigError("tee needs at least one calibration mixture");
  try {
    synthetic.validate();
    pretokenize.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  bool pool_seed_set = false;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("missing value for '" + std::string(key) + "'", line_no);
    const std::size_t l = line_no;
    if (key == "mode") cfg.mode = rethrow_as_config(l, [&] { return parse_experiment_mode(value); });
    else if (key == "categories") cfg.categories = parse_integer<std::size_t>(value, l);
    else if (key == "trials") cfg.trials = parse_integer<std::size_t>(value, l);
    else if (key == "train_bytes") cfg.train_bytes = parse_bytes(value, l);
    else if (key == "estimate_bytes") cfg.estimate_bytes = parse_bytes(value, l);
    else if (key == "num_merges") cfg.num_merges = parse_integer<std::size_t>(value, l);
    else if (key == "T") cfg.T = parse_integer<std::size_t>(value, l);
    else if (key == "methods") {
      cfg.methods.clear();
      for (auto item : split_list(value)) {
        const Method m = rethrow_as_config(l, [&] { return parse_method(item); });
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end())
          throw ConfigError("duplicate method '" + std::string(item) + "'", l);
        cfg.methods.push_back(m);
      }
    } else if (key == "withheld_k") cfg.withheld_k = parse_integer<std::size_t>(value, l);
    else if (key == "withheld_max_weight") cfg.withheld_max_weight = parse_real(value, l);
    else if (key == "seed") cfg.seed = parse_integer<std::uint64_t>(value, l);
    else if (key == "jobs") cfg.jobs = parse_integer<std::size_t>(value, l);
    else if (key == "pool_manifest") cfg.pool_manifest = std::string(value);
    else if (key == "pool_size") cfg.pool_size = parse_integer<std::size_t>(value, l);
    else if (key == "pool_seed") {
      cfg.synthetic.seed = parse_integer<std::uint64_t>(value, l);
      pool_seed_set = true;
    } else if (key == "alphabet_size") cfg.synthetic.alphabet_size = parse_integer<std::size_t>(value, l);
    else if (key == "overlap") cfg.synthetic.overlap = parse_real(value, l);
    else if (key == "lexicon_size") cfg.synthetic.lexicon_size = parse_integer<std::size_t>(value, l);
    else if (key == "zipf_exponent") cfg.synthetic.zipf_exponent = parse_real(value, l);
    else if (key == "letter_skew") cfg.synthetic.letter_skew = parse_real(value, l);
    else if (key == "shift_manifest") cfg.shift_manifest = std::string(value);
    else if (key == "shift_fraction") cfg.shift_fraction = parse_real(value, l);
    else if (key == "sweep_axis") cfg.sweep_axis = rethrow_as_config(l, [&] { return parse_sweep_axis(value); });
    else if (key == "sweep_values") {
      cfg.sweep_values.clear();
      for (auto item : split_list(value)) cfg.sweep_values.push_back(parse_bytes(item, l));
    } else if (key == "batch_limit") cfg.batch_limit = parse_integer<std::size_t>(value, l);
    else if (key == "max_rounds") cfg.max_rounds = parse_integer<std::size_t>(value, l);
    else if (key == "epsilon") cfg.epsilon = parse_real(value, l);
    else if (key == "solver") cfg.solver = rethrow_as_config(l, [&] { return parse_solver_backend(value); });
    else if (key == "solver_command") cfg.solver_command = std::string(value);
    else if (key == "tee_calibration_mixtures") cfg.tee_calibration_mixtures = parse_integer<std::size_t>(value, l);
    else if (key == "tee_bytes") cfg.tee_bytes = parse_bytes(value, l);
    else if (key == "space_attachment")
      cfg.pretokenize.space_attachment = rethrow_as_config(l, [&] { return parse_space_attachment(value); });
    else if (key == "split_on_whitespace") cfg.pretokenize.split_on_whitespace = parse_bool(value, l);
    else if (key == "isolate_digit_runs") cfg.pretokenize.isolate_digit_runs = parse_bool(value, l);
    else throw ConfigError("unknown key '" + std::string(key) + "'", l);
  }
  if (!pool_seed_set) cfg.synthetic.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "mode = " << to_string(cfg.mode) << "\n"
    << "categories = " << cfg.categories << "\n"
    << "trials = " << cfg.trials << "\n"
    << "train_bytes = " << cfg.train_bytes << "\n"
    << "estimate_bytes = " << cfg.estimate_bytes << "\n"
    << "num_merges = " << cfg.num_merges << "\n"
    << "T = " << cfg.T << "\n"
    << "methods = " << join_methods(cfg.methods) << "\n"
    << "withheld_k = " << cfg.withheld_k << "\n"
    << "withheld_max_weight = " << number(cfg.withheld_max_weight) << "\n"
    << "seed = " << cfg.seed << "\n"
    << "jobs = " << cfg.jobs << "\n";
  if (!cfg.pool_manifest.empty()) o << "pool_manifest = " << cfg.pool_manifest.string() << "\n";
  o << "pool_size = " << cfg.pool_size << "\n"
    << "pool_seed = " << cfg.synthetic.seed << "\n"
    << "alphabet_size = " << cfg.synthetic.alphabet_size << "\n"
    << "overlap = " << number(cfg.synthetic.overlap) << "\n"
    << "lexicon_size = " << cfg.synthetic.lexicon_size << "\n"
    << "zipf_exponent = " << number(cfg.synthetic.zipf_exponent) << "\n"
    << "letter_skew = " << number(cfg.synthetic.letter_skew) << "\n";
  if (!cfg.shift_manifest.empty()) o << "shift_manifest = " << cfg.shift_manifest.string() << "\n";
  o << "shift_fraction = " << number(cfg.shift_fraction) << "\n"
    << "sweep_axis = " << to_string(cfg.sweep_axis) << "\n";
  if (!cfg.sweep_values.empty()) {
    o << "sweep_values = ";
    for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) o << (i ? "," : "") << cfg.sweep_values[i];
    o << "\n";
  }
  o << "batch_limit = " << cfg.batch_limit << "\n"
    << "max_rounds = " << cfg.max_rounds << "\n"
    << "epsilon = " << number(cfg.epsilon) << "\n"
    << "solver = " << to_string(cfg.solver) << "\n";
  if (!cfg.solver_command.empty()) o << "solver_command = " << cfg.solver_command << "\n";
  o << "tee_calibration_mixtures = " << cfg.tee_calibration_mixtures << "\n"
    << "tee_bytes = " << cfg.tee_bytes << "\n"
    << "space_attachment = " << to_string(cfg.pretokenize.space_attachment) << "\n"
    << "split_on_whitespace = " << (cfg.pretokenize.split_on_whitespace ? "true" : "false") << "\n"
    << "isolate_digit_runs = " << (cfg.pretokenize.isolate_digit_runs ? "true" : "false") << "\n";
  return o.str();
}

double log10_mse(const std::vector<double>& alpha_hat, const std::vector<double>& alpha_star) {
  if (alpha_hat.size() != alpha_star.size())
    throw InvalidArgument("log10_mse: length mismatch (" + std::to_string(alpha_hat.size()) + " vs " +
                          std::to_string(alpha_star.size()) + ")");
  if (alpha_hat.empty()) throw InvalidArgument("log10_mse: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha_hat.size(); ++i) {
    const double d = alpha_hat[i] - alpha_star[i];
    sum += d * d;
  }
  if (sum == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log10(sum / static_cast<double>(alpha_hat.size()));
}

ExperimentPool load_pool(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentPool pool;
  const bool shifting = cfg.mode == ExperimentMode::shift;
  if (!cfg.pool_manifest.empty()) {
    for (const auto& spec : read_manifest(cfg.pool_manifest)) pool.primary.push_back(load_category(spec));
  } else {
    SyntheticSpec spec = cfg.synthetic;
    spec.categories = cfg.pool_size ? cfg.pool_size : cfg.categories;
    const std::uint64_t bytes = (cfg.train_bytes + largest_estimate(cfg)) * 21 / 20 + 4096;
    pool.primary = generate_pool(spec, bytes);
    if (shifting && cfg.shift_manifest.empty() && cfg.shift_fraction > 0.0)
      pool.shifted = generate_pool(spec, bytes, cfg.shift_fraction);
  }
  if (pool.primary.size() < cfg.categories)
    throw ConfigError("pool holds fewer categories than a mixture needs");
  if (shifting) {
    if (!cfg.shift_manifest.empty()) {
      for (const auto& spec : read_manifest(cfg.shift_manifest)) pool.shifted.push_back(load_category(spec));
      if (pool.shifted.size() != pool.primary.size())
        throw ConfigError("shift manifest must list every pool category");
    } else if (pool.shifted.empty()) {
      pool.shifted = pool.primary;
    }
  }
  return pool;
}

std::vector<ReportRow> run_controlled(const ExperimentConfig& cfg, const ExperimentPool& pool) {
  return run_trials(cfg, pool, 0, false, {0});
}

std::vector<ReportRow> run_withheld(const ExperimentConfig& cfg, const ExperimentPool& pool) {
  return run_trials(cfg, pool, cfg.withheld_k, false, {0});
}

std::vector<ReportRow> run_shift(const ExperimentConfig& cfg, const ExperimentPool& pool) {
  if (pool.shifted.empty()) throw ConfigError("shift runs need alternate estimation corpora");
  return run_trials(cfg, pool, cfg.withheld_k, true, {0});
}

std::vector<ReportRow> run_scaling(const ExperimentConfig& cfg, const ExperimentPool& pool) {
  if (cfg.mode != ExperimentMode::scaling) throw ConfigError("run_scaling needs mode = scaling");
  return run_trials(cfg, pool, cfg.withheld_k, !pool.shifted.empty(), cfg.sweep_values);
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  const auto pool = load_pool(cfg);
  switch (cfg.mode) {
    case ExperimentMode::controlled: return run_controlled(cfg, pool);
    case ExperimentMode::withheld: return run_withheld(cfg, pool);
    case ExperimentMode::shift: return run_shift(cfg, pool);
    case ExperimentMode::scaling: return run_scaling(cfg, pool);
  }
  return {};
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows, const std::vector<Method>& methods) {
  std::map<std::uint64_t, std::map<Method, std::vector<double>>> groups;
  for (const auto& row : rows) {
    auto& g = groups[row.sweep_value];
    for (Method m : methods) g[m];
    for (const auto& r : row.methods)
      if (r.ok() && std::isfinite(r.log10_mse)) g[r.method].push_back(r.log10_mse);
  }
  std::vector<SummaryRow> out;
  for (const auto& [value, by_method] : groups) {
    for (Method m : methods) {
      const auto it = by_method.find(m);
      if (it == by_method.end()) continue;
      const auto& xs = it->second;
      SummaryRow s;
      s.sweep_value = value;
      s.method = m;
      s.count = xs.size();
      if (xs.empty()) {
        s.mean_log10_mse = s.std_log10_mse = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double x : xs) sum += x;
        s.mean_log10_mse = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean_log10_mse) * (x - s.mean_log10_mse);
        s.std_log10_mse = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      }
      out.push_back(s);
    }
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "trial,method,category,true_weight,est_weight\n";
  for (const auto& row : rows)
    for (const auto& r : row.methods) {
      if (!r.ok()) continue;
      for (std::size_t i = 0; i < row.categories.size(); ++i)
        out << row.trial << ',' << to_string(r.method) << ',' << row.categories[i] << ','
            << number(row.true_weights[i]) << ',' << number(r.alpha_hat[i]) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary, bool with_sweep_value) {
  if (with_sweep_value) out << "sweep_value,";
  out << "method,mean_log10_mse,std_log10_mse\n";
  for (const auto& s : summary) {
    if (with_sweep_value) out << s.sweep_value << ',';
    out << to_string(s.method) << ',' << number(s.mean_log10_mse) << ',' << number(s.std_log10_mse) << '\n';
  }
}

void write_trials_csv(std::ostream& out, const std::vector<ReportRow>& rows, bool with_sweep_value) {
  if (with_sweep_value) out << "sweep_value,";
  out << "trial,method,log10_mse,log10_mse_normalized,method_seconds,trial_seconds,converged,withheld_mass,status\n";
  for (const auto& row : rows) {
    const auto prefix = [&] {
      if (with_sweep_value) out << row.sweep_value << ',';
      out << row.trial << ',';
    };
    if (!row.error.empty()) {
      prefix();
      out << ",nan,nan,0," << number(row.seconds) << ",false,nan," << csv_field("error: " + row.error) << '\n';
      continue;
    }
    for (const auto& r : row.methods) {
      prefix();
      out << to_string(r.method) << ',' << number(r.log10_mse) << ',' << number(r.log10_mse_normalized) << ','
          << number(r.seconds) << ',' << number(row.seconds) << ',' << (r.converged ? "true" : "false") << ','
          << number(row.withheld_mass) << ',' << csv_field(r.ok() ? "ok" : "error: " + r.error) << '\n';
    }
  }
}

void write_reports(const std::filesystem::path& dir, const ExperimentConfig& cfg, const std::vector<ReportRow>& rows) {
  std::filesystem::create_directories(dir);
  const bool sweep = cfg.mode == ExperimentMode::scaling;
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw DataError("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("report.csv");
    write_report_csv(f, rows);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, summarize(rows, cfg.methods), sweep);
  }
  {
    auto f = open("trials.csv");
    write_trials_csv(f, rows, sweep);
  }
  {
    auto f = open("config.txt");
    f << format_experiment_config(cfg);
  }
}

}  // namespace mixinfer
