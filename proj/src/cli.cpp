#include "mixinfer/cli.hpp"

#include <openssl/evp.h>
#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "mixinfer/baselines.hpp"
#include "mixinfer/bpe.hpp"
#include "mixinfer/corpus.hpp"
#include "mixinfer/error.hpp"
#include "mixinfer/harness.hpp"
#include "mixinfer/inference.hpp"
#include "mixinfer/log.hpp"
#include "mixinfer/lp_file.hpp"
#include "mixinfer/merge_io.hpp"
#include "mixinfer/simplex.hpp"
#include "mixinfer/synthetic.hpp"
#include "mixinfer/timeline.hpp"

namespace mixinfer {

namespace {

namespace fs = std::filesystem;

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw DataError("sha256 failed");
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return o.str();
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

// Flags shared by every subcommand that tokenizes text or reads merges.
struct TokenizerFlags {
  std::string format;
  bool char_level = false;
  std::string space_attachment = "discard";
  bool no_digit_split = false;

  void add_to(CLI::App* cmd, bool with_format) {
    if (with_format) {
      cmd->add_option("--format", format, "Merge-list format: hf-merges, rank-vocab or plain (default: detect)");
      cmd->add_flag("--char-level", char_level, "Read hf-merges tokens as characters instead of byte-level");
    }
    cmd->add_option("--space-attachment", space_attachment,
                    "discard or attach")->capture_default_str();
    cmd->add_flag("--no-digit-split", no_digit_split, "Do not isolate digit runs");
  }

  PretokenRules rules() const {
    PretokenRules r;
    r.space_attachment = parse_space_attachment(space_attachment);
    r.isolate_digit_runs = !no_digit_split;
    r.validate();
    return r;
  }

  MergeList load(const fs::path& path) const {
    std::optional<MergeFormat> fmt;
    if (!format.empty()) fmt = parse_merge_format(format);
    return parse_merge_list(read_tokenizer_file(path, fmt), ParseOptions{char_level});
  }
};

std::string rules_key(const PretokenRules& r) {
  return to_string(r.space_attachment) + (r.split_on_whitespace ? "+ws" : "") + (r.isolate_digit_runs ? "+digits" : "");
}

std::vector<CategorySource> load_manifest_sources(const fs::path& manifest) {
  std::vector<CategorySource> sources;
  for (const auto& spec : read_manifest(manifest)) sources.push_back(load_category(spec));
  if (sources.empty()) throw DataError("manifest " + manifest.string() + " lists no categories");
  return sources;
}

std::vector<std::string> sample_bytes(std::vector<CategorySource>& sources) {
  std::vector<std::string> out;
  for (auto& s : sources) out.push_back(std::move(s.bytes));
  return out;
}

// Replays every category, reusing cached timelines keyed by corpus hash,
// merge-list vocabulary hash, pretokenization rules, T and offset.
std::vector<PairCountTimeline> build_timelines(const std::vector<CategorySource>& sources, const MergeList& merges,
                                               std::size_t T, std::size_t offset, const PretokenRules& rules,
                                               const fs::path& cache) {
  const std::size_t n = sources.size();
  std::vector<PairCountTimeline> timelines(n);
  std::vector<fs::path> cache_paths(n);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cache.empty()) {
      const std::string key = sha256_hex(sources[i].bytes + '\0' + rules_key(rules)).substr(0, 32);
      cache_paths[i] = cache / (key + "_" + hex64(merges.vocab_hash()) + "_T" + std::to_string(T) + "_o" +
                                std::to_string(offset) + ".pctl");
      if (fs::exists(cache_paths[i])) {
        try {
          timelines[i] = read_timeline(cache_paths[i]);
          timelines[i].category_id = static_cast<std::uint32_t>(i);
          log::info("timeline cache hit for category " + std::to_string(i));
          continue;
        } catch (const std::exception& e) {
          log::warning("ignoring unreadable cached timeline " + cache_paths[i].string() + ": " + e.what());
        }
      }
    }
    missing.push_back(i);
  }
  if (missing.empty()) return timelines;
  std::vector<WordTable> tables(missing.size());
  for (std::size_t k = 0; k < missing.size(); ++k) tables[k] = pretokenize(sources[missing[k]].bytes, rules);
  auto fresh = replay_all(tables, merges, T, offset);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const std::size_t i = missing[k];
    timelines[i] = std::move(fresh[k]);
    timelines[i].category_id = static_cast<std::uint32_t>(i);
    if (!cache.empty()) {
      fs::create_directories(cache);
      write_timeline(timelines[i], cache_paths[i]);
    }
  }
  return timelines;
}

std::vector<PairCountTimeline> read_timeline_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("timeline directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pctl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<PairCountTimeline> timelines;
  for (const auto& f : files) timelines.push_back(read_timeline(f));
  if (timelines.empty()) throw DataError("no .pctl timelines in " + dir.string());
  std::sort(timelines.begin(), timelines.end(),
            [](const auto& a, const auto& b) { return a.category_id < b.category_id; });
  for (std::size_t i = 0; i < timelines.size(); ++i)
    if (timelines[i].category_id != i) throw DataError("timeline category ids must be dense 0..n-1");
  return timelines;
}

void write_estimate_csv(const fs::path& path, const std::vector<std::string>& names, const std::vector<double>& alpha) {
  auto f = open_output(path);
  f << "category,name,alpha_hat\n";
  for (std::size_t i = 0; i < alpha.size(); ++i)
    f << i << ',' << (i < names.size() ? names[i] : "") << ',' << number(alpha[i]) << '\n';
}

std::vector<CalibrationPoint> read_calibration(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file " + path.string());
  std::vector<CalibrationPoint> points;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("efficiency", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("expected efficiency,proportion", lineno);
    CalibrationPoint p;
    try {
      p.efficiency = std::stod(line.substr(0, comma));
      p.proportion = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ConfigError("expected efficiency,proportion", lineno);
    }
    points.push_back(p);
  }
  return points;
}

std::size_t utf8_sequence(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  const std::size_t len = c >= 0xF0 && c < 0xF8 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 0;
  if (c >= 0xF8 || len == 0 || i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k)
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
  return len;
}

// Display form: space and U+2581 as '_', control bytes and stray UTF-8
// fragments escaped, complete characters verbatim.
std::string display_unit(std::string_view token) {
  std::string out;
  for (std::size_t i = 0; i < token.size();) {
    const auto c = static_cast<unsigned char>(token[i]);
    if (c < 0x80) {
      out += display_token(token.substr(i, 1));
      ++i;
      continue;
    }
    const std::size_t len = utf8_sequence(token, i);
    if (len == 0) {
      out += escape_exact(token.substr(i, 1));
      ++i;
    } else {
      const auto ch = token.substr(i, len);
      out += ch == "\xE2\x96\x81" ? "_" : std::string(ch);
      i += len;
    }
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infers training-data mixtures from BPE merge lists"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warning";
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--log-level", log_level, "debug, info, warning, error or off")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads (default: all cores)");
  app.add_option("--seed", seed, "Seed for every random choice");

  TokenizerFlags tok;

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a byte-level BPE merge list on a corpus manifest");
  fs::path train_manifest, train_out;
  std::size_t train_merges = 0;
  std::string train_format = "plain", tie_break = "smallest";
  train_cmd->add_option("--manifest", train_manifest, "Category manifest (id<TAB>name<TAB>path)")->required();
  train_cmd->add_option("--num-merges", train_merges, "Number of merges to learn")->required();
  train_cmd->add_option("--out", train_out, "Output merge-list file")->required();
  train_cmd->add_option("--out-format", train_format, "plain, hf-merges or rank-vocab")->capture_default_str();
  train_cmd->add_option("--tie-break", tie_break, "smallest or largest")->capture_default_str();
  tok.add_to(train_cmd, false);

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Write per-category pair-count timelines");
  fs::path replay_merges, replay_manifest, replay_out;
  std::size_t replay_T = 0, replay_offset = 0;
  replay_cmd->add_option("--merges", replay_merges, "Merge-list file")->required();
  replay_cmd->add_option("--manifest", replay_manifest, "Estimation corpora manifest")->required();
  replay_cmd->add_option("--T", replay_T, "Merges to replay")->required();
  replay_cmd->add_option("--offset", replay_offset, "Merges applied before the first replayed step");
  replay_cmd->add_option("--out", replay_out, "Output directory for category_<id>.pctl files")->required();
  tok.add_to(replay_cmd, true);

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Estimate mixture proportions from a merge list");
  fs::path attack_merges, attack_timelines, attack_manifest, attack_out, attack_cache;
  AttackConfig acfg;
  acfg.batch_limit = 10000;
  std::string attack_solver = "embedded-simplex";
  attack_cmd->add_option("--merges", attack_merges, "Merge-list file")->required();
  auto* tl_opt = attack_cmd->add_option("--timelines", attack_timelines, "Directory of replayed timelines");
  auto* mf_opt = attack_cmd->add_option("--manifest", attack_manifest, "Estimation corpora manifest");
  tl_opt->excludes(mf_opt);
  attack_cmd->add_option("--T", acfg.T, "Merge horizon")->required();
  std::size_t attack_offset = 0;
  attack_cmd->add_option("--offset", attack_offset, "Skip this many leading merges");
  attack_cmd->add_option("--epsilon", acfg.epsilon, "Violation tolerance (negative: automatic)");
  attack_cmd->add_option("--solver", attack_solver, "embedded-simplex or external-file")->capture_default_str();
  attack_cmd->add_option("--solver-command", acfg.external_command,
                         std::string("External solver command with {lp} and {sol}; default from ") +
                             kSolverCommandEnv);
  attack_cmd->add_option("--batch-limit", acfg.batch_limit, "Most constraints added per round (0: all)")
      ->capture_default_str();
  attack_cmd->add_option("--max-rounds", acfg.max_rounds, "Round limit")->capture_default_str();
  attack_cmd->add_option("--cache", attack_cache, "Timeline cache directory");
  attack_cmd->add_option("--out", attack_out, "Output estimate CSV")->required();
  tok.add_to(attack_cmd, true);

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "Run a reference estimator");
  std::string base_method;
  fs::path base_merges, base_manifest, base_calibration, base_out;
  std::vector<fs::path> base_refs;
  base_cmd->add_option("--method", base_method, "tc, tee or random")->required();
  base_cmd->add_option("--merges", base_merges, "Target merge-list file");
  base_cmd->add_option("--manifest", base_manifest, "Per-category sample manifest")->required();
  base_cmd->add_option("--references", base_refs, "Single-category merge lists (tee), in manifest order");
  base_cmd->add_option("--calibration", base_calibration, "CSV of efficiency,proportion pairs (tee)");
  base_cmd->add_option("--out", base_out, "Output estimate CSV")->required();
  tok.add_to(base_cmd, true);

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Print the first merges of a list");
  fs::path inspect_merges;
  std::size_t inspect_top = 50;
  inspect_cmd->add_option("--merges", inspect_merges, "Merge-list file")->required();
  inspect_cmd->add_option("--top", inspect_top, "Number of merges to show")->capture_default_str();
  tok.add_to(inspect_cmd, true);

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run a controlled experiment from a config file");
  fs::path exp_config, exp_out;
  exp_cmd->add_option("--config", exp_config, "Experiment config (key = value lines)")->required();
  exp_cmd->add_option("--out", exp_out, "Output directory for CSV reports")->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic category corpora and a manifest");
  SyntheticSpec gspec;
  std::uint64_t gen_bytes = 1'000'000;
  double gen_shift = 0.0;
  std::uint64_t gen_stream = 0;
  fs::path gen_out;
  gen_cmd->add_option("--categories", gspec.categories, "Number of categories")->capture_default_str();
  gen_cmd->add_option("--bytes", gen_bytes, "Bytes per category")->capture_default_str();
  gen_cmd->add_option("--alphabet-size", gspec.alphabet_size, "Symbols per category")->capture_default_str();
  gen_cmd->add_option("--overlap", gspec.overlap, "Fraction of shared Latin symbols")->capture_default_str();
  gen_cmd->add_option("--shift", gen_shift, "Fraction of word ranks to swap")->capture_default_str();
  gen_cmd->add_option("--stream", gen_stream, "Independent text sample index")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  // solve-lp
  auto* lp_cmd = app.add_subcommand("solve-lp", "Solve an LP file with the embedded simplex");
  fs::path lp_in, lp_out;
  lp_cmd->add_option("--lp", lp_in, "LP file")->required();
  lp_cmd->add_option("--out", lp_out, "Solution file (name value lines)")->required();

  std::vector<const char*> argv{"mixinfer"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    log::Level lvl;
    if (log_level == "debug") lvl = log::Level::debug;
    else if (log_level == "info") lvl = log::Level::info;
    else if (log_level == "warning") lvl = log::Level::warning;
    else if (log_level == "error") lvl = log::Level::error;
    else if (log_level == "off") lvl = log::Level::off;
    else throw ConfigError("unknown log level '" + log_level + "'");
    log::set_level(lvl);
    if (jobs > 0) omp_set_num_threads(static_cast<int>(jobs));

    if (*train_cmd) {
      const auto rules = tok.rules();
      const auto out_format = parse_merge_format(train_format);
      TrainOptions topt;
      if (tie_break == "smallest") topt.tie_break = TieBreak::lexicographic_smallest;
      else if (tie_break == "largest") topt.tie_break = TieBreak::lexicographic_largest;
      else throw ConfigError("unknown tie-break '" + tie_break + "'");
      const auto specs = read_manifest(train_manifest);
      WordTable words;
      for (const auto& spec : specs) words.merge(pretokenize(load_category(spec).bytes, rules));
      const auto merges = train(words, train_merges, topt);
      if (merges.empty()) {
        // Zero merges produce a zero-byte file.
        std::ofstream empty(train_out, std::ios::binary | std::ios::trunc);
        if (!empty) throw DataError("cannot write " + train_out.string());
      } else {
        write_merge_list(train_out, merges, out_format);
      }
      out << "trained " << merges.size() << " merges on " << specs.size() << " categories -> " << train_out.string()
          << '\n';
      return kExitOk;
    }

    if (*replay_cmd) {
      const auto rules = tok.rules();
      const auto merges = tok.load(replay_merges);
      if (replay_offset + replay_T > merges.size())
        throw ConfigError("offset + T exceeds the " + std::to_string(merges.size()) + " merges in the list");
      auto sources = load_manifest_sources(replay_manifest);
      std::vector<WordTable> tables;
      for (const auto& s : sources) tables.push_back(pretokenize(s.bytes, rules));
      const auto timelines = replay_all(tables, merges, replay_T, replay_offset);
      fs::create_directories(replay_out);
      for (const auto& tl : timelines)
        write_timeline(tl, replay_out / ("category_" + std::to_string(tl.category_id) + ".pctl"));
      out << "wrote " << timelines.size() << " timelines of " << replay_T << " steps to " << replay_out.string()
          << '\n';
      return kExitOk;
    }

    if (*attack_cmd) {
      acfg.solver = parse_solver_backend(attack_solver);
      acfg.validate();
      const auto rules = tok.rules();
      const auto merges = tok.load(attack_merges);
      if (attack_offset + acfg.T > merges.size())
        throw ConfigError("offset + T exceeds the " + std::to_string(merges.size()) + " merges in the list");
      std::vector<PairCountTimeline> timelines;
      std::vector<std::string> names;
      if (!attack_timelines.empty()) {
        timelines = read_timeline_dir(attack_timelines);
        if (timelines.front().offset != attack_offset)
          throw ConfigError("timelines were replayed with offset " + std::to_string(timelines.front().offset));
      } else if (!attack_manifest.empty()) {
        auto sources = load_manifest_sources(attack_manifest);
        for (const auto& s : sources) names.push_back(s.spec.name);
        timelines = build_timelines(sources, merges, acfg.T, attack_offset, rules, attack_cache);
      } else {
        throw ConfigError("attack needs --timelines or --manifest");
      }
      const auto est = infer_mixture(merges, timelines, acfg, [&](const RoundInfo& r) {
        log::info("round " + std::to_string(r.round) + ": " + std::to_string(r.constraints) + " constraints");
      });
      write_estimate_csv(attack_out, names, est.alpha_hat);
      nlohmann::json diag;
      diag["T"] = acfg.T;
      diag["offset"] = attack_offset;
      diag["epsilon"] = acfg.epsilon;
      diag["solver"] = to_string(acfg.solver);
      diag["batch_limit"] = acfg.batch_limit;
      diag["rounds"] = est.rounds;
      diag["constraints"] = est.constraints_used;
      diag["objective"] = est.objective;
      diag["converged"] = est.converged;
      diag["round_objectives"] = est.round_objectives;
      diag["alpha_hat"] = est.alpha_hat;
      auto df = open_output(fs::path(attack_out.string() + ".diagnostics.json"));
      df << diag.dump(2) << '\n';
      out << "estimate (" << est.rounds << " rounds, " << est.constraints_used << " constraints, objective "
          << number(est.objective) << (est.converged ? "" : ", NOT converged") << "):\n";
      for (std::size_t i = 0; i < est.alpha_hat.size(); ++i)
        out << "  " << (i < names.size() ? names[i] : std::to_string(i)) << ": " << number(est.alpha_hat[i]) << '\n';
      return est.converged ? kExitOk : kExitNotConverged;
    }

    if (*base_cmd) {
      const Method method = parse_method(base_method);
      if (method == Method::attack) throw ConfigError("use the attack subcommand for the attack");
      const auto rules = tok.rules();
      auto sources = load_manifest_sources(base_manifest);
      std::vector<std::string> names;
      for (const auto& s : sources) names.push_back(s.spec.name);
      BaselineEstimate est;
      if (method == Method::random) {
        est = random_estimate(sources.size(), seed.value_or(1));
      } else {
        if (base_merges.empty()) throw ConfigError("--merges is required for " + base_method);
        const auto target = tok.load(base_merges);
        const auto samples = sample_bytes(sources);
        if (method == Method::tc) {
          est = tc_estimate(target, samples, rules);
        } else {
          if (base_refs.size() != samples.size())
            throw ConfigError("tee needs one --references entry per category");
          if (base_calibration.empty()) throw ConfigError("tee needs --calibration");
          std::vector<MergeList> refs;
          for (const auto& r : base_refs) refs.push_back(tok.load(r));
          est = tee_estimate(target, refs, samples, rules, read_calibration(base_calibration));
        }
      }
      write_estimate_csv(base_out, names, est.alpha_hat);
      out << to_string(method) << " estimate written to " << base_out.string() << '\n';
      return kExitOk;
    }

    if (*inspect_cmd) {
      const auto merges = tok.load(inspect_merges);
      const std::size_t k = std::min(inspect_top, merges.size());
      out << "# " << merges.size() << " merges (" << (merges.is_byte_level() ? "byte-level" : "character-level")
          << "), showing " << k << '\n';
      for (std::size_t t = 0; t < k; ++t) {
        const auto& r = merges.rules()[t];
        out << (t + 1) << '\t' << display_unit(r.left) << ' '
            << display_unit(r.right) << '\n';
      }
      return kExitOk;
    }

    if (*exp_cmd) {
      auto cfg = read_experiment_config(exp_config);
      if (seed) cfg.seed = *seed;
      if (jobs > 0) cfg.jobs = jobs;
      const auto rows = run_experiment(cfg);
      write_reports(exp_out, cfg, rows);
      std::size_t failed = 0;
      for (const auto& r : rows) {
        if (!r.error.empty()) ++failed;
        else
          for (const auto& m : r.methods) failed += m.ok() ? 0 : 1;
      }
      out << "experiment finished: " << rows.size() << " rows";
      if (failed) out << ", " << failed << " failures flagged in trials.csv";
      out << '\n';
      for (const auto& s : summarize(rows, cfg.methods)) {
        out << "  ";
        if (cfg.mode == ExperimentMode::scaling) out << s.sweep_value << ' ';
        out << to_string(s.method) << ": mean log10 MSE " << number(s.mean_log10_mse) << " (sd "
            << number(s.std_log10_mse) << ", n=" << s.count << ")\n";
      }
      return kExitOk;
    }

    if (*gen_cmd) {
      if (seed) gspec.seed = *seed;
      try {
        gspec.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      fs::create_directories(gen_out);
      const auto pool = generate_pool(gspec, gen_bytes, gen_shift, gen_stream);
      std::vector<CategorySpec> specs;
      for (const auto& c : pool) {
        const std::string file = "category_" + std::to_string(c.spec.id) + ".txt";
        auto f = open_output(gen_out / file);
        f << c.bytes;
        CategorySpec spec = c.spec;
        spec.source = file;
        specs.push_back(spec);
      }
      write_manifest(gen_out / "manifest.tsv", specs);
      out << "wrote " << pool.size() << " categories to " << gen_out.string() << '\n';
      return kExitOk;
    }

    if (*lp_cmd) {
      const auto lp = read_lp_file(lp_in);
      const auto result = solve_simplex(lp);
      if (result.status != SimplexResult::Status::optimal)
        throw SolverError("LP is " + to_string(result.status));
      auto f = open_output(lp_out);
      f << write_solution_text(lp, result.x, result.objective);
      out << "optimal objective " << number(result.objective) << " after " << result.iterations << " iterations\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace mixinfer
