#include "mixinfer/baselines.hpp"

#include <cmath>

#include "mixinfer/corpus.hpp"
#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"

namespace mixinfer {

std::string to_string(Method method) {
  switch (method) {
    case Method::attack: return "attack";
    case Method::tee: return "tee";
    case Method::tc: return "tc";
    case Method::random: return "random";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "attack") return Method::attack;
  if (text == "tee") return Method::tee;
  if (text == "tc") return Method::tc;
  if (text == "random") return Method::random;
  throw InvalidArgument("unknown method '" + std::string(text) + "'");
}

std::vector<std::vector<std::uint64_t>> token_occurrences(const MergeList& target,
                                                          const std::vector<std::string>& samples,
                                                          const PretokenRules& rules) {
  std::vector<std::vector<std::uint64_t>> counts(samples.size(), std::vector<std::uint64_t>(target.vocab().size(), 0));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Encoder enc(target);
    const WordTable words = pretokenize_serial(samples[i], rules);
    std::vector<TokenId> tokens;
    for (const auto& [word, n] : words.entries) {
      tokens.clear();
      enc.encode_word(word, tokens);
      for (TokenId t : tokens)
        if (t < counts[i].size()) counts[i][t] += n;
    }
  }
  return counts;
}

BaselineEstimate tc_estimate(const MergeList& target, const std::vector<std::string>& samples,
                             const PretokenRules& rules) {
  if (samples.empty()) throw InvalidArgument("tc_estimate: no categories");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].empty()) throw InvalidArgument("tc_estimate: empty sample for category " + std::to_string(i));
  const auto counts = token_occurrences(target, samples, rules);
  const std::size_t base = target.is_byte_level() ? 256 : target.base_alphabet().size();
  std::vector<double> assigned(samples.size(), 0.0);
  std::size_t ties = 0;
  std::vector<bool> done(target.vocab().size(), false);
  for (std::size_t t = 0; t < target.size(); ++t) {
    const TokenId id = target.output_id(t);
    if (id == kNoToken || id < base || done[id]) continue;
    done[id] = true;
    std::size_t best = 0;
    double best_rate = -1.0;
    bool tie = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double rate = static_cast<double>(counts[i][id]) / static_cast<double>(samples[i].size());
      if (rate > best_rate) {
        best_rate = rate;
        best = i;
        tie = false;
      } else if (rate == best_rate) {
        tie = true;
      }
    }
    if (best_rate <= 0.0) continue;
    if (tie) ++ties;
    assigned[best] += 1.0;
  }
  if (ties) log::info("tc: " + std::to_string(ties) + " tokens tied, assigned to the lowest category");
  return {Method::tc, normalize_to_simplex(std::move(assigned))};
}

double LogLogModel::predict(double efficiency) const {
  if (!(efficiency > 0)) return 0.0;
  return std::exp(slope * std::log(efficiency) + intercept);
}

LogLogModel fit_log_log(const std::vector<CalibrationPoint>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (!(p.efficiency > 0) || !(p.proportion > 0)) continue;
    const double x = std::log(p.efficiency), y = std::log(p.proportion);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double dn = static_cast<double>(n);
  const double var = sxx - sx * sx / dn;
  if (n < 2 || !(var > 1e-300)) throw InvalidArgument("log-log fit needs two distinct positive efficiencies");
  LogLogModel m;
  m.slope = (sxy - sx * sy / dn) / var;
  m.intercept = (sy - m.slope * sx) / dn;
  return m;
}

double relative_efficiency(double target_ratio, double reference_ratio) {
  if (!(reference_ratio > 0)) throw InvalidArgument("reference tokenizer has a zero byte-to-token ratio");
  return target_ratio / reference_ratio;
}

std::vector<double> relative_efficiencies(const MergeList& target, const std::vector<MergeList>& references,
                                          const std::vector<std::string>& samples, const PretokenRules& rules) {
  if (references.size() != samples.size()) throw InvalidArgument("one reference tokenizer per category is required");
  std::vector<double> e(samples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      e[i] = relative_efficiency(byte_to_token_ratio(samples[i], rules, target),
                                 byte_to_token_ratio(samples[i], rules, references[i]));
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return e;
}

std::vector<double> normalize_to_simplex(std::vector<double> values) {
  double total = 0.0;
  for (double v : values) {
    if (v < 0 || std::isnan(v)) throw InvalidArgument("cannot normalize negative or NaN weights");
    total += v;
  }
  if (values.empty()) return values;
  if (!(total > 0) || std::isinf(total)) {
    std::fill(values.begin(), values.end(), 1.0 / static_cast<double>(values.size()));
    return values;
  }
  for (auto& v : values) v /= total;
  return values;
}

BaselineEstimate tee_estimate(const MergeList& target, const std::vector<MergeList>& references,
                              const std::vector<std::string>& samples, const PretokenRules& rules,
                              const LogLogModel& model) {
  const auto e = relative_efficiencies(target, references, samples, rules);
  std::vector<double> pred(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) pred[i] = model.predict(e[i]);
  return {Method::tee, normalize_to_simplex(std::move(pred))};
}

BaselineEstimate tee_estimate(const MergeList& target, const std::vector<MergeList>& references,
                              const std::vector<std::string>& samples, const PretokenRules& rules,
                              const std::vector<CalibrationPoint>& calibration) {
  if (calibration.empty()) throw InvalidArgument("tee_estimate: empty calibration set");
  return tee_estimate(target, references, samples, rules, fit_log_log(calibration));
}

BaselineEstimate random_estimate(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("random_estimate: n must be at least 1");
  return {Method::random, sample_simplex_weights(n, seed).weights};
}

}  // namespace mixinfer
