#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/pretokenize.hpp"

namespace mixinfer {

enum class Method { attack, tee, tc, random };
std::string to_string(Method method);
Method parse_method(std::string_view text);

struct BaselineEstimate {
  Method method = Method::random;
  std::vector<double> alpha_hat;
};

// Hard token classification. Each merge-produced token is assigned to the
// category where its occurrences per sample byte are highest (ties go to the
// lowest category); the estimate is proportional to tokens per category.
BaselineEstimate tc_estimate(const MergeList& target, const std::vector<std::string>& samples,
                             const PretokenRules& rules);

// Per-category occurrence counts of every canonical token id when encoding
// each sample with `target`; exposed for tests.
std::vector<std::vector<std::uint64_t>> token_occurrences(const MergeList& target,
                                                          const std::vector<std::string>& samples,
                                                          const PretokenRules& rules);

struct CalibrationPoint {
  double efficiency = 0.0;
  double proportion = 0.0;
};

// log(proportion) = slope * log(efficiency) + intercept, by least squares.
struct LogLogModel {
  double slope = 0.0;
  double intercept = 0.0;
  double predict(double efficiency) const;
};

// Points with non-positive coordinates are ignored. Needs two distinct
// efficiencies, else InvalidArgument.
LogLogModel fit_log_log(const std::vector<CalibrationPoint>& points);

// target_ratio / reference_ratio; throws InvalidArgument for a zero reference.
double relative_efficiency(double target_ratio, double reference_ratio);

// Relative efficiency of `target` on each sample against that category's
// single-category reference tokenizer.
std::vector<double> relative_efficiencies(const MergeList& target, const std::vector<MergeList>& references,
                                          const std::vector<std::string>& samples, const PretokenRules& rules);

// Normalizes non-negative predictions onto the simplex (uniform if all zero).
std::vector<double> normalize_to_simplex(std::vector<double> values);

BaselineEstimate tee_estimate(const MergeList& target, const std::vector<MergeList>& references,
                              const std::vector<std::string>& samples, const PretokenRules& rules,
                              const LogLogModel& model);
BaselineEstimate tee_estimate(const MergeList& target, const std::vector<MergeList>& references,
                              const std::vector<std::string>& samples, const PretokenRules& rules,
                              const std::vector<CalibrationPoint>& calibration);

BaselineEstimate random_estimate(std::size_t n, std::uint64_t seed);

}  // namespace mixinfer
