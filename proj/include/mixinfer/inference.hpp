#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/simplex.hpp"
#include "mixinfer/timeline.hpp"
#include "mixinfer/types.hpp"

namespace mixinfer {

enum class SolverBackend { embedded_simplex, external_file };
std::string to_string(SolverBackend backend);
SolverBackend parse_solver_backend(std::string_view text);

struct AttackConfig {
  std::size_t T = 1000;
  // Negative: 1e-9 times the largest normalized count.
  double epsilon = -1.0;
  std::size_t max_rounds = 200;
  SolverBackend solver = SolverBackend::embedded_simplex;
  std::size_t batch_limit = 0;  // 0: unlimited
  std::string external_command;
  double lp_tolerance = 1e-9;
  void validate() const;
};

// Constraint at 1-based merge step `step`: the merge must be at least as
// frequent as `pair` before that merge is applied.
struct ConstraintRef {
  std::uint32_t step = 0;
  PairKey pair = 0;
  auto operator<=>(const ConstraintRef&) const = default;
};

struct LpSolution {
  std::vector<double> alpha;
  std::map<std::uint32_t, double> v_t;
  std::map<PairKey, double> v_p;
  double objective = 0.0;
};

struct MixtureEstimate {
  std::vector<double> alpha_hat;
  double objective = 0.0;
  std::size_t rounds = 0;
  std::size_t constraints_used = 0;
  bool converged = false;
  std::vector<double> round_objectives;
};

// Sum over categories of alpha_i * counts_i / norms_i, accumulated in index
// order. Every scoring path goes through this to stay bit-identical.
double mixture_score(const std::vector<double>& alpha, const std::int64_t* counts, const std::vector<double>& norms);

// Score of `pair` after `t` of the timelines' steps.
double score(const std::vector<double>& alpha, const std::vector<PairCountTimeline>& timelines, std::size_t t,
             PairKey pair);

struct Violation {
  ConstraintRef ref;
  double excess = 0.0;
  std::vector<std::int64_t> pair_counts;   // per category, before the step
  std::vector<std::int64_t> merge_counts;  // per category, before the step
};

// Checks that timelines match the merge list and share an offset covering T
// steps. Throws DataError or InvalidArgument.
void check_timelines(const std::vector<PairCountTimeline>& timelines, const MergeList& merges, std::size_t T);

// Default tolerance: 1e-9 times the largest normalized count.
double default_epsilon(const std::vector<PairCountTimeline>& timelines);

// Priority sweep over steps offset+1 .. offset+T. Returns violations ordered
// by step, then pair.
std::vector<Violation> find_violations(const LpSolution& sol, const std::vector<PairCountTimeline>& timelines,
                                       const MergeList& merges, const AttackConfig& cfg);
std::vector<ConstraintRef> detect_violations(const LpSolution& sol, const std::vector<PairCountTimeline>& timelines,
                                             const MergeList& merges, const AttackConfig& cfg);

// Per-category counts of each constraint's pair and merge, in input order.
std::vector<Violation> constraint_rows(const std::vector<ConstraintRef>& refs,
                                       const std::vector<PairCountTimeline>& timelines, const MergeList& merges);

// Every (step, pair) with a nonzero count somewhere, for steps 1..T.
std::vector<ConstraintRef> enumerate_constraints(const std::vector<PairCountTimeline>& timelines,
                                                 const MergeList& merges, std::size_t T);

// Columns: a_i, then vt_<step> and vp_<left>_<right> in first-use order.
// Rows: the simplex row, then one row per distinct constraint. Constraint
// coefficients are multiplied by `scale` (so v is too); see unscale().
struct LpInstance {
  LinearProgram program;
  std::size_t num_categories = 0;
  std::vector<ConstraintRef> constraints;
  std::map<std::uint32_t, int> vt_column;
  std::map<PairKey, int> vp_column;
  double scale = 1.0;
};

LpInstance build_lp(const std::vector<ConstraintRef>& constraints, const std::vector<PairCountTimeline>& timelines,
                    const MergeList& merges);
LpInstance build_lp_from_rows(const std::vector<Violation>& rows, std::size_t num_categories,
                              const std::vector<double>& norms);

struct LpSolveOutput {
  LpSolution solution;
  SimplexBasis basis;
  std::size_t iterations = 0;
};

// Solves the instance and maps the solution back to unscaled units; alpha is
// clamped to >= 0 and renormalized.
LpSolveOutput solve_lp(const LpInstance& lp, const AttackConfig& cfg, const SimplexBasis* warm_start = nullptr);

struct RoundInfo {
  std::size_t round = 0;
  std::size_t added = 0;
  std::size_t constraints = 0;
  double objective = 0.0;
};
using RoundCallback = std::function<void(const RoundInfo&)>;

MixtureEstimate infer_mixture(const MergeList& merges, const std::vector<PairCountTimeline>& timelines,
                              const AttackConfig& cfg, const RoundCallback& on_round = {});

}  // namespace mixinfer
