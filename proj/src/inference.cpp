#include "mixinfer/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"
#include "mixinfer/lp_file.hpp"

namespace mixinfer {

std::string to_string(SolverBackend backend) {
  return backend == SolverBackend::embedded_simplex ? "embedded-simplex" : "external-file";
}

SolverBackend parse_solver_backend(std::string_view text) {
  if (text == "embedded-simplex" || text == "embedded" || text == "simplex") return SolverBackend::embedded_simplex;
  if (text == "external-file" || text == "external") return SolverBackend::external_file;
  throw InvalidArgument("unknown solver backend '" + std::string(text) + "'");
}

void AttackConfig::validate() const {
  if (T < 1) throw InvalidArgument("T must be at least 1");
  if (std::isnan(epsilon)) throw InvalidArgument("epsilon must be a number");
  if (!(lp_tolerance > 0)) throw InvalidArgument("lp tolerance must be positive");
}

double mixture_score(const std::vector<double>& alpha, const std::int64_t* counts, const std::vector<double>& norms) {
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * (static_cast<double>(counts[i]) / norms[i]);
  return s;
}

namespace {

std::vector<double> norms_of(const std::vector<PairCountTimeline>& timelines) {
  std::vector<double> norms;
  norms.reserve(timelines.size());
  for (const auto& tl : timelines) {
    if (tl.norm_denominator == 0) throw DataError("timeline of category " + std::to_string(tl.category_id) + " has a zero normalizer");
    norms.push_back(static_cast<double>(tl.norm_denominator));
  }
  return norms;
}

// Per-pair count vectors of every category, advanced one merge at a time.
class CountSweep {
 public:
  explicit CountSweep(const std::vector<PairCountTimeline>& timelines) : tl_(timelines), n_(timelines.size()) {
    for (std::size_t i = 0; i < n_; ++i)
      for (const auto& [key, c] : tl_[i].base_counts) add(key, i, static_cast<std::int64_t>(c));
  }

  std::size_t categories() const { return n_; }

  // Counts of `key`, or nullptr when absent in every category.
  const std::int64_t* find(PairKey key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &counts_[static_cast<std::size_t>(it->second) * n_];
  }

  std::uint64_t stamp(PairKey key) const {
    auto it = index_.find(key);
    return it == index_.end() ? 0 : stamps_[it->second];
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [key, slot] : index_) f(key, &counts_[static_cast<std::size_t>(slot) * n_], stamps_[slot]);
  }

  // Applies the k-th delta of every timeline; returns the touched pairs.
  const std::vector<PairKey>& advance(std::size_t k) {
    touched_.clear();
    for (std::size_t i = 0; i < n_; ++i)
      for (const auto& d : tl_[i].deltas[k].entries) add(d.pair, i, d.change);
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    for (PairKey key : touched_) {
      auto it = index_.find(key);
      if (it == index_.end()) continue;
      const std::uint32_t slot = it->second;
      bool zero = true;
      for (std::size_t i = 0; i < n_; ++i) zero = zero && counts_[slot * n_ + i] == 0;
      if (zero) {
        index_.erase(it);
        free_.push_back(slot);
      } else {
        stamps_[slot] = ++clock_;
      }
    }
    return touched_;
  }

 private:
  void add(PairKey key, std::size_t category, std::int64_t change) {
    auto it = index_.find(key);
    std::uint32_t slot;
    if (it == index_.end()) {
      if (!free_.empty()) {
        slot = free_.back();
        free_.pop_back();
        std::fill_n(counts_.begin() + static_cast<std::ptrdiff_t>(slot * n_), n_, 0);
      } else {
        slot = static_cast<std::uint32_t>(stamps_.size());
        stamps_.push_back(0);
        counts_.resize(counts_.size() + n_, 0);
      }
      index_.emplace(key, slot);
      stamps_[slot] = ++clock_;
    } else {
      slot = it->second;
    }
    counts_[static_cast<std::size_t>(slot) * n_ + category] += change;
    if (counts_[static_cast<std::size_t>(slot) * n_ + category] < 0)
      throw DataError("timeline drives a pair count negative");
    touched_.push_back(key);
  }

  const std::vector<PairCountTimeline>& tl_;
  std::size_t n_;
  std::unordered_map<PairKey, std::uint32_t> index_;
  std::vector<std::int64_t> counts_;
  std::vector<std::uint64_t> stamps_;
  std::vector<std::uint32_t> free_;
  std::vector<PairKey> touched_;
  std::uint64_t clock_ = 0;
};

std::vector<std::int64_t> copy_counts(const std::int64_t* c, std::size_t n) {
  return c ? std::vector<std::int64_t>(c, c + n) : std::vector<std::int64_t>(n, 0);
}

}  // namespace

double score(const std::vector<double>& alpha, const std::vector<PairCountTimeline>& timelines, std::size_t t,
             PairKey pair) {
  if (alpha.size() != timelines.size())
    throw InvalidArgument("score: " + std::to_string(alpha.size()) + " weights for " +
                          std::to_string(timelines.size()) + " categories");
  const auto norms = norms_of(timelines);
  std::vector<std::int64_t> counts(timelines.size(), 0);
  for (std::size_t i = 0; i < timelines.size(); ++i) {
    const auto at = counts_at(timelines[i], t);
    if (auto it = at.find(pair); it != at.end()) counts[i] = it->second;
  }
  return mixture_score(alpha, counts.data(), norms);
}

void check_timelines(const std::vector<PairCountTimeline>& timelines, const MergeList& merges, std::size_t T) {
  if (timelines.empty()) throw InvalidArgument("no category timelines");
  const auto offset = timelines.front().offset;
  for (const auto& tl : timelines) {
    if (tl.vocab_hash != merges.vocab_hash())
      throw DataError("timeline of category " + std::to_string(tl.category_id) +
                      " was replayed with a different merge list");
    if (tl.offset != offset) throw DataError("timelines disagree on their merge offset");
    if (tl.steps() < T)
      throw InvalidArgument("timeline of category " + std::to_string(tl.category_id) + " covers " +
                            std::to_string(tl.steps()) + " steps, need " + std::to_string(T));
    if (tl.norm_denominator == 0) throw DataError("timeline has a zero normalizer");
  }
  if (static_cast<std::size_t>(offset) + T > merges.size())
    throw InvalidArgument("merge list shorter than offset + T");
}

double default_epsilon(const std::vector<PairCountTimeline>& timelines) {
  double top = 0.0;
  for (const auto& tl : timelines) {
    std::uint64_t c = 0;
    for (const auto& [key, count] : tl.base_counts) c = std::max(c, count);
    if (tl.norm_denominator) top = std::max(top, static_cast<double>(c) / static_cast<double>(tl.norm_denominator));
  }
  return 1e-9 * top;
}

std::vector<Violation> find_violations(const LpSolution& sol, const std::vector<PairCountTimeline>& timelines,
                                       const MergeList& merges, const AttackConfig& cfg) {
  check_timelines(timelines, merges, cfg.T);
  if (sol.alpha.size() != timelines.size()) throw InvalidArgument("solution and timelines disagree on categories");
  const double eps = cfg.epsilon < 0 ? default_epsilon(timelines) : cfg.epsilon;
  const auto norms = norms_of(timelines);
  const std::size_t n = timelines.size();
  const std::uint32_t offset = timelines.front().offset;

  struct Entry {
    double value;
    PairKey pair;
    std::uint64_t stamp;
    bool operator<(const Entry& o) const { return value < o.value; }
  };
  auto vp = [&](PairKey p) {
    auto it = sol.v_p.find(p);
    return it == sol.v_p.end() ? 0.0 : it->second;
  };
  CountSweep sweep(timelines);
  std::vector<Entry> initial;
  sweep.for_each([&](PairKey key, const std::int64_t* c, std::uint64_t stamp) {
    initial.push_back({mixture_score(sol.alpha, c, norms) - vp(key), key, stamp});
  });
  std::priority_queue<Entry> heap(std::less<Entry>(), std::move(initial));

  std::vector<Violation> out;
  std::vector<Entry> aside;
  const std::vector<std::int64_t> zeros(n, 0);
  for (std::size_t k = 0; k < cfg.T; ++k) {
    const std::uint32_t step = offset + static_cast<std::uint32_t>(k) + 1;
    const std::size_t rule = step - 1;
    if (merges.rule_live(rule)) {
      const PairKey m = merges.rule_pair(rule);
      const std::int64_t* mc = sweep.find(m);
      const double sm = mixture_score(sol.alpha, mc ? mc : zeros.data(), norms);
      auto vt_it = sol.v_t.find(step);
      const double threshold = sm + (vt_it == sol.v_t.end() ? 0.0 : vt_it->second) + eps;
      const std::size_t first = out.size();
      aside.clear();
      while (!heap.empty() && heap.top().value > threshold) {
        const Entry e = heap.top();
        heap.pop();
        if (sweep.stamp(e.pair) != e.stamp) continue;
        aside.push_back(e);
        if (e.pair == m) continue;
        out.push_back({{step, e.pair}, e.value - threshold, copy_counts(sweep.find(e.pair), n), copy_counts(mc, n)});
      }
      for (const auto& e : aside) heap.push(e);
      std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                [](const Violation& a, const Violation& b) { return a.ref < b.ref; });
    }
    for (PairKey key : sweep.advance(k)) {
      const std::int64_t* c = sweep.find(key);
      if (!c) continue;
      heap.push({mixture_score(sol.alpha, c, norms) - vp(key), key, sweep.stamp(key)});
    }
  }
  return out;
}

std::vector<ConstraintRef> detect_violations(const LpSolution& sol, const std::vector<PairCountTimeline>& timelines,
                                             const MergeList& merges, const AttackConfig& cfg) {
  std::vector<ConstraintRef> refs;
  for (const auto& v : find_violations(sol, timelines, merges, cfg)) refs.push_back(v.ref);
  return refs;
}

std::vector<Violation> constraint_rows(const std::vector<ConstraintRef>& refs,
                                       const std::vector<PairCountTimeline>& timelines, const MergeList& merges) {
  if (refs.empty()) return {};
  std::uint32_t last = 0;
  for (const auto& r : refs) last = std::max(last, r.step);
  const std::uint32_t offset = timelines.empty() ? 0 : timelines.front().offset;
  for (const auto& r : refs)
    if (r.step <= offset) throw InvalidArgument("constraint step " + std::to_string(r.step) + " precedes the timeline");
  check_timelines(timelines, merges, last - offset);
  const std::size_t n = timelines.size();
  std::vector<std::size_t> order(refs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return refs[a].step < refs[b].step; });
  std::vector<Violation> rows(refs.size());
  CountSweep sweep(timelines);
  std::size_t next = 0;
  for (std::uint32_t step = offset + 1; step <= last; ++step) {
    for (; next < order.size() && refs[order[next]].step == step; ++next) {
      const auto& r = refs[order[next]];
      if (!merges.rule_live(step - 1)) throw InvalidArgument("constraint at a step whose merge never fires");
      const PairKey m = merges.rule_pair(step - 1);
      if (r.pair == m) throw InvalidArgument("constraint pair equals the step's merge");
      rows[order[next]] = {r, 0.0, copy_counts(sweep.find(r.pair), n), copy_counts(sweep.find(m), n)};
    }
    if (step < last) sweep.advance(step - 1 - offset);
  }
  return rows;
}

std::vector<ConstraintRef> enumerate_constraints(const std::vector<PairCountTimeline>& timelines,
                                                 const MergeList& merges, std::size_t T) {
  check_timelines(timelines, merges, T);
  const std::uint32_t offset = timelines.front().offset;
  std::vector<ConstraintRef> refs;
  CountSweep sweep(timelines);
  for (std::size_t k = 0; k < T; ++k) {
    const std::uint32_t step = offset + static_cast<std::uint32_t>(k) + 1;
    if (merges.rule_live(step - 1)) {
      const PairKey m = merges.rule_pair(step - 1);
      const std::size_t first = refs.size();
      sweep.for_each([&](PairKey key, const std::int64_t*, std::uint64_t) {
        if (key != m) refs.push_back({step, key});
      });
      std::sort(refs.begin() + static_cast<std::ptrdiff_t>(first), refs.end());
    }
    sweep.advance(k);
  }
  return refs;
}

LpInstance build_lp_from_rows(const std::vector<Violation>& rows, std::size_t n, const std::vector<double>& norms) {
  if (n == 0) throw InvalidArgument("build_lp: no categories");
  LpInstance inst;
  inst.num_categories = n;
  std::set<ConstraintRef> seen;
  std::vector<const Violation*> unique;
  double biggest = 0.0;
  std::vector<std::vector<double>> coef;
  for (const auto& row : rows) {
    if (!seen.insert(row.ref).second) continue;
    unique.push_back(&row);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = static_cast<double>(row.merge_counts[i] - row.pair_counts[i]) / norms[i];
      biggest = std::max(biggest, std::abs(d[i]));
    }
    coef.push_back(std::move(d));
  }
  inst.scale = biggest > 0 ? 1.0 / biggest : 1.0;
  auto& lp = inst.program;
  for (std::size_t i = 0; i < n; ++i) lp.add_column("a_" + std::to_string(i), 0.0);
  LinearProgram::Row simplex_row;
  for (std::size_t i = 0; i < n; ++i) simplex_row.terms.emplace_back(static_cast<int>(i), 1.0);
  simplex_row.sense = LinearProgram::Sense::equal;
  simplex_row.rhs = 1.0;
  simplex_row.name = "simplex";
  lp.add_row(std::move(simplex_row));
  for (std::size_t r = 0; r < unique.size(); ++r) {
    const auto& ref = unique[r]->ref;
    auto vt = inst.vt_column.find(ref.step);
    if (vt == inst.vt_column.end())
      vt = inst.vt_column.emplace(ref.step, lp.add_column("vt_" + std::to_string(ref.step), 1.0)).first;
    auto vp = inst.vp_column.find(ref.pair);
    if (vp == inst.vp_column.end())
      vp = inst.vp_column
               .emplace(ref.pair, lp.add_column("vp_" + std::to_string(pair_left(ref.pair)) + "_" +
                                                    std::to_string(pair_right(ref.pair)),
                                                1.0))
               .first;
    LinearProgram::Row row;
    for (std::size_t i = 0; i < n; ++i)
      if (coef[r][i] != 0.0) row.terms.emplace_back(static_cast<int>(i), coef[r][i] * inst.scale);
    row.terms.emplace_back(vt->second, 1.0);
    row.terms.emplace_back(vp->second, 1.0);
    row.sense = LinearProgram::Sense::greater_equal;
    row.rhs = 0.0;
    row.name = "c" + std::to_string(r);
    lp.add_row(std::move(row));
    inst.constraints.push_back(ref);
  }
  return inst;
}

LpInstance build_lp(const std::vector<ConstraintRef>& constraints, const std::vector<PairCountTimeline>& timelines,
                    const MergeList& merges) {
  if (timelines.empty()) throw InvalidArgument("build_lp: no categories");
  return build_lp_from_rows(constraint_rows(constraints, timelines, merges), timelines.size(), norms_of(timelines));
}

LpSolveOutput solve_lp(const LpInstance& inst, const AttackConfig& cfg, const SimplexBasis* warm_start) {
  LpSolveOutput out;
  std::vector<double> x;
  if (cfg.solver == SolverBackend::embedded_simplex) {
    SimplexOptions opt;
    opt.primal_tolerance = cfg.lp_tolerance;
    opt.dual_tolerance = cfg.lp_tolerance;
    auto res = solve_simplex(inst.program, opt, warm_start);
    if (res.status == SimplexResult::Status::unbounded || res.status == SimplexResult::Status::infeasible)
      throw SolverError("relaxed program reported " + to_string(res.status) + "; this cannot happen for valid input");
    if (res.status != SimplexResult::Status::optimal)
      throw SolverError("simplex stopped: " + to_string(res.status) + " after " + std::to_string(res.iterations) +
                        " iterations");
    x = std::move(res.x);
    out.basis = std::move(res.basis);
    out.iterations = res.iterations;
  } else {
    x = solve_external(inst.program, cfg.external_command);
  }
  auto& sol = out.solution;
  const std::size_t n = inst.num_categories;
  sol.alpha.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sol.alpha[i] = std::max(0.0, x[i]);
    total += sol.alpha[i];
  }
  if (!(total > 0)) throw SolverError("solver returned no mixture weight");
  for (auto& a : sol.alpha) a /= total;
  sol.objective = 0.0;
  for (const auto& [step, j] : inst.vt_column) {
    const double v = std::max(0.0, x[static_cast<std::size_t>(j)]) / inst.scale;
    sol.v_t[step] = v;
    sol.objective += v;
  }
  for (const auto& [pair, j] : inst.vp_column) {
    const double v = std::max(0.0, x[static_cast<std::size_t>(j)]) / inst.scale;
    sol.v_p[pair] = v;
    sol.objective += v;
  }
  return out;
}

MixtureEstimate infer_mixture(const MergeList& merges, const std::vector<PairCountTimeline>& timelines,
                              const AttackConfig& cfg_in, const RoundCallback& on_round) {
  cfg_in.validate();
  check_timelines(timelines, merges, cfg_in.T);
  AttackConfig cfg = cfg_in;
  if (cfg.epsilon < 0) cfg.epsilon = default_epsilon(timelines);
  const std::size_t n = timelines.size();
  const auto norms = norms_of(timelines);

  MixtureEstimate est;
  LpSolution sol;
  sol.alpha.assign(n, 1.0 / static_cast<double>(n));
  std::vector<Violation> rows;
  std::set<ConstraintRef> present;
  SimplexBasis basis;
  while (true) {
    auto found = find_violations(sol, timelines, merges, cfg);
    std::vector<Violation> fresh;
    for (auto& v : found)
      if (!present.count(v.ref)) fresh.push_back(std::move(v));
    if (fresh.empty()) {
      est.converged = true;
      break;
    }
    if (est.rounds >= cfg.max_rounds) {
      log::warning("lazy generation stopped after " + std::to_string(est.rounds) + " rounds with " +
                   std::to_string(fresh.size()) + " violated constraints left");
      break;
    }
    if (cfg.batch_limit > 0 && fresh.size() > cfg.batch_limit) {
      std::stable_sort(fresh.begin(), fresh.end(),
                       [](const Violation& a, const Violation& b) { return a.excess > b.excess; });
      fresh.resize(cfg.batch_limit);
    }
    for (auto& v : fresh) {
      present.insert(v.ref);
      rows.push_back(std::move(v));
    }
    const auto inst = build_lp_from_rows(rows, n, norms);
    auto solved = solve_lp(inst, cfg, basis.empty() ? nullptr : &basis);
    sol = std::move(solved.solution);
    basis = std::move(solved.basis);
    ++est.rounds;
    est.round_objectives.push_back(sol.objective);
    log::info("round " + std::to_string(est.rounds) + ": +" + std::to_string(fresh.size()) + " constraints (" +
              std::to_string(rows.size()) + " total), objective " + std::to_string(sol.objective) + ", " +
              std::to_string(solved.iterations) + " pivots");
    if (on_round) on_round({est.rounds, fresh.size(), rows.size(), sol.objective});
  }
  est.alpha_hat = sol.alpha;
  est.objective = sol.objective;
  est.constraints_used = rows.size();
  return est;
}

}  // namespace mixinfer
