#include "mixinfer/simplex.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"

namespace mixinfer {

int LinearProgram::add_column(std::string name, double cost, double lower, double upper) {
  if (lower > upper) throw InvalidArgument("column '" + name + "' has lower > upper");
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  names_.push_back(std::move(name));
  return static_cast<int>(cost_.size() - 1);
}

int LinearProgram::add_row(Row row) {
  for (const auto& [j, a] : row.terms)
    if (j < 0 || static_cast<std::size_t>(j) >= cost_.size())
      throw InvalidArgument("row '" + row.name + "' references an unknown column");
  rows_.push_back(std::move(row));
  return static_cast<int>(rows_.size() - 1);
}

double LinearProgram::objective_value(const std::vector<double>& x) const {
  double obj = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) obj += cost_[j] * x[j];
  return obj;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    worst = std::max(worst, lower_[j] - x[j]);
    worst = std::max(worst, x[j] - upper_[j]);
  }
  for (const auto& row : rows_) {
    double act = 0.0;
    for (const auto& [j, a] : row.terms) act += a * x[static_cast<std::size_t>(j)];
    if (row.sense != Sense::less_equal) worst = std::max(worst, row.rhs - act);
    if (row.sense != Sense::greater_equal) worst = std::max(worst, act - row.rhs);
  }
  return worst;
}

std::string to_string(SimplexResult::Status status) {
  switch (status) {
    case SimplexResult::Status::optimal: return "optimal";
    case SimplexResult::Status::infeasible: return "infeasible";
    case SimplexResult::Status::unbounded: return "unbounded";
    case SimplexResult::Status::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Eta {
  int row;
  double pivot;
  std::vector<int> index;
  std::vector<double> value;
};

enum class Outcome { optimal, infeasible, unbounded, iteration_limit, switch_method };

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    m_ = static_cast<int>(lp.num_rows());
    n_ = static_cast<int>(lp.num_columns());
    total_ = n_ + m_;
    col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
    row_start_.assign(static_cast<std::size_t>(m_) + 1, 0);
    std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(n_));
    for (int i = 0; i < m_; ++i) {
      for (const auto& [j, a] : lp.rows()[static_cast<std::size_t>(i)].terms) {
        if (a == 0.0) continue;
        cols[static_cast<std::size_t>(j)].emplace_back(i, a);
        row_col_.push_back(j);
        row_val_.push_back(a);
      }
      row_start_[static_cast<std::size_t>(i) + 1] = static_cast<int>(row_col_.size());
    }
    for (int j = 0; j < n_; ++j) {
      auto& c = cols[static_cast<std::size_t>(j)];
      std::sort(c.begin(), c.end());
      for (const auto& [i, a] : c) {
        row_index_.push_back(i);
        value_.push_back(a);
      }
      col_start_[static_cast<std::size_t>(j) + 1] = static_cast<int>(row_index_.size());
    }
    lo_.resize(static_cast<std::size_t>(total_));
    up_.resize(static_cast<std::size_t>(total_));
    cost_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.column_lower()[static_cast<std::size_t>(j)];
      up_[j] = lp.column_upper()[static_cast<std::size_t>(j)];
      cost_[j] = lp.cost()[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp.rows()[static_cast<std::size_t>(i)];
      double l = -kInfinity, u = kInfinity;
      if (row.sense != LinearProgram::Sense::less_equal) l = row.rhs;
      if (row.sense != LinearProgram::Sense::greater_equal) u = row.rhs;
      lo_[n_ + i] = l;
      up_[n_ + i] = u;
    }
    d_.assign(static_cast<std::size_t>(total_), 0.0);
    alpha_.assign(static_cast<std::size_t>(total_), 0.0);
    mark_.assign(static_cast<std::size_t>(total_), 0);
    max_iterations_ = opt.max_iterations ? opt.max_iterations
                                         : 50 * static_cast<std::size_t>(total_ + m_) + 10000;
  }

  SimplexResult run(const SimplexBasis* warm) {
    SimplexResult result;
    if (!warm || !load_basis(*warm) || !refactor()) {
      slack_basis();
      if (!refactor()) throw SolverError("simplex: slack basis is singular");
    }
    compute_basic_values();
    compute_duals();
    Outcome outcome = Outcome::switch_method;
    if (dual_infeasibility() == 0.0) outcome = dual_loop();
    if (outcome == Outcome::switch_method) outcome = primal_loop();
    switch (outcome) {
      case Outcome::optimal: result.status = SimplexResult::Status::optimal; break;
      case Outcome::infeasible: result.status = SimplexResult::Status::infeasible; break;
      case Outcome::unbounded: result.status = SimplexResult::Status::unbounded; break;
      default: result.status = SimplexResult::Status::iteration_limit; break;
    }
    result.iterations = iterations_;
    result.dual_iterations = dual_iterations_;
    result.bland_iterations = bland_iterations_;
    result.x.assign(x_.begin(), x_.begin() + n_);
    result.objective = lp_.objective_value(result.x);
    result.basis.columns.assign(status_.begin(), status_.begin() + n_);
    result.basis.rows.assign(status_.begin() + n_, status_.end());
    return result;
  }

 private:
  // Dual simplex from a dual feasible basis. Returns switch_method when dual
  // feasibility is lost numerically; the primal loop then finishes.
  Outcome dual_loop() {
    const double ptol = opt_.primal_tolerance, dtol = opt_.dual_tolerance;
    bool perturbed = false, may_perturb = true;
    std::size_t stall = 0;
    int trouble = 0;
    std::vector<int> touched;
    while (true) {
      if (iterations_ >= max_iterations_) return Outcome::iteration_limit;
      if (etas_.size() >= opt_.refactor_interval) {
        if (!refactor()) return recover_singular();
        compute_basic_values();
        compute_duals();
        if (dual_infeasibility() > 0.0) {
          if (perturbed) restore_costs();
          return Outcome::switch_method;
        }
      }
      // Leaving row: largest bound violation.
      int r = -1;
      double worst = ptol;
      for (int i = 0; i < m_; ++i) {
        const int j = basis_[i];
        const double v = x_[j];
        const double inf = v < lo_[j] ? lo_[j] - v : (v > up_[j] ? v - up_[j] : 0.0);
        if (inf > worst) {
          worst = inf;
          r = i;
        }
      }
      if (r < 0) {
        if (perturbed) {
          restore_costs();
          perturbed = false;
          may_perturb = false;
          if (dual_infeasibility() > 0.0) return Outcome::switch_method;
        }
        return Outcome::optimal;
      }
      const int leaving = basis_[r];
      const bool to_lower = x_[leaving] < lo_[leaving];
      const double target = to_lower ? lo_[leaving] : up_[leaving];
      const double sigma = to_lower ? -1.0 : 1.0;

      // Pivot row alpha_j = (e_r' B^-1) a_j over nonbasic columns.
      const Vec rho = btran_unit(r);
      touched.clear();
      for (int i = 0; i < m_; ++i) {
        const double ri = rho[i];
        if (ri == 0.0) continue;
        for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) {
          const int j = row_col_[k];
          if (pos_[j] >= 0) continue;
          if (!mark_[j]) {
            mark_[j] = 1;
            touched.push_back(j);
          }
          alpha_[j] += ri * row_val_[k];
        }
        const int logical = n_ + i;
        if (pos_[logical] < 0) {
          if (!mark_[logical]) {
            mark_[logical] = 1;
            touched.push_back(logical);
          }
          alpha_[logical] -= ri;
        }
      }
      double amax = 0.0;
      for (int j : touched) {
        mark_[j] = 0;
        amax = std::max(amax, std::abs(alpha_[j]));
      }
      const double floor = opt_.pivot_tolerance * std::max(1.0, amax);
      auto slack_of = [&](int j) {
        // Dual slack in the direction that keeps j dual feasible; -1 if j cannot enter.
        const double a = alpha_[j];
        if (std::abs(a) <= floor || lo_[j] == up_[j]) return -1.0;
        switch (status_[j]) {
          case VarStatus::at_lower: return sigma * a > 0 ? std::max(d_[j], 0.0) : -1.0;
          case VarStatus::at_upper: return sigma * a < 0 ? std::max(-d_[j], 0.0) : -1.0;
          case VarStatus::free: return std::abs(d_[j]);
          default: return -1.0;
        }
      };
      double bound = kInfinity;
      for (int j : touched) {
        const double sl = slack_of(j);
        if (sl >= 0) bound = std::min(bound, (sl + dtol) / std::abs(alpha_[j]));
      }
      int q = -1;
      double best = 0.0;
      for (int j : touched) {
        const double sl = slack_of(j);
        if (sl < 0 || sl / std::abs(alpha_[j]) > bound) continue;
        if (std::abs(alpha_[j]) > best) {
          best = std::abs(alpha_[j]);
          q = j;
        }
      }
      if (q < 0) {
        for (int j : touched) alpha_[j] = 0.0;
        if (perturbed) restore_costs();
        return Outcome::infeasible;
      }
      const double alpha_q = alpha_[q];
      Vec w = ftran_column(q);
      if (std::abs(w[r] - alpha_q) > 1e-7 * (1.0 + std::abs(alpha_q))) {
        // Row and column disagree: refresh the factorization and retry.
        for (int j : touched) alpha_[j] = 0.0;
        if (++trouble > 5) {
          if (perturbed) restore_costs();
          return Outcome::switch_method;
        }
        if (!refactor()) return recover_singular();
        compute_basic_values();
        compute_duals();
        if (dual_infeasibility() > 0.0) {
          if (perturbed) restore_costs();
          return Outcome::switch_method;
        }
        continue;
      }
      const double theta_d = d_[q] / alpha_q;
      for (int j : touched) {
        d_[j] -= theta_d * alpha_[j];
        alpha_[j] = 0.0;
      }
      d_[q] = 0.0;
      d_[leaving] = -theta_d;

      const double delta = (x_[leaving] - target) / w[r];
      for (int i = 0; i < m_; ++i)
        if (w[i] != 0.0) x_[basis_[i]] -= delta * w[i];
      x_[q] += delta;
      x_[leaving] = target;
      status_[leaving] = to_lower ? VarStatus::at_lower : VarStatus::at_upper;
      pos_[leaving] = -1;
      basis_[r] = q;
      pos_[q] = r;
      status_[q] = VarStatus::basic;
      push_eta(r, w);
      ++iterations_;
      ++dual_iterations_;

      stall = std::abs(theta_d) <= 1e-12 ? stall + 1 : 0;
      if (stall >= opt_.stall_limit && may_perturb && !perturbed) {
        perturb_costs();
        perturbed = true;
        stall = 0;
      }
    }
  }

  // Primal simplex with a composite phase 1; any basis is a valid start.
  Outcome primal_loop() {
    int resets = 0;
    bool bland = false;
    bool perturbed = false, may_perturb = true;
    std::size_t degenerate = 0;
    while (true) {
      if (iterations_ >= max_iterations_) return Outcome::iteration_limit;
      if (etas_.size() >= opt_.refactor_interval) {
        if (!refactor()) {
          if (++resets > 3) throw SolverError("simplex: basis became singular repeatedly");
          log::debug("simplex: singular basis, restarting from the slack basis");
          slack_basis();
          refactor();
        }
        compute_basic_values();
      }
      const bool phase1 = infeasibility() > 0.0;
      std::vector<double> cb(static_cast<std::size_t>(m_));
      for (int i = 0; i < m_; ++i) {
        const int j = basis_[i];
        if (phase1) {
          const double v = x_[j];
          cb[i] = v < lo_[j] - opt_.primal_tolerance ? -1.0 : (v > up_[j] + opt_.primal_tolerance ? 1.0 : 0.0);
        } else {
          cb[i] = cost_[j];
        }
      }
      const Vec y = btran(cb);

      int entering = -1;
      double best = 0.0, d_enter = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (pos_[j] >= 0) continue;
        if (lo_[j] == up_[j]) continue;
        const double d = reduced_cost(j, y, phase1);
        bool eligible = false;
        switch (status_[j]) {
          case VarStatus::at_lower: eligible = d < -opt_.dual_tolerance; break;
          case VarStatus::at_upper: eligible = d > opt_.dual_tolerance; break;
          case VarStatus::free: eligible = std::abs(d) > opt_.dual_tolerance; break;
          case VarStatus::basic: break;
        }
        if (!eligible) continue;
        if (bland) {
          entering = j;
          d_enter = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          d_enter = d;
        }
      }
      if (entering < 0) {
        if (perturbed) {
          // Drop the perturbation and reoptimize against the true bounds.
          restore_bounds();
          perturbed = false;
          may_perturb = false;
          degenerate = 0;
          continue;
        }
        return phase1 ? Outcome::infeasible : Outcome::optimal;
      }
      const double dir = d_enter < 0 ? 1.0 : -1.0;
      Vec w = ftran_column(entering);

      // Two-pass Harris ratio test. rate = change of x_B[i] per unit step.
      const double ptol = opt_.primal_tolerance;
      double wmax = 0.0;
      for (int i = 0; i < m_; ++i) wmax = std::max(wmax, std::abs(w[i]));
      const double pivot_floor = opt_.pivot_tolerance * std::max(1.0, wmax);
      const double flip = std::isfinite(lo_[entering]) && std::isfinite(up_[entering])
                              ? up_[entering] - lo_[entering] : kInfinity;
      double harris = flip;
      for (int i = 0; i < m_; ++i) {
        const double wi = w[i];
        if (std::abs(wi) <= pivot_floor) continue;
        const double rate = -dir * wi;
        const int j = basis_[i];
        const double v = x_[j];
        if (rate < 0) {
          if (v < lo_[j] - ptol || !std::isfinite(lo_[j])) continue;
          harris = std::min(harris, (v - lo_[j] + ptol) / -rate);
        } else {
          if (v > up_[j] + ptol || !std::isfinite(up_[j])) continue;
          harris = std::min(harris, (up_[j] - v + ptol) / rate);
        }
      }
      int leave = -1;
      bool leave_to_upper = false;
      double step = flip, best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double wi = w[i];
        if (std::abs(wi) <= pivot_floor) continue;
        const double rate = -dir * wi;
        const int j = basis_[i];
        const double v = x_[j];
        double ratio;
        bool to_upper;
        if (rate < 0) {
          if (v < lo_[j] - ptol || !std::isfinite(lo_[j])) continue;
          ratio = std::max(0.0, v - lo_[j]) / -rate;
          to_upper = false;
        } else {
          if (v > up_[j] + ptol || !std::isfinite(up_[j])) continue;
          ratio = std::max(0.0, up_[j] - v) / rate;
          to_upper = true;
        }
        if (ratio > harris) continue;
        // Largest pivot wins; Bland mode breaks exact ties by variable index.
        const double mag = std::abs(wi);
        if (leave < 0 || mag > best_pivot || (bland && mag == best_pivot && j < basis_[leave])) {
          best_pivot = mag;
          leave = i;
          leave_to_upper = to_upper;
          step = ratio;
        }
      }
      if (leave >= 0 && flip <= step) {
        leave = -1;
        step = flip;
      }
      if (leave < 0 && !std::isfinite(step)) {
        if (!phase1) return Outcome::unbounded;
        // Infeasible basics reach their violated bound; stop at the last one.
        double far = -1.0;
        for (int i = 0; i < m_; ++i) {
          const double wi = w[i];
          if (std::abs(wi) <= pivot_floor) continue;
          const double rate = -dir * wi;
          const int j = basis_[i];
          const double v = x_[j];
          double ratio = -1.0;
          bool to_upper = false;
          if (rate > 0 && v < lo_[j] - ptol) {
            ratio = (lo_[j] - v) / rate;
          } else if (rate < 0 && v > up_[j] + ptol) {
            ratio = (v - up_[j]) / -rate;
            to_upper = true;
          }
          if (ratio > far) {
            far = ratio;
            leave = i;
            leave_to_upper = to_upper;
          }
        }
        if (leave < 0) throw SolverError("simplex: phase 1 direction is unbounded");
        step = far;
      }

      ++iterations_;
      if (bland) ++bland_iterations_;
      const bool degenerate_step = step * std::abs(d_enter) <= 1e-12;
      degenerate = degenerate_step ? degenerate + 1 : 0;
      if (degenerate >= opt_.stall_limit) {
        if (may_perturb && !perturbed) {
          perturb_bounds();
          perturbed = true;
          degenerate = 0;
        } else {
          bland = true;
        }
      }
      if (!degenerate_step) bland = false;

      x_[entering] += dir * step;
      for (int i = 0; i < m_; ++i)
        if (w[i] != 0.0) x_[basis_[i]] -= dir * step * w[i];
      if (leave < 0) {
        status_[entering] = status_[entering] == VarStatus::at_lower ? VarStatus::at_upper : VarStatus::at_lower;
        x_[entering] = status_[entering] == VarStatus::at_lower ? lo_[entering] : up_[entering];
        continue;
      }
      const int out = basis_[leave];
      status_[out] = leave_to_upper ? VarStatus::at_upper : VarStatus::at_lower;
      x_[out] = leave_to_upper ? up_[out] : lo_[out];
      pos_[out] = -1;
      basis_[leave] = entering;
      pos_[entering] = leave;
      status_[entering] = VarStatus::basic;
      push_eta(leave, w);
    }
  }

  Outcome recover_singular() {
    log::debug("simplex: singular basis in the dual loop, restarting primal from the slack basis");
    slack_basis();
    if (!refactor()) throw SolverError("simplex: slack basis is singular");
    compute_basic_values();
    return Outcome::switch_method;
  }

  // Widens every finite bound by a small random amount so degenerate
  // vertices separate; restore_bounds() undoes it.
  void perturb_bounds() {
    saved_lo_ = lo_;
    saved_up_ = up_;
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    for (int j = 0; j < total_; ++j) {
      const double scale = opt_.perturbation;
      if (std::isfinite(lo_[j])) lo_[j] -= scale * (1.0 + std::abs(lo_[j])) * u(rng);
      if (std::isfinite(up_[j])) up_[j] += scale * (1.0 + std::abs(up_[j])) * u(rng);
      if (pos_[j] < 0) place_nonbasic(j);
    }
    compute_basic_values();
    log::debug("simplex: perturbed bounds after a degenerate stall");
  }

  void restore_bounds() {
    lo_ = saved_lo_;
    up_ = saved_up_;
    for (int j = 0; j < total_; ++j)
      if (pos_[j] < 0) place_nonbasic(j);
    if (!refactor()) {
      slack_basis();
      refactor();
    }
    compute_basic_values();
  }

  // Shifts nonbasic costs away from zero in their feasible direction.
  void perturb_costs() {
    saved_cost_ = cost_;
    std::mt19937_64 rng(0xc057);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0 || lo_[j] == up_[j]) continue;
      const double shift = opt_.perturbation * (1.0 + std::abs(cost_[j])) * u(rng);
      if (status_[j] == VarStatus::at_lower) {
        cost_[j] += shift;
        d_[j] += shift;
      } else if (status_[j] == VarStatus::at_upper) {
        cost_[j] -= shift;
        d_[j] -= shift;
      }
    }
    log::debug("simplex: perturbed costs after a dual degenerate stall");
  }

  void restore_costs() {
    cost_ = saved_cost_;
    compute_duals();
  }

  void compute_duals() {
    std::vector<double> cb(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    const Vec y = btran(cb);
    for (int j = 0; j < total_; ++j) d_[j] = pos_[j] >= 0 ? 0.0 : reduced_cost(j, y, false);
  }

  // Sum of dual infeasibilities beyond tolerance.
  double dual_infeasibility() const {
    double sum = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0 || lo_[j] == up_[j]) continue;
      const double d = d_[j];
      switch (status_[j]) {
        case VarStatus::at_lower: if (d < -opt_.dual_tolerance) sum -= d; break;
        case VarStatus::at_upper: if (d > opt_.dual_tolerance) sum += d; break;
        case VarStatus::free: if (std::abs(d) > opt_.dual_tolerance) sum += std::abs(d); break;
        default: break;
      }
    }
    return sum;
  }

  double reduced_cost(int j, const Vec& y, bool phase1) const {
    double d = phase1 ? 0.0 : cost_[j];
    if (j >= n_) return d + y[j - n_];
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) d -= y[row_index_[k]] * value_[k];
    return d;
  }

  VarStatus resting_status(int j) const {
    if (std::isfinite(lo_[j])) return VarStatus::at_lower;
    if (std::isfinite(up_[j])) return VarStatus::at_upper;
    return VarStatus::free;
  }

  void place_nonbasic(int j) {
    switch (status_[j]) {
      case VarStatus::at_lower: x_[j] = lo_[j]; break;
      case VarStatus::at_upper: x_[j] = up_[j]; break;
      default: x_[j] = 0.0; break;
    }
  }

  void slack_basis() {
    status_.assign(static_cast<std::size_t>(total_), VarStatus::at_lower);
    pos_.assign(static_cast<std::size_t>(total_), -1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      status_[j] = resting_status(j);
      place_nonbasic(j);
    }
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      pos_[n_ + i] = i;
      status_[n_ + i] = VarStatus::basic;
    }
  }

  bool load_basis(const SimplexBasis& warm) {
    if (warm.columns.size() > static_cast<std::size_t>(n_) || warm.rows.size() > static_cast<std::size_t>(m_))
      return false;
    status_.assign(static_cast<std::size_t>(total_), VarStatus::at_lower);
    pos_.assign(static_cast<std::size_t>(total_), -1);
    basis_.clear();
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < total_; ++j) {
      VarStatus s;
      if (j < n_) {
        s = static_cast<std::size_t>(j) < warm.columns.size() ? warm.columns[j] : resting_status(j);
      } else {
        const auto i = static_cast<std::size_t>(j - n_);
        s = i < warm.rows.size() ? warm.rows[i] : VarStatus::basic;
      }
      if (s == VarStatus::at_lower && !std::isfinite(lo_[j])) s = resting_status(j);
      if (s == VarStatus::at_upper && !std::isfinite(up_[j])) s = resting_status(j);
      status_[j] = s;
      if (s == VarStatus::basic) {
        pos_[j] = static_cast<int>(basis_.size());
        basis_.push_back(j);
      } else {
        place_nonbasic(j);
      }
    }
    return basis_.size() == static_cast<std::size_t>(m_);
  }

  // The basis is [S | -I_L]: basic structural columns S and the logical
  // columns of rows L. Only S restricted to the remaining rows K (|K| = |S|)
  // needs a factorization; logical rows are solved by substitution.
  bool refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    kernel_cols_.clear();
    kernel_rows_.clear();
    kernel_index_.assign(static_cast<std::size_t>(m_), -1);
    base_basis_ = basis_;
    logical_pos_.assign(pos_.begin() + n_, pos_.end());
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) kernel_cols_.push_back(i);
    for (int r = 0; r < m_; ++r)
      if (logical_pos_[r] < 0) {
        kernel_index_[r] = static_cast<int>(kernel_rows_.size());
        kernel_rows_.push_back(r);
      }
    if (kernel_rows_.size() != kernel_cols_.size()) return false;
    const int k = static_cast<int>(kernel_cols_.size());
    if (k == 0) return true;
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < k; ++c) {
      const int j = basis_[kernel_cols_[c]];
      for (int e = col_start_[j]; e < col_start_[j + 1]; ++e) {
        const int kr = kernel_index_[row_index_[e]];
        if (kr >= 0) trip.emplace_back(kr, c, value_[e]);
      }
    }
    SpMat b(k, k);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu_.analyzePattern(b);
    lu_.factorize(b);
    return lu_.info() == Eigen::Success;
  }

  // Solves B0 z = a for the freshly factored basis (z indexed by position).
  Vec base_solve(const Vec& a) const {
    Vec z(m_);
    const int k = static_cast<int>(kernel_cols_.size());
    Vec t = Vec::Zero(m_);
    if (k > 0) {
      Vec ak(k);
      for (int c = 0; c < k; ++c) ak[c] = a[kernel_rows_[c]];
      const Vec u = lu_.solve(ak);
      for (int c = 0; c < k; ++c) {
        const int p = kernel_cols_[c];
        z[p] = u[c];
        const int j = base_basis_[p];
        for (int e = col_start_[j]; e < col_start_[j + 1]; ++e) t[row_index_[e]] += value_[e] * u[c];
      }
    }
    for (int r = 0; r < m_; ++r) {
      const int p = logical_pos_[r];
      if (p >= 0) z[p] = t[r] - a[r];
    }
    return z;
  }

  // Solves B0' y = c (c indexed by position, y by row).
  Vec base_solve_transpose(const Vec& c) const {
    Vec y = Vec::Zero(m_);
    for (int r = 0; r < m_; ++r) {
      const int p = logical_pos_[r];
      if (p >= 0) y[r] = -c[p];
    }
    const int k = static_cast<int>(kernel_cols_.size());
    if (k > 0) {
      Vec v(k);
      for (int col = 0; col < k; ++col) {
        const int p = kernel_cols_[col];
        const int j = base_basis_[p];
        double s = c[p];
        for (int e = col_start_[j]; e < col_start_[j + 1]; ++e)
          if (kernel_index_[row_index_[e]] < 0) s -= value_[e] * y[row_index_[e]];
        v[col] = s;
      }
      const Vec yk = lu_.transpose().solve(v);
      for (int c2 = 0; c2 < k; ++c2) y[kernel_rows_[c2]] = yk[c2];
    }
    return y;
  }

  void compute_basic_values() {
    if (m_ == 0) return;
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0 || x_[j] == 0.0) continue;
      if (j >= n_) {
        rhs[j - n_] += x_[j];
      } else {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) rhs[row_index_[k]] -= value_[k] * x_[j];
      }
    }
    Vec xb = ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  double infeasibility() const {
    double sum = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (x_[j] < lo_[j] - opt_.primal_tolerance) sum += lo_[j] - x_[j];
      if (x_[j] > up_[j] + opt_.primal_tolerance) sum += x_[j] - up_[j];
    }
    return sum;
  }

  Vec ftran(const Vec& a) const {
    Vec z = base_solve(a);
    for (const auto& e : etas_) {
      const double zr = z[e.row] / e.pivot;
      z[e.row] = zr;
      if (zr == 0.0) continue;
      for (std::size_t k = 0; k < e.index.size(); ++k) z[e.index[k]] -= e.value[k] * zr;
    }
    return z;
  }

  Vec ftran_column(int j) const {
    Vec a = Vec::Zero(m_);
    if (j >= n_) {
      a[j - n_] = -1.0;
    } else {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) a[row_index_[k]] = value_[k];
    }
    return ftran(a);
  }

  Vec btran(const std::vector<double>& cb) const {
    if (m_ == 0) return Vec();
    Vec v = Eigen::Map<const Vec>(cb.data(), m_);
    return btran_vec(std::move(v));
  }

  Vec btran_unit(int r) const {
    Vec v = Vec::Zero(m_);
    v[r] = 1.0;
    return btran_vec(std::move(v));
  }

  Vec btran_vec(Vec v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
      v[it->row] = s / it->pivot;
    }
    return base_solve_transpose(v);
  }

  void push_eta(int r, const Vec& w) {
    Eta e;
    e.row = r;
    e.pivot = w[r];
    for (int i = 0; i < m_; ++i)
      if (i != r && w[i] != 0.0) {
        e.index.push_back(i);
        e.value.push_back(w[i]);
      }
    etas_.push_back(std::move(e));
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int m_ = 0, n_ = 0, total_ = 0;
  std::vector<int> col_start_, row_index_;
  std::vector<double> value_;
  std::vector<int> row_start_, row_col_;
  std::vector<double> row_val_;
  std::vector<double> lo_, up_, cost_, x_, d_, alpha_;
  std::vector<double> saved_lo_, saved_up_, saved_cost_;
  std::vector<char> mark_;
  std::vector<VarStatus> status_;
  std::vector<int> basis_, pos_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  // Basis positions of structural columns, their kernel rows, and the
  // kernel index of each row (-1 for rows with a basic logical).
  std::vector<int> kernel_cols_, kernel_rows_, kernel_index_;
  // Basis at the last refactor, which the eta file is relative to.
  std::vector<int> base_basis_, logical_pos_;
  std::vector<Eta> etas_;
  std::size_t iterations_ = 0, dual_iterations_ = 0, bland_iterations_ = 0, max_iterations_ = 0;
};

}  // namespace

SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options, const SimplexBasis* warm_start) {
  RevisedSimplex solver(lp, options);
  return solver.run(warm_start);
}

}  // namespace mixinfer
