#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mixinfer {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// min c'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
class LinearProgram {
 public:
  enum class Sense { greater_equal, less_equal, equal };

  struct Row {
    std::vector<std::pair<int, double>> terms;  // (column, coefficient)
    Sense sense = Sense::greater_equal;
    double rhs = 0.0;
    std::string name;
  };

  int add_column(std::string name, double cost, double lower = 0.0, double upper = kInfinity);
  int add_row(Row row);

  std::size_t num_columns() const { return cost_.size(); }
  std::size_t num_rows() const { return rows_.size(); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& column_lower() const { return lower_; }
  const std::vector<double>& column_upper() const { return upper_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<Row>& rows() const { return rows_; }

  double objective_value(const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<double> cost_, lower_, upper_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
};

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper, free };

// Structural statuses then one logical status per row.
struct SimplexBasis {
  std::vector<VarStatus> columns;
  std::vector<VarStatus> rows;
  bool empty() const { return columns.empty() && rows.empty(); }
};

struct SimplexOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  std::size_t refactor_interval = 100;
  std::size_t max_iterations = 0;  // 0: derived from the problem size
  // Consecutive degenerate pivots tolerated before perturbing bounds, and
  // after that before switching to Bland's rule.
  std::size_t stall_limit = 50;
  // Relative size of the random bound shifts applied after a stall.
  double perturbation = 1e-6;
};

struct SimplexResult {
  enum class Status { optimal, infeasible, unbounded, iteration_limit };
  Status status = Status::optimal;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t dual_iterations = 0;
  std::size_t bland_iterations = 0;
  SimplexBasis basis;
};

std::string to_string(SimplexResult::Status status);

// Bounded revised simplex on [A | -I] with Eigen sparse LU and product-form
// updates. A dual feasible start (such as the previous optimum after rows
// were added) runs the dual simplex; otherwise the primal simplex runs with a
// composite phase 1, so any basis is a valid start.
SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {},
                            const SimplexBasis* warm_start = nullptr);

}  // namespace mixinfer
