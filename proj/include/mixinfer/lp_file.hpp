#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mixinfer/simplex.hpp"

namespace mixinfer {

// CPLEX-style LP text: Minimize / Subject To / Bounds / End.
std::string write_lp_text(const LinearProgram& lp);
void write_lp_file(const LinearProgram& lp, const std::filesystem::path& path);

// Reads the subset of the LP dialect that write_lp_text produces: one
// minimization objective, linear rows with <=, >= or =, and a Bounds section.
// Tokens must be whitespace separated.
LinearProgram read_lp_text(std::string_view text);
LinearProgram read_lp_file(const std::filesystem::path& path);

// Solution files hold `name value` lines. Lines starting with '#' and lines
// whose second field is not a number are skipped. Lines of the form
// `index name value [...]` are also accepted.
std::unordered_map<std::string, double> parse_solution_text(std::string_view text);
std::string write_solution_text(const LinearProgram& lp, const std::vector<double>& x, double objective);

// Environment variable consulted when no solver command is configured.
inline constexpr const char* kSolverCommandEnv = "MIXINFER_LP_SOLVER";

// Runs an external solver. `{lp}` and `{sol}` in the command are replaced by
// the instance and solution paths; without placeholders both are appended.
// Columns absent from the solution file are taken as 0. Throws SolverError on
// a missing command, nonzero exit, or unreadable solution.
std::vector<double> solve_external(const LinearProgram& lp, const std::string& command);

}  // namespace mixinfer
