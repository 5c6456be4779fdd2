#include "mixinfer/lp_file.hpp"

#include <unistd.h>

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"

namespace mixinfer {

namespace {

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "inf" || lower == "+inf" || lower == "infinity" || lower == "+infinity") {
    out = kInfinity;
    return true;
  }
  if (lower == "-inf" || lower == "-infinity") {
    out = -kInfinity;
    return true;
  }
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void append_terms(std::ostringstream& out, const std::vector<std::pair<int, double>>& terms,
                  const std::vector<std::string>& names) {
  std::size_t on_line = 0;
  for (const auto& [j, a] : terms) {
    if (on_line == 6) {
      out << "\n   ";
      on_line = 0;
    }
    out << (std::signbit(a) ? " - " : " + ") << number(std::abs(a)) << ' ' << names[static_cast<std::size_t>(j)];
    ++on_line;
  }
  if (terms.empty()) out << " 0 " << (names.empty() ? std::string("x") : names.front());
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\\') {  // comment to end of line
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    tokens.push_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string lowered(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool is_sense(std::string_view t) {
  return t == "<=" || t == ">=" || t == "=" || t == "=<" || t == "=>" || t == "<" || t == ">";
}

std::string read_whole(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string write_lp_text(const LinearProgram& lp) {
  const auto& names = lp.column_names();
  std::ostringstream out;
  out << "\\ mixinfer linear program\nMinimize\n obj:";
  // Every column appears in the objective, zero or not, so readers see the
  // columns in their original order.
  std::vector<std::pair<int, double>> obj;
  for (std::size_t j = 0; j < lp.num_columns(); ++j) obj.emplace_back(static_cast<int>(j), lp.cost()[j]);
  append_terms(out, obj, names);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows()[i];
    out << ' ' << (row.name.empty() ? "r" + std::to_string(i) : row.name) << ':';
    append_terms(out, row.terms, names);
    switch (row.sense) {
      case LinearProgram::Sense::greater_equal: out << " >= "; break;
      case LinearProgram::Sense::less_equal: out << " <= "; break;
      case LinearProgram::Sense::equal: out << " = "; break;
    }
    out << number(row.rhs) << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const double lo = lp.column_lower()[j], up = lp.column_upper()[j];
    if (lo == 0.0 && std::isinf(up)) continue;
    if (std::isinf(lo) && std::isinf(up)) {
      out << ' ' << names[j] << " free\n";
    } else {
      out << ' ' << number(lo) << " <= " << names[j] << " <= " << number(up) << '\n';
    }
  }
  out << "End\n";
  return out.str();
}

void write_lp_file(const LinearProgram& lp, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << write_lp_text(lp);
  if (!out) throw DataError("write failed for " + path.string());
}

LinearProgram read_lp_text(std::string_view text) {
  const auto tokens = split_tokens(text);
  enum class Section { none, objective, constraints, bounds, done } section = Section::none;
  LinearProgram lp;
  std::unordered_map<std::string, int> column;
  std::vector<double> costs;
  auto col = [&](std::string_view name) {
    auto [it, inserted] = column.emplace(std::string(name), static_cast<int>(column.size()));
    if (inserted) costs.push_back(0.0);
    return it->second;
  };
  struct PendingRow {
    LinearProgram::Row row;
  };
  std::vector<PendingRow> rows;
  struct BoundSpec {
    double lo = 0.0, up = kInfinity;
  };
  std::unordered_map<int, BoundSpec> bounds;

  std::size_t i = 0;
  auto keyword = [&](std::size_t k) -> int {
    const std::string t = lowered(tokens[k]);
    if (t == "minimize" || t == "minimise" || t == "min") return 1;
    if (t == "maximize" || t == "maximise" || t == "max") return -1;
    if (t == "subject" && k + 1 < tokens.size() && lowered(tokens[k + 1]) == "to") return 2;
    if (t == "st" || t == "s.t." || t == "such") return 3;
    if (t == "bounds") return 4;
    if (t == "end") return 5;
    if (t == "generals" || t == "general" || t == "binary" || t == "binaries") return 6;
    return 0;
  };
  // Reads `[name:] terms`; stops at a sense token or keyword.
  auto read_expression = [&](std::string& name, std::vector<std::pair<int, double>>& terms) {
    if (i < tokens.size() && tokens[i].size() > 1 && tokens[i].back() == ':') {
      name = std::string(tokens[i].substr(0, tokens[i].size() - 1));
      ++i;
    }
    double sign = 1.0;
    double coef = 1.0;
    bool have_coef = false;
    while (i < tokens.size() && !is_sense(tokens[i]) && keyword(i) == 0) {
      const auto t = tokens[i];
      double v;
      if (t == "+") {
        sign = 1.0;
      } else if (t == "-") {
        sign = -1.0;
      } else if (parse_number(t, v)) {
        coef = v;
        have_coef = true;
      } else {
        terms.emplace_back(col(t), sign * (have_coef ? coef : 1.0));
        sign = 1.0;
        coef = 1.0;
        have_coef = false;
      }
      ++i;
    }
  };

  while (i < tokens.size() && section != Section::done) {
    const int kw = keyword(i);
    if (kw != 0) {
      if (kw == -1) throw ParseError("maximization objectives are not supported", 0);
      if (kw == 6) throw ParseError("integer sections are not supported", 0);
      section = kw == 1 ? Section::objective : kw == 4 ? Section::bounds : kw == 5 ? Section::done : Section::constraints;
      i += kw == 2 ? 2 : 1;
      continue;
    }
    if (section == Section::objective) {
      std::string name;
      std::vector<std::pair<int, double>> terms;
      read_expression(name, terms);
      for (const auto& [j, a] : terms) costs[static_cast<std::size_t>(j)] += a;
      if (i < tokens.size() && is_sense(tokens[i])) throw ParseError("unexpected relation in objective", 0);
    } else if (section == Section::constraints) {
      PendingRow pr;
      read_expression(pr.row.name, pr.row.terms);
      if (i + 1 >= tokens.size() || !is_sense(tokens[i])) throw ParseError("constraint without relation", 0);
      const auto s = tokens[i];
      pr.row.sense = (s == "<=" || s == "=<" || s == "<")   ? LinearProgram::Sense::less_equal
                     : (s == ">=" || s == "=>" || s == ">") ? LinearProgram::Sense::greater_equal
                                                            : LinearProgram::Sense::equal;
      double rhs;
      if (!parse_number(tokens[i + 1], rhs)) throw ParseError("bad right-hand side '" + std::string(tokens[i + 1]) + "'", 0);
      pr.row.rhs = rhs;
      i += 2;
      rows.push_back(std::move(pr));
    } else if (section == Section::bounds) {
      // Forms: x free | x >= l | x <= u | x = v | l <= x <= u
      double v;
      if (parse_number(tokens[i], v)) {
        if (i + 2 >= tokens.size() || !is_sense(tokens[i + 1])) throw ParseError("bad bound", 0);
        const int j = col(tokens[i + 2]);
        auto& b = bounds[j];
        b.lo = v;
        i += 3;
        if (i + 1 < tokens.size() && is_sense(tokens[i]) && parse_number(tokens[i + 1], v)) {
          b.up = v;
          i += 2;
        }
        continue;
      }
      const int j = col(tokens[i]);
      auto& b = bounds[j];
      if (i + 1 < tokens.size() && lowered(tokens[i + 1]) == "free") {
        b.lo = -kInfinity;
        b.up = kInfinity;
        i += 2;
        continue;
      }
      if (i + 2 >= tokens.size() || !is_sense(tokens[i + 1]) || !parse_number(tokens[i + 2], v))
        throw ParseError("bad bound for '" + std::string(tokens[i]) + "'", 0);
      const auto s = tokens[i + 1];
      if (s == "=") {
        b.lo = b.up = v;
      } else if (s == "<=" || s == "=<" || s == "<") {
        b.up = v;
      } else {
        b.lo = v;
      }
      i += 3;
    } else {
      throw ParseError("content before the objective section", 0);
    }
  }
  std::vector<std::string> names(column.size());
  for (const auto& [name, j] : column) names[static_cast<std::size_t>(j)] = name;
  for (std::size_t j = 0; j < names.size(); ++j) {
    BoundSpec b;
    if (auto it = bounds.find(static_cast<int>(j)); it != bounds.end()) b = it->second;
    lp.add_column(names[j], costs[j], b.lo, b.up);
  }
  for (auto& pr : rows) lp.add_row(std::move(pr.row));
  return lp;
}

LinearProgram read_lp_file(const std::filesystem::path& path) { return read_lp_text(read_whole(path)); }

std::unordered_map<std::string, double> parse_solution_text(std::string_view text) {
  std::unordered_map<std::string, double> values;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string_view> f = split_tokens(line);
    double v;
    if (f.size() >= 2 && parse_number(f[1], v) && !parse_number(f[0], v)) {
      parse_number(f[1], v);
      values[std::string(f[0])] = v;
    } else if (f.size() >= 3 && parse_number(f[0], v) && !parse_number(f[1], v) && parse_number(f[2], v)) {
      values[std::string(f[1])] = v;
    }
  }
  return values;
}

std::string write_solution_text(const LinearProgram& lp, const std::vector<double>& x, double objective) {
  std::ostringstream out;
  out << "# objective " << number(objective) << '\n';
  for (std::size_t j = 0; j < lp.num_columns(); ++j) out << lp.column_names()[j] << ' ' << number(x[j]) << '\n';
  return out.str();
}

std::vector<double> solve_external(const LinearProgram& lp, const std::string& configured) {
  std::string command = configured;
  if (command.empty()) {
    if (const char* env = std::getenv(kSolverCommandEnv)) command = env;
  }
  if (command.empty())
    throw SolverError(std::string("no external solver command configured (set ") + kSolverCommandEnv + ")");
  static std::atomic<unsigned> serial{0};
  const auto stem = std::filesystem::temp_directory_path() /
                    ("mixinfer_" + std::to_string(::getpid()) + "_" + std::to_string(serial++));
  const auto lp_path = stem.string() + ".lp";
  const auto sol_path = stem.string() + ".sol";
  write_lp_file(lp, lp_path);
  auto substitute = [&](const std::string& key, const std::string& value) {
    bool found = false;
    for (std::size_t pos; (pos = command.find(key)) != std::string::npos; found = true) command.replace(pos, key.size(), value);
    return found;
  };
  const bool has_lp = substitute("{lp}", lp_path);
  const bool has_sol = substitute("{sol}", sol_path);
  if (!has_lp && !has_sol) command += " " + lp_path + " " + sol_path;
  log::debug("external solver: " + command);
  const int rc = std::system(command.c_str());
  std::error_code ec;
  std::filesystem::remove(lp_path, ec);
  if (rc != 0) {
    std::filesystem::remove(sol_path, ec);
    throw SolverError("external solver exited with status " + std::to_string(rc));
  }
  std::string text;
  try {
    text = read_whole(sol_path);
  } catch (const DataError&) {
    throw SolverError("external solver wrote no solution file");
  }
  std::filesystem::remove(sol_path, ec);
  const auto values = parse_solution_text(text);
  if (values.empty()) throw SolverError("external solution file has no values");
  std::vector<double> x(lp.num_columns(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j)
    if (auto it = values.find(lp.column_names()[j]); it != values.end()) x[j] = it->second;
  return x;
}

}  // namespace mixinfer
