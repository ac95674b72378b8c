#include "jacopt/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "jacopt/error.hpp"

namespace jacopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string_view strip_comment(std::string_view line, std::string_view markers) {
  const std::size_t pos = line.find_first_of(markers);
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

struct Token {
  std::string_view text;
  int column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double number(const Token& tok, int line, double infBnd) {
  const std::string t = lower(tok.text);
  if (t == "inf" || t == "+inf") return infBnd;
  if (t == "-inf") return -infBnd;
  if (auto v = to_double(tok.text)) return *v;
  throw ParseError(fmt::format("'{}' is not a number", tok.text), line, tok.column);
}

std::size_t row_index(const Token& tok, int line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc() || ptr != tok.text.data() + tok.text.size() || v == 0) {
    throw ParseError(fmt::format("'{}' is not a row number", tok.text), line, tok.column);
  }
  return v;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

void expect_args(const std::vector<Token>& toks, std::size_t count, int line) {
  if (toks.size() != count + 1) {
    throw ParseError(fmt::format("'{}' takes {} argument{}", toks[0].text, count, count == 1 ? "" : "s"),
                     line, toks[0].column);
  }
}

std::string bound_text(double b) {
  if (b >= 1.0e20 || b == kInf) return "inf";
  if (b <= -1.0e20 || b == -kInf) return "-inf";
  return fmt::format("{}", b);
}

std::string var_name(const ProblemSpec& spec, std::size_t j) {
  return j < spec.var_names.size() ? spec.var_names[j] : fmt::format("x{}", j + 1);
}

std::string fun_name(const ProblemSpec& spec, std::size_t i) {
  return i < spec.fun_names.size() && !spec.fun_names[i].empty() ? spec.fun_names[i] : fmt::format("F{}", i + 1);
}

}  // namespace

ParsedProblem parse_problem_file(std::string_view text, const Options& opts) {
  std::string name = "jacopt";
  std::vector<std::string> vars;
  SymbolTable symbols;
  int vars_line = 0;

  struct Objective {
    std::size_t row = 0;
    Sense sense = Sense::Minimize;
    int line = 0;
  };
  std::optional<Objective> objective;
  std::map<std::size_t, std::pair<Expr, int>> rows;
  struct RowBound {
    std::size_t row;
    double lo, hi;
    int line;
  };
  std::vector<RowBound> rowbounds;
  std::map<std::size_t, std::pair<double, double>> bounds;
  std::map<std::size_t, double> starts;
  double objadd = 0.0;

  const auto lines = split_lines(text);
  int lineno = 0;
  for (std::string_view raw : lines) {
    ++lineno;
    const std::string_view line = strip_comment(raw, "#");
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string key = lower(toks[0].text);

    auto variable = [&](const Token& tok) {
      auto it = symbols.find(tok.text);
      if (it == symbols.end()) {
        throw ParseError(fmt::format("unknown variable '{}'", tok.text), lineno, tok.column);
      }
      return it->second;
    };

    if (key == "problem") {
      expect_args(toks, 1, lineno);
      name = std::string(toks[1].text);
    } else if (key == "variables") {
      if (vars_line) throw ParseError(fmt::format("variables already declared on line {}", vars_line), lineno, 1);
      if (toks.size() < 2) throw ParseError("'variables' needs at least one name", lineno, 1);
      vars_line = lineno;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        const Token& tok = toks[k];
        if (!is_identifier(tok.text)) {
          throw ParseError(fmt::format("'{}' is not a valid variable name", tok.text), lineno, tok.column);
        }
        if (!symbols.emplace(std::string(tok.text), vars.size()).second) {
          throw ParseError(fmt::format("duplicate variable '{}'", tok.text), lineno, tok.column);
        }
        vars.emplace_back(tok.text);
      }
    } else if (key == "minimize" || key == "maximize" || key == "feasibility") {
      if (objective) {
        throw ParseError(fmt::format("objective already given on line {}", objective->line), lineno, 1);
      }
      Objective obj;
      obj.line = lineno;
      if (key == "feasibility") {
        expect_args(toks, 0, lineno);
      } else {
        expect_args(toks, 1, lineno);
        obj.row = row_index(toks[1], lineno);
        obj.sense = key == "maximize" ? Sense::Maximize : Sense::Minimize;
      }
      objective = obj;
    } else if (key == "f") {
      // the row number may touch the '=' as in "F 2=x1"
      const std::size_t num = line.find_first_not_of(" \t", static_cast<std::size_t>(toks[0].column));
      std::size_t after = num == std::string_view::npos ? line.size() : num;
      while (after < line.size() && std::isdigit(static_cast<unsigned char>(line[after]))) ++after;
      if (num == std::string_view::npos || after == num) {
        throw ParseError("expected 'F i = EXPR'", lineno, toks[0].column);
      }
      const Token row_tok{line.substr(num, after - num), static_cast<int>(num) + 1};
      const std::size_t i = row_index(row_tok, lineno);
      const std::size_t eq = line.find_first_not_of(" \t", after);
      if (eq == std::string_view::npos || line[eq] != '=') {
        throw ParseError("expected '=' after the row number", lineno, static_cast<int>(after) + 1);
      }
      if (auto it = rows.find(i); it != rows.end()) {
        throw ParseError(fmt::format("duplicate row {} (first defined on line {})", i, it->second.second),
                         lineno, row_tok.column);
      }
      if (!vars_line) throw ParseError("'variables' must come before the functions", lineno, 1);
      const std::string_view body = line.substr(eq + 1);
      try {
        rows.emplace(i, std::make_pair(parse_function(body, symbols), lineno));
      } catch (const ParseError& e) {
        // columns are relative to the expression text
        const int col = e.column() > 0 ? e.column() + static_cast<int>(eq) + 1 : 0;
        throw ParseError(e.what(), lineno, col);
      }
    } else if (key == "bound") {
      expect_args(toks, 3, lineno);
      const std::size_t j = variable(toks[1]);
      bounds[j] = {number(toks[2], lineno, opts.infBnd), number(toks[3], lineno, opts.infBnd)};
    } else if (key == "rowbound") {
      expect_args(toks, 3, lineno);
      rowbounds.push_back({row_index(toks[1], lineno), number(toks[2], lineno, opts.infBnd),
                           number(toks[3], lineno, opts.infBnd), lineno});
    } else if (key == "start") {
      expect_args(toks, 2, lineno);
      const std::size_t j = variable(toks[1]);
      starts[j] = number(toks[2], lineno, opts.infBnd);
    } else if (key == "objadd") {
      expect_args(toks, 1, lineno);
      objadd = number(toks[1], lineno, opts.infBnd);
    } else {
      throw ParseError(fmt::format("unknown directive '{}'", toks[0].text), lineno, toks[0].column);
    }
  }

  const int last = std::max(lineno, 1);
  if (!vars_line) throw ParseError("no 'variables' line", last, 0);
  if (rows.empty()) throw ParseError("no functions defined", last, 0);
  if (!objective) throw ParseError("missing objective row: expected minimize, maximize or feasibility", last, 0);
  const std::size_t neF = rows.rbegin()->first;
  for (std::size_t i = 1; i <= neF; ++i) {
    if (!rows.count(i)) throw ParseError(fmt::format("row {} is not defined", i), last, 0);
  }
  if (objective->row > neF) {
    throw ParseError(fmt::format("missing objective row: F {} is not defined", objective->row),
                     objective->line, 0);
  }
  for (const auto& rb : rowbounds) {
    if (rb.row > neF) throw ParseError(fmt::format("rowbound for undefined row {}", rb.row), rb.line, 0);
  }

  ParsedProblem out;
  out.spec = default_spec(vars.size(), neF);
  ProblemSpec& spec = out.spec;
  spec.name = name;
  spec.obj_row = objective->row;
  spec.sense = objective->sense;
  spec.obj_add = objadd;
  spec.var_names = vars;
  for (const auto& [j, b] : bounds) {
    spec.xlow[j] = b.first;
    spec.xupp[j] = b.second;
  }
  for (const auto& rb : rowbounds) {
    spec.Flow[rb.row - 1] = rb.lo;
    spec.Fupp[rb.row - 1] = rb.hi;
  }
  for (const auto& [j, v] : starts) spec.x0[j] = v;

  std::vector<Expr> exprs;
  exprs.reserve(neF);
  for (auto& [i, e] : rows) exprs.push_back(e.first);
  out.funcs = FunctionSet(vars.size(), std::move(exprs));
  return out;
}

std::string render_problem_file(const ProblemSpec& spec, const FunctionSet& funcs) {
  if (!funcs.has_expressions()) throw Error("only expression-defined functions can be rendered");
  std::vector<std::string> names(spec.n);
  for (std::size_t j = 0; j < spec.n; ++j) names[j] = var_name(spec, j);

  std::string out = fmt::format("problem {}\nvariables", spec.name.empty() ? "jacopt" : spec.name);
  for (const auto& v : names) out += " " + v;
  out += "\n";
  if (spec.obj_row == 0) {
    out += "feasibility\n";
  } else {
    out += fmt::format("{} {}\n", spec.sense == Sense::Maximize ? "maximize" : "minimize", spec.obj_row);
  }
  if (spec.obj_add != 0.0) out += fmt::format("objadd {}\n", spec.obj_add);
  for (std::size_t i = 0; i < spec.neF; ++i) {
    out += fmt::format("F {} = {}\n", i + 1, to_string(funcs.rows()[i], names));
  }
  for (std::size_t j = 0; j < spec.n; ++j) {
    const std::string lo = bound_text(spec.xlow[j]);
    const std::string hi = bound_text(spec.xupp[j]);
    if (lo != "-inf" || hi != "inf") out += fmt::format("bound {} {} {}\n", names[j], lo, hi);
  }
  for (std::size_t i = 0; i < spec.neF; ++i) {
    const std::string lo = bound_text(spec.Flow[i]);
    const std::string hi = bound_text(spec.Fupp[i]);
    if (lo != "-inf" || hi != "inf") out += fmt::format("rowbound {} {} {}\n", i + 1, lo, hi);
  }
  for (std::size_t j = 0; j < spec.n; ++j) {
    if (spec.x0[j] != 0.0) out += fmt::format("start {} {}\n", names[j], spec.x0[j]);
  }
  return out;
}

SpecsResult parse_specs_file(std::string_view text, Options base) {
  enum class Field { InfBnd, FeasTol, OptTol, MajorIters, ProbeScale, Seed, FdStep };
  struct Key {
    std::vector<std::string> words;
    const char* canonical;
    Field field;
  };
  static const std::vector<Key> keys = {
      {{"infinite", "bound"}, "Infinite bound", Field::InfBnd},
      {{"feasibility", "tolerance"}, "Feasibility tolerance", Field::FeasTol},
      {{"optimality", "tolerance"}, "Optimality tolerance", Field::OptTol},
      {{"major", "iterations"}, "Major iterations", Field::MajorIters},
      {{"probe", "scale"}, "Probe scale", Field::ProbeScale},
      {{"random", "seed"}, "Random seed", Field::Seed},
      {{"difference", "interval"}, "Difference interval", Field::FdStep},
  };

  SpecsResult out;
  out.options = base;
  int lineno = 0;
  for (std::string_view raw : split_lines(text)) {
    ++lineno;
    const auto toks = tokenize(strip_comment(raw, "*#"));
    if (toks.empty()) continue;
    std::vector<std::string> words;
    for (const auto& t : toks) words.push_back(lower(t.text));
    if (words[0] == "begin" || words[0] == "end") continue;

    const Key* match = nullptr;
    for (const auto& k : keys) {
      if (words.size() >= k.words.size() && std::equal(k.words.begin(), k.words.end(), words.begin())) {
        match = &k;
        break;
      }
    }
    if (!match) {
      out.warnings.push_back(fmt::format("line {}: unknown keyphrase '{}' skipped", lineno, raw));
      continue;
    }
    std::size_t vi = match->words.size();
    if (match->field == Field::MajorIters && vi < words.size() && words[vi] == "limit") ++vi;
    if (vi >= toks.size()) throw ParseError(fmt::format("'{}' needs a value", match->canonical), lineno, 0);
    if (vi + 1 != toks.size()) {
      throw ParseError(fmt::format("unexpected text after '{}'", toks[vi].text), lineno, toks[vi + 1].column);
    }
    const Token& tok = toks[vi];
    const auto value = to_double(tok.text);
    if (!value) throw ParseError(fmt::format("'{}' is not a number", tok.text), lineno, tok.column);
    auto integral = [&](double lo, double hi) {
      if (*value != std::floor(*value) || *value < lo || *value > hi) {
        throw ParseError(fmt::format("'{}' must be an integer", tok.text), lineno, tok.column);
      }
      return *value;
    };
    Options& o = out.options;
    switch (match->field) {
      case Field::InfBnd: o.infBnd = *value; break;
      case Field::FeasTol: o.feasTol = *value; break;
      case Field::OptTol: o.optTol = *value; break;
      case Field::MajorIters: o.majorIterLimit = static_cast<int>(integral(0, 1.0e9)); break;
      case Field::ProbeScale: o.probeScale = *value; break;
      case Field::Seed: o.rngSeed = static_cast<std::uint64_t>(integral(0, 9.0e15)); break;
      case Field::FdStep: o.fdStep = *value; break;
    }
    out.applied.emplace_back(match->canonical);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("Error while opening file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(ExitStatus status) {
  switch (status) {
    case ExitStatus::Optimal:
    case ExitStatus::Feasible: return 0;
    case ExitStatus::Infeasible: return 3;
    case ExitStatus::IterLimit: return 4;
    case ExitStatus::UserAbort: return 5;
    case ExitStatus::EvalError: return 6;
    case ExitStatus::Stalled: return 7;
  }
  return 1;
}

void write_print_file(std::ostream& os, const PipelineResult& run) {
  const ProblemSpec& spec = run.spec;
  const StructurePattern& pat = run.pattern;

  fmt::print(os, "jacopt print file\n\n");
  fmt::print(os, "problem  {}\n", spec.report_name());
  fmt::print(os, "n={} neF={} ObjRow={} sense={}\n", spec.n, spec.neF, spec.obj_row,
             spec.feasibility_only() ? "feasibility"
                                     : (spec.sense == Sense::Maximize ? "maximize" : "minimize"));

  auto list = [](const std::vector<std::size_t>& v) {
    if (v.empty()) return std::string("none");
    std::string s;
    for (std::size_t k : v) s += fmt::format("{}{}", s.empty() ? "" : " ", k + 1);
    return s;
  };
  fmt::print(os, "\nstructure\n");
  fmt::print(os, "nnz={} constant={} nonlinear={} zero={}\n", pat.nnz(), pat.count(EntryKind::Constant),
             pat.count(EntryKind::Nonlinear), pat.count(EntryKind::Zero));
  fmt::print(os, "linear rows: {}\n", list(pat.linear_rows()));
  fmt::print(os, "nonlinear variables: {}\n", list(pat.nonlinear_vars()));

  const CheckReport& chk = run.check;
  fmt::print(os, "\nderivative check\n");
  fmt::print(os, "max relative error {:.3e} at ({},{})\n", chk.max_rel_error, chk.worst_row + 1,
             chk.worst_col + 1);
  for (const auto& m : chk.pattern_mismatches) {
    fmt::print(os, "reclassified ({},{}) {} -> {}\n", m.row + 1, m.col + 1, to_string(m.expected),
               to_string(m.assigned));
  }
  for (const auto& f : chk.failures) fmt::print(os, "failure {}\n", f);
  fmt::print(os, "result {}\n", chk.passed ? "passed" : "FAILED");

  fmt::print(os, "\niterations\n");
  if (!run.solution) {
    fmt::print(os, "not solved\n");
    return;
  }
  const Solution& sol = *run.solution;
  fmt::print(os, "{:>5} {:>16} {:>11} {:>11} {:>10} {:>9}\n", "major", "merit", "feasible", "optimal",
             "step", "penalty");
  for (const auto& r : sol.trace) {
    fmt::print(os, "{:>5} {:>16.8e} {:>11.2e} {:>11.2e} {:>10.3e} {:>9.2e}{}\n", r.iter, r.merit,
               r.feasibility, r.optimality, r.step, r.penalty, r.elastic ? " elastic" : "");
  }

  fmt::print(os, "\nsolution\n");
  fmt::print(os, "exit {} ({})\n", to_string(sol.exit), sol.message);
  fmt::print(os, "majors {} evaluations {}\n", sol.majors, sol.evals);
  if (!spec.feasibility_only()) fmt::print(os, "objective {:.10e}\n", sol.objective);
  fmt::print(os, "violation {:.3e}\n", sol.violation);
  fmt::print(os, "kkt {:.3e}\n", sol.kkt);
  fmt::print(os, "{:>4} {:<8} {:>18} {:>12} {:>12}\n", "j", "variable", "x", "lower", "upper");
  for (std::size_t j = 0; j < spec.n; ++j) {
    fmt::print(os, "{:>4} {:<8} {:>18.10e} {:>12} {:>12}\n", j + 1, var_name(spec, j).substr(0, 8),
               sol.x[j], bound_text(spec.xlow[j]), bound_text(spec.xupp[j]));
  }
  fmt::print(os, "{:>4} {:<8} {:>18} {:>12} {:>12} {:>14}\n", "i", "function", "F", "lower", "upper",
             "multiplier");
  for (std::size_t i = 0; i < spec.neF; ++i) {
    fmt::print(os, "{:>4} {:<8} {:>18.10e} {:>12} {:>12} {:>14.6e}\n", i + 1, fun_name(spec, i).substr(0, 8),
               sol.F[i], bound_text(spec.Flow[i]), bound_text(spec.Fupp[i]), sol.Fmul[i]);
  }
}

void write_summary(std::ostream& os, const PipelineResult& run) {
  const ProblemSpec& spec = run.spec;
  fmt::print(os, "jacopt  {}  n={} neF={}\n", spec.report_name(), spec.n, spec.neF);
  for (const auto& w : run.warnings) fmt::print(os, "warning: {}\n", w);
  fmt::print(os, "derivative check {} (max relative error {:.2e})\n", run.check.passed ? "passed" : "FAILED",
             run.check.max_rel_error);
  for (const auto& f : run.check.failures) fmt::print(os, "  {}\n", f);
  if (!run.solution) return;
  const Solution& sol = *run.solution;
  fmt::print(os, "exit {} after {} majors, {} evaluations\n", to_string(sol.exit), sol.majors, sol.evals);
  if (!spec.feasibility_only()) fmt::print(os, "final objective {:.10e}\n", sol.objective);
  fmt::print(os, "final violation {:.3e}\n", sol.violation);
}

}  // namespace jacopt
