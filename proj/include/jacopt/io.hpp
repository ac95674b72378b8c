#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "jacopt/function_set.hpp"
#include "jacopt/pipeline.hpp"
#include "jacopt/problem.hpp"
#include "jacopt/solver.hpp"

namespace jacopt {

struct ParsedProblem {
  ProblemSpec spec;
  FunctionSet funcs;
};

/// Line-oriented problem format:
///
///     problem NAME
///     variables x1 x2 ...
///     minimize ROW | maximize ROW | feasibility
///     F i = EXPR
///     bound VAR lo hi
///     rowbound i lo hi
///     start VAR value
///     objadd VALUE
///
/// `#` starts a comment; `inf`, `+inf` and `-inf` become +-opts.infBnd.
/// Throws ParseError with the offending line.
ParsedProblem parse_problem_file(std::string_view text, const Options& opts = {});

/// Text that parse_problem_file maps back to an equivalent spec.
std::string render_problem_file(const ProblemSpec& spec, const FunctionSet& funcs);

struct SpecsResult {
  Options options;
  std::vector<std::string> applied;   // canonical keyphrase per applied line
  std::vector<std::string> warnings;  // skipped lines
};

/// `KEYPHRASE value` lines, keyphrases case-insensitive. Unknown lines are
/// skipped with a warning; a value that is not a number is a ParseError.
SpecsResult parse_specs_file(std::string_view text, Options base = {});

/// Throws IoError("Error while opening file <path>").
std::string read_text_file(const std::string& path);

/// Process exit code for a finished solve.
int exit_code(ExitStatus status);

inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 8;

void write_print_file(std::ostream& os, const PipelineResult& run);
void write_summary(std::ostream& os, const PipelineResult& run);

}  // namespace jacopt
