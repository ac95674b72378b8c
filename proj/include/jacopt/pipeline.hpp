#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jacopt/check.hpp"
#include "jacopt/function_set.hpp"
#include "jacopt/problem.hpp"
#include "jacopt/solver.hpp"
#include "jacopt/structure.hpp"

namespace jacopt {

struct PipelineResult {
  ProblemSpec spec;            // finalized
  StructurePattern probed;     // as classified by the probes
  StructurePattern pattern;    // after repairs at x0
  CheckReport check;
  std::optional<Solution> solution;  // empty for check-only runs or failed checks
  std::vector<std::string> warnings;
};

/// finalize -> probe -> cache -> verify (repair) -> solve.
/// The solve is skipped when `check_only` is set or the check fails.
PipelineResult run_pipeline(const ProblemSpec& spec, const FunctionSet& funcs, const Options& opts,
                            const SolveHooks& hooks = {}, bool check_only = false);

}  // namespace jacopt
