#include "jacopt/pipeline.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "jacopt/assembler.hpp"
#include "jacopt/error.hpp"

namespace jacopt {

PipelineResult run_pipeline(const ProblemSpec& spec, const FunctionSet& funcs, const Options& opts,
                            const SolveHooks& hooks, bool check_only) {
  std::string why;
  if (!options_valid(opts, &why)) throw Error("invalid options: " + why);
  if (spec.n != funcs.n() || spec.neF != funcs.neF()) {
    throw DimensionError(fmt::format("problem has n={}, neF={} but the functions have n={}, neF={}",
                                     spec.n, spec.neF, funcs.n(), funcs.neF()));
  }

  PipelineResult out;
  out.spec = finalize_spec(spec, opts);
  if (funcs.has_expressions() &&
      std::any_of(funcs.rows().begin(), funcs.rows().end(), [](const Expr& e) { return uses_abs(e); })) {
    out.warnings.push_back("abs() is not differentiable at 0; results near a kink may be unreliable");
  }

  out.probed = probe_structure(funcs, out.spec.x0, opts);
  out.pattern = out.probed;
  const ConstantCache cache = init_cache(out.pattern);
  out.check = verify_at_start(funcs, out.spec.x0, out.pattern, opts, &cache);
  for (const auto& m : out.check.pattern_mismatches) {
    out.warnings.push_back(fmt::format("entry ({},{}) reclassified {} -> {}: {}", m.row + 1, m.col + 1,
                                       to_string(m.expected), to_string(m.assigned), m.note));
  }
  if (out.check.nonsmooth) out.warnings.push_back("start point lies at an abs() kink");
  if (check_only || !out.check.passed) return out;

  // seed and cache are rebuilt from the repaired pattern
  const JacobianAssembler jac(funcs, out.pattern);
  out.solution = solve(out.spec, jac, opts, hooks);
  return out;
}

}  // namespace jacopt
