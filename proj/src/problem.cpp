#include "jacopt/problem.hpp"

#include <cmath>
#include <limits>

#include "jacopt/error.hpp"

namespace jacopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double canonical(double b, double infBnd) {
  if (b >= infBnd) return kInf;
  if (b <= -infBnd) return -kInf;
  return b;
}

void check_length(ValidationReport& report, const char* field, std::size_t have, std::size_t want) {
  if (have != want) {
    report.push_back({field, 0,
                      "length " + std::to_string(have) + " does not match " + std::to_string(want)});
  }
}

}  // namespace

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::Free: return "free";
    case BoundKind::LowerOnly: return "lower";
    case BoundKind::UpperOnly: return "upper";
    case BoundKind::Range: return "range";
    case BoundKind::Fixed: return "fixed";
  }
  return "?";
}

ProblemSpec default_spec(std::size_t n, std::size_t neF, const std::string& program_name) {
  if (n == 0 || neF == 0) {
    throw DimensionError("problem needs at least one variable and one function (n=" +
                         std::to_string(n) + ", neF=" + std::to_string(neF) + ")");
  }
  ProblemSpec spec;
  spec.name = program_name.substr(0, 8);
  spec.n = n;
  spec.neF = neF;
  spec.obj_row = 1;
  spec.obj_add = 0.0;
  spec.sense = Sense::Minimize;
  spec.x0.assign(n, 0.0);
  spec.xlow.assign(n, -kInf);
  spec.xupp.assign(n, kInf);
  spec.Flow.assign(neF, -kInf);
  spec.Fupp.assign(neF, kInf);
  spec.xstate.assign(n, 0);
  spec.Fmul0.assign(neF, 0.0);
  return spec;
}

BoundKind classify_bound(double lo, double hi, double infBnd) {
  const double l = canonical(lo, infBnd);
  const double u = canonical(hi, infBnd);
  if (l > u) {
    throw BoundError("inconsistent bounds: lower " + std::to_string(lo) + " > upper " +
                     std::to_string(hi));
  }
  const bool has_lo = std::isfinite(l);
  const bool has_hi = std::isfinite(u);
  if (!has_lo && !has_hi) return BoundKind::Free;
  if (l == u) return BoundKind::Fixed;
  if (has_lo && has_hi) return BoundKind::Range;
  return has_lo ? BoundKind::LowerOnly : BoundKind::UpperOnly;
}

double effective_objective(std::span<const double> F, const ProblemSpec& spec) {
  const auto obj = spec.objective_index();
  if (!obj) return 0.0;
  const double f = F[*obj];
  return spec.sense == Sense::Maximize ? -f : f;
}

double reported_objective(std::span<const double> F, const ProblemSpec& spec) {
  const auto obj = spec.objective_index();
  return (obj ? F[*obj] : 0.0) + spec.obj_add;
}

bool options_valid(const Options& opts, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (!(opts.infBnd > 0)) return fail("Infinite bound must be positive");
  if (!(opts.feasTol > 0)) return fail("Feasibility tolerance must be positive");
  if (!(opts.optTol > 0)) return fail("Optimality tolerance must be positive");
  if (!(opts.fdStep > 0)) return fail("Difference interval must be positive");
  if (!(opts.checkTol > 0)) return fail("Derivative check tolerance must be positive");
  if (!(opts.probeScale > 0)) return fail("Probe scale must be positive");
  if (opts.majorIterLimit < 0) return fail("Major iterations must be nonnegative");
  if (opts.retryBudget < 0) return fail("Retry budget must be nonnegative");
  return true;
}

ValidationReport validate_spec(const ProblemSpec& spec, const Options& opts) {
  ValidationReport report;
  std::string why;
  if (!options_valid(opts, &why)) report.push_back({"options", 0, why});
  if (spec.n == 0) report.push_back({"n", 0, "must be at least 1"});
  if (spec.neF == 0) report.push_back({"neF", 0, "must be at least 1"});
  if (spec.obj_row > spec.neF) {
    report.push_back({"ObjRow", 0,
                      "must lie in 0.." + std::to_string(spec.neF) + ", got " +
                          std::to_string(spec.obj_row)});
  }
  check_length(report, "x", spec.x0.size(), spec.n);
  check_length(report, "xlow", spec.xlow.size(), spec.n);
  check_length(report, "xupp", spec.xupp.size(), spec.n);
  check_length(report, "xstate", spec.xstate.size(), spec.n);
  check_length(report, "Flow", spec.Flow.size(), spec.neF);
  check_length(report, "Fupp", spec.Fupp.size(), spec.neF);
  check_length(report, "Fmul", spec.Fmul0.size(), spec.neF);
  if (!report.empty()) return report;

  for (std::size_t j = 0; j < spec.n; ++j) {
    if (canonical(spec.xlow[j], opts.infBnd) > canonical(spec.xupp[j], opts.infBnd)) {
      report.push_back({"xlow", j, "lower bound exceeds upper bound"});
    }
    if (!std::isfinite(spec.x0[j])) report.push_back({"x", j, "start point is not finite"});
    const int s = spec.xstate[j];
    if (s != 0 && s != 4 && s != 5) {
      report.push_back({"xstate", j, "unsupported value " + std::to_string(s) + " (use 0, 4 or 5)"});
    }
  }
  for (std::size_t i = 0; i < spec.neF; ++i) {
    if (i + 1 == spec.obj_row) continue;  // objective row bounds are ignored
    if (canonical(spec.Flow[i], opts.infBnd) > canonical(spec.Fupp[i], opts.infBnd)) {
      report.push_back({"Flow", i, "lower bound exceeds upper bound"});
    }
  }
  return report;
}

ProblemSpec finalize_spec(ProblemSpec spec, const Options& opts) {
  const ValidationReport report = validate_spec(spec, opts);
  if (!report.empty()) {
    std::string msg = "invalid problem:";
    for (const auto& issue : report) {
      msg += " " + issue.field + "[" + std::to_string(issue.index + 1) + "] " + issue.message + ";";
    }
    throw BoundError(msg);
  }
  for (auto* v : {&spec.xlow, &spec.xupp, &spec.Flow, &spec.Fupp}) {
    for (double& b : *v) b = canonical(b, opts.infBnd);
  }
  if (auto obj = spec.objective_index()) {
    spec.Flow[*obj] = -kInf;
    spec.Fupp[*obj] = kInf;
    spec.Fmul0[*obj] = 0.0;
  }
  return spec;
}

}  // namespace jacopt
