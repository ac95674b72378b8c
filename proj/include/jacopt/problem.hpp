#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jacopt {

enum class Sense { Minimize, Maximize };

/// Solver and pipeline options. Field defaults are the documented defaults.
struct Options {
  double infBnd = 1.0e20;        // bounds with magnitude >= infBnd are absent
  double feasTol = 1.0e-6;
  double optTol = 1.0e-6;
  int majorIterLimit = 200;
  double fdStep = 1.0e-6;        // relative central-difference interval
  double checkTol = 1.0e-5;      // derivative check tolerance (relative)
  double probeScale = 0.5;       // relative probe perturbation magnitude
  std::uint64_t rngSeed = 20020101;
  int retryBudget = 10;          // step halvings allowed after mode = -1
};

/// The problem statement
///
///     minimize (or maximize) F[ObjRow](x)
///     subject to xlow <= x <= xupp,  Flow <= F(x) <= Fupp.
///
/// `obj_row` is 1-based; 0 selects a feasibility problem. All other indices
/// in the library are 0-based.
struct ProblemSpec {
  std::string name;
  std::size_t n = 0;
  std::size_t neF = 0;
  std::size_t obj_row = 1;
  double obj_add = 0.0;
  Sense sense = Sense::Minimize;
  std::vector<double> x0;
  std::vector<double> xlow, xupp;
  std::vector<double> Flow, Fupp;
  std::vector<int> xstate;
  std::vector<double> Fmul0;
  std::vector<std::string> var_names;
  std::vector<std::string> fun_names;

  bool feasibility_only() const { return obj_row == 0; }
  /// 0-based objective index, or nullopt when obj_row == 0.
  std::optional<std::size_t> objective_index() const {
    if (obj_row == 0) return std::nullopt;
    return obj_row - 1;
  }
  /// Name as it appears in reports: first eight characters.
  std::string report_name() const { return name.substr(0, 8); }
};

enum class BoundKind { Free, LowerOnly, UpperOnly, Range, Fixed };

const char* to_string(BoundKind kind);

/// Defaults for an n-variable, neF-function problem. Throws DimensionError
/// when either dimension is zero.
ProblemSpec default_spec(std::size_t n, std::size_t neF, const std::string& program_name = "jacopt");

/// Throws BoundError when both bounds are finite and lo > hi.
BoundKind classify_bound(double lo, double hi, double infBnd);

/// Objective value as minimized by the solver: +F[ObjRow] for minimize,
/// -F[ObjRow] for maximize, 0 for a feasibility problem. ObjAdd is never
/// part of this value.
double effective_objective(std::span<const double> F, const ProblemSpec& spec);

/// Objective as printed: un-flipped F[ObjRow] + ObjAdd (ObjAdd alone when
/// there is no objective row).
double reported_objective(std::span<const double> F, const ProblemSpec& spec);

struct ValidationIssue {
  std::string field;
  std::size_t index;  // element index, 0 for scalar fields
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

ValidationReport validate_spec(const ProblemSpec& spec, const Options& opts);

/// Canonical form used by every downstream module: bounds at or beyond
/// infBnd become +-infinity and the objective row is made free. Throws
/// BoundError listing the issues when the result does not validate.
ProblemSpec finalize_spec(ProblemSpec spec, const Options& opts);

bool options_valid(const Options& opts, std::string* why = nullptr);

}  // namespace jacopt
