#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jacopt/assembler.hpp"
#include "jacopt/function_set.hpp"
#include "jacopt/problem.hpp"
#include "jacopt/structure.hpp"

namespace jacopt {

/// Central differences (F(x+h e_j) - F(x-h e_j)) / 2h, one column per j.
/// Throws CheckError naming the column if an evaluation faults.
Eigen::MatrixXd fd_jacobian(const FunctionSet& funcs, std::span<const double> x0, double h);
Eigen::MatrixXd fd_jacobian(const FunctionSet& funcs, std::span<const double> x0,
                            std::span<const double> steps);

struct PatternMismatch {
  std::size_t row = 0;
  std::size_t col = 0;
  EntryKind expected = EntryKind::Zero;  // class before verification
  EntryKind assigned = EntryKind::Zero;  // class after verification
  double ad_value = 0.0;                 // derivative at x0
  double fd_value = 0.0;
  std::string note;
};

struct CheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  /// Entries whose class was repaired at x0. Repairs are not failures.
  std::vector<PatternMismatch> pattern_mismatches;
  /// Unrepairable disagreements (AD against differences, corrupt cache).
  std::vector<std::string> failures;
  bool nonsmooth = false;  // an abs() argument sits within feasTol of its kink
  bool passed = false;
};

/// Third-point validation at x0. Compares the assembled Jacobian with
/// central differences (step opts.fdStep * max(1,|x0_j|)):
///  - Zero entries must have |FD| <= checkTol and a zero derivative,
///    otherwise they are reclassified Nonlinear;
///  - Constant entries whose value no longer matches the derivative at x0
///    are reclassified Nonlinear; a cached value that disagrees with the
///    pattern is a failure;
///  - every structural nonzero must agree with FD to checkTol relative to
///    max(1,|J_ij|), otherwise the check fails.
/// `pattern` is updated in place. When `cache` is null it is rebuilt from
/// the pattern.
CheckReport verify_at_start(const FunctionSet& funcs, std::span<const double> x0,
                            StructurePattern& pattern, const Options& opts,
                            const ConstantCache* cache = nullptr);

}  // namespace jacopt
