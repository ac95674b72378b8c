#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jacopt/assembler.hpp"
#include "jacopt/problem.hpp"

namespace jacopt {

enum class ExitStatus {
  Optimal,
  Feasible,    // feasibility problem solved (ObjRow = 0)
  Infeasible,
  IterLimit,
  UserAbort,
  EvalError,
  Stalled,     // no descent possible before the tolerances were met
};

const char* to_string(ExitStatus status);

/// Evaluation handshake. Called once before every evaluation of F with
///   status = 1 on the very first call, 0 on ordinary calls, 2 on the final
///   call after termination;
/// returns mode: 0 to proceed, -1 to ask for a different point, < -1 to
/// abort the solve.
using EvalMonitor = std::function<int(int status, std::span<const double> x)>;

/// Major-iteration log record.
struct IterationRecord {
  int iter = 0;
  double merit = 0.0;         // merit at the new iterate, penalty of this iteration
  double merit_before = 0.0;  // merit at the old iterate, same penalty
  double penalty = 0.0;
  double feasibility = 0.0;   // max constraint violation at the new iterate
  double optimality = 0.0;    // KKT residual at the old iterate
  double step = 0.0;          // accepted step length
  bool elastic = false;       // subproblem needed elastic slacks
  std::vector<double> x;      // new iterate
};

struct IterateState {
  std::vector<double> x;
  std::vector<double> F;
  SparseJacobian J;
  std::vector<double> multipliers;  // per F row; objective row is 0
  double penalty = 1.0;
  int major_iter = 0;
};

struct Solution {
  ExitStatus exit = ExitStatus::Stalled;
  std::vector<double> x;
  std::vector<double> F;
  /// Multipliers of the minimized problem (sign-flipped objective when
  /// maximizing): positive at an active lower bound, negative at an upper.
  std::vector<double> Fmul;
  double objective = 0.0;  // F[ObjRow] + ObjAdd, un-flipped
  double violation = 0.0;
  double kkt = 0.0;
  int majors = 0;
  int evals = 0;   // evaluations before the final Status >= 2 call
  std::string message;
  std::vector<IterationRecord> trace;
};

/// Maximum violation of the general (non-objective) rows and the bounds.
double constraint_violation(const ProblemSpec& spec, std::span<const double> x,
                            std::span<const double> F);

/// max(stationarity, complementarity, feasibility) for the minimized
/// problem. Bound multipliers are recovered by projecting the reduced
/// gradient onto the sign each finite bound allows.
double kkt_residual(const ProblemSpec& spec, const IterateState& state);

/// Affine rows a_i'x + c_i with their bounds, taken from the constant cache.
struct LinearConstraints {
  std::vector<std::size_t> rows;
  Eigen::MatrixXd A;     // rows.size() x n
  Eigen::VectorXd c;     // affine offsets
  Eigen::VectorXd lo, hi;
};

/// Collects the linear general rows (not the objective, not free rows) and
/// recovers c_i = F_i(x) - a_i'x from a point where F is known.
LinearConstraints linear_constraints(const ProblemSpec& spec, const StructurePattern& pattern,
                                     const ConstantCache& cache, std::span<const double> x,
                                     std::span<const double> F);

/// Returns the state with x replaced by its closest point (Euclidean) that
/// satisfies the linear rows and the bounds; F, J are left for the caller to
/// refresh. nullopt when that set is empty. Identity when there are no
/// linear rows and x is within its bounds.
std::optional<IterateState> maintain_linear_feasibility(const ProblemSpec& spec,
                                                        const IterateState& state,
                                                        const StructurePattern& pattern,
                                                        const ConstantCache& cache);

enum class EvalMode { Ok, UserAbort, EvalError };

struct ProtocolResult {
  EvalMode mode = EvalMode::Ok;
  std::vector<double> x;  // point actually evaluated
  Assembly assembly;
  int calls = 0;          // evaluations made, retries included
  int halvings = 0;
};

/// Evaluates at x_trial. When the monitor answers -1 or the functions
/// fault, the step from x_prev is halved and retried, at most retry_budget
/// times; without x_prev no retry is possible. Only the first call uses
/// `status`, retries use status 0.
ProtocolResult evaluate_with_protocol(const JacobianAssembler& jac, const std::vector<double>* x_prev,
                                      std::vector<double> x_trial, int status, int retry_budget,
                                      const EvalMonitor& monitor, SweepCounter* counter = nullptr);

struct SolveHooks {
  EvalMonitor monitor;
  SweepCounter* counter = nullptr;
};

/// SQP with a damped-BFGS Hessian, dense Goldfarb-Idnani subproblems
/// (elastic when the linearization is inconsistent), l1 merit line search
/// with a second-order correction, and a projection onto the linear rows
/// before the first major iteration. `spec` must be finalized.
Solution solve(const ProblemSpec& spec, const JacobianAssembler& jac, const Options& opts,
               const SolveHooks& hooks = {});

}  // namespace jacopt
