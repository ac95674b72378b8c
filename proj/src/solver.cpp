#include "jacopt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "jacopt/error.hpp"
#include "jacopt/qp.hpp"

namespace jacopt {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

Index ix(std::size_t i) { return static_cast<Index>(i); }

double row_violation(double lo, double hi, double v) { return std::max({lo - v, v - hi, 0.0}); }

VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void clip_to_bounds(const ProblemSpec& spec, std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], spec.xlow[j], spec.xupp[j]);
}

bool is_constraint_row(const ProblemSpec& spec, std::size_t i) {
  if (i + 1 == spec.obj_row) return false;
  return std::isfinite(spec.Flow[i]) || std::isfinite(spec.Fupp[i]);
}

}  // namespace

const char* to_string(ExitStatus status) {
  switch (status) {
    case ExitStatus::Optimal: return "optimal";
    case ExitStatus::Feasible: return "feasible";
    case ExitStatus::Infeasible: return "infeasible";
    case ExitStatus::IterLimit: return "iteration limit";
    case ExitStatus::UserAbort: return "user abort";
    case ExitStatus::EvalError: return "evaluation error";
    case ExitStatus::Stalled: return "stalled";
  }
  return "?";
}

double constraint_violation(const ProblemSpec& spec, std::span<const double> x,
                            std::span<const double> F) {
  double viol = 0.0;
  for (std::size_t i = 0; i < spec.neF; ++i) {
    if (i + 1 == spec.obj_row) continue;
    viol = std::max(viol, row_violation(spec.Flow[i], spec.Fupp[i], F[i]));
  }
  for (std::size_t j = 0; j < spec.n; ++j) {
    viol = std::max(viol, row_violation(spec.xlow[j], spec.xupp[j], x[j]));
  }
  return viol;
}

double kkt_residual(const ProblemSpec& spec, const IterateState& state) {
  const std::size_t n = spec.n;
  const double sigma = spec.sense == Sense::Maximize ? -1.0 : 1.0;
  const auto obj = spec.objective_index();

  // r = grad f - J' lambda
  std::vector<double> r(n, 0.0);
  for (const auto& t : state.J.entries) {
    if (obj && t.row == *obj) {
      r[t.col] += sigma * t.value;
    } else {
      r[t.col] -= t.value * state.multipliers[t.row];
    }
  }

  double stationarity = 0.0;
  double complementarity = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = spec.xlow[j];
    const double hi = spec.xupp[j];
    double mu = 0.0;
    if (r[j] > 0.0 && std::isfinite(lo)) mu = r[j];
    if (r[j] < 0.0 && std::isfinite(hi)) mu = r[j];
    stationarity = std::max(stationarity, std::fabs(r[j] - mu));
    if (mu > 0.0) complementarity = std::max(complementarity, std::min(std::fabs(state.x[j] - lo), mu));
    if (mu < 0.0) complementarity = std::max(complementarity, std::min(std::fabs(hi - state.x[j]), -mu));
  }
  for (std::size_t i = 0; i < spec.neF; ++i) {
    if (obj && i == *obj) continue;
    const double lam = state.multipliers[i];
    if (lam == 0.0) continue;
    const double slack = lam > 0.0 ? state.F[i] - spec.Flow[i] : spec.Fupp[i] - state.F[i];
    complementarity = std::max(complementarity, std::min(std::fabs(slack), std::fabs(lam)));
  }
  const double feasibility = constraint_violation(spec, state.x, state.F);
  return std::max({stationarity, complementarity, feasibility});
}

LinearConstraints linear_constraints(const ProblemSpec& spec, const StructurePattern& pattern,
                                     const ConstantCache& cache, std::span<const double> x,
                                     std::span<const double> F) {
  LinearConstraints lin;
  std::vector<Index> slot(spec.neF, -1);
  for (std::size_t i : pattern.linear_rows()) {
    if (!is_constraint_row(spec, i)) continue;
    slot[i] = static_cast<Index>(lin.rows.size());
    lin.rows.push_back(i);
  }
  const auto m = static_cast<Index>(lin.rows.size());
  lin.A = MatrixXd::Zero(m, ix(spec.n));
  for (const auto& t : cache.entries) {
    if (slot[t.row] >= 0) lin.A(slot[t.row], ix(t.col)) = t.value;
  }
  lin.c.resize(m);
  lin.lo.resize(m);
  lin.hi.resize(m);
  const VectorXd xv = to_eigen(x);
  for (Index k = 0; k < m; ++k) {
    const std::size_t i = lin.rows[static_cast<std::size_t>(k)];
    lin.c(k) = F[i] - lin.A.row(k).dot(xv);
    lin.lo(k) = spec.Flow[i];
    lin.hi(k) = spec.Fupp[i];
  }
  return lin;
}

std::optional<IterateState> maintain_linear_feasibility(const ProblemSpec& spec,
                                                        const IterateState& state,
                                                        const StructurePattern& pattern,
                                                        const ConstantCache& cache) {
  IterateState out = state;
  clip_to_bounds(spec, out.x);
  const LinearConstraints lin = linear_constraints(spec, pattern, cache, state.x, state.F);
  if (lin.rows.empty()) return out;

  const VectorXd x = to_eigen(out.x);
  const VectorXd ax = lin.A * x + lin.c;
  double viol = 0.0;
  for (Index k = 0; k < ax.size(); ++k) viol = std::max(viol, row_violation(lin.lo(k), lin.hi(k), ax(k)));
  if (viol == 0.0) return out;

  // minimize 0.5|d|^2 over the linear rows and the bounds
  const Index n = ix(spec.n);
  std::vector<Index> bounded;
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(spec.xlow[static_cast<std::size_t>(j)]) || std::isfinite(spec.xupp[static_cast<std::size_t>(j)])) {
      bounded.push_back(j);
    }
  }
  const Index m = lin.A.rows() + static_cast<Index>(bounded.size());
  QpProblem qp;
  qp.G = MatrixXd::Identity(n, n);
  qp.c = VectorXd::Zero(n);
  qp.A = MatrixXd::Zero(m, n);
  qp.lo.resize(m);
  qp.hi.resize(m);
  qp.A.topRows(lin.A.rows()) = lin.A;
  qp.lo.head(lin.A.rows()) = lin.lo - ax;
  qp.hi.head(lin.A.rows()) = lin.hi - ax;
  for (std::size_t b = 0; b < bounded.size(); ++b) {
    const Index row = lin.A.rows() + static_cast<Index>(b);
    const auto j = static_cast<std::size_t>(bounded[b]);
    qp.A(row, bounded[b]) = 1.0;
    qp.lo(row) = spec.xlow[j] - x(bounded[b]);
    qp.hi(row) = spec.xupp[j] - x(bounded[b]);
  }
  const QpResult res = solve_qp(qp);
  if (res.status != QpStatus::Optimal) return std::nullopt;
  out.x = to_std(x + res.z);
  clip_to_bounds(spec, out.x);
  return out;
}

ProtocolResult evaluate_with_protocol(const JacobianAssembler& jac, const std::vector<double>* x_prev,
                                      std::vector<double> x_trial, int status, int retry_budget,
                                      const EvalMonitor& monitor, SweepCounter* counter) {
  ProtocolResult out;
  for (;;) {
    ++out.calls;
    int mode = monitor ? monitor(status, x_trial) : 0;
    if (mode < -1) {
      out.mode = EvalMode::UserAbort;
      out.x = std::move(x_trial);
      return out;
    }
    if (mode == 0) {
      try {
        out.assembly = jac(x_trial, counter);
        out.mode = EvalMode::Ok;
        out.x = std::move(x_trial);
        return out;
      } catch (const EvalFault&) {
        mode = -1;
      }
    }
    if (!x_prev || out.halvings >= retry_budget) {
      out.mode = EvalMode::EvalError;
      out.x = std::move(x_trial);
      return out;
    }
    for (std::size_t j = 0; j < x_trial.size(); ++j) {
      x_trial[j] = (*x_prev)[j] + 0.5 * (x_trial[j] - (*x_prev)[j]);
    }
    ++out.halvings;
    status = 0;
  }
}

namespace {

struct Subproblem {
  bool ok = false;
  bool elastic = false;
  VectorXd d;
  std::vector<double> lambda;  // per F row
  double slack_sum = 0.0;
};

class SqpSolver {
 public:
  SqpSolver(const ProblemSpec& spec, const JacobianAssembler& jac, const Options& opts,
            const SolveHooks& hooks)
      : spec_(spec), jac_(jac), opts_(opts), hooks_(hooks), n_(spec.n) {
    sigma_ = spec.sense == Sense::Maximize ? -1.0 : 1.0;
    obj_ = spec.objective_index();
    const auto& linear = jac.pattern().linear_rows();
    for (std::size_t i = 0; i < spec.neF; ++i) {
      if (!is_constraint_row(spec, i)) continue;
      cons_.push_back(i);
      const bool lin = std::binary_search(linear.begin(), linear.end(), i);
      cons_linear_.push_back(lin);
      if (!lin) ++nonlinear_count_;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isfinite(spec.xlow[j]) || std::isfinite(spec.xupp[j])) bounded_.push_back(j);
    }
  }

  Solution run();

 private:
  double merit(std::span<const double> F, double rho) const {
    double value = obj_ ? sigma_ * F[*obj_] : 0.0;
    for (std::size_t i : cons_) value += rho * row_violation(spec_.Flow[i], spec_.Fupp[i], F[i]);
    return value;
  }

  double general_violation(std::span<const double> F) const {
    double v = 0.0;
    for (std::size_t i : cons_) v += row_violation(spec_.Flow[i], spec_.Fupp[i], F[i]);
    return v;
  }

  VectorXd objective_gradient(const MatrixXd& J) const {
    if (!obj_) return VectorXd::Zero(ix(n_));
    return sigma_ * J.row(ix(*obj_)).transpose();
  }

  VectorXd lagrangian_gradient(const MatrixXd& J, const std::vector<double>& lambda) const {
    VectorXd g = objective_gradient(J);
    for (std::size_t i : cons_) g -= lambda[i] * J.row(ix(i)).transpose();
    return g;
  }

  /// Rows and bounds held at one of their bounds (NaN: not held).
  struct Pins {
    std::vector<double> row;
    std::vector<double> var;
  };

  Subproblem subproblem(const MatrixXd& B, const VectorXd& g, const MatrixXd& J,
                        const std::vector<double>& base, const std::vector<double>& x, double rho,
                        bool allow_elastic, const Pins* pins = nullptr) const;

  ProtocolResult evaluate(const std::vector<double>* prev, std::vector<double> x, int status) {
    ProtocolResult r = evaluate_with_protocol(jac_, prev, std::move(x), status, opts_.retryBudget,
                                              hooks_.monitor, hooks_.counter);
    evals_ += r.calls;
    return r;
  }

  Solution finish(ExitStatus exit, std::string message);

  /// True when no step within a unit box reduces the linearized l1
  /// violation by more than a small fraction: x is then (nearly) a
  /// stationary point of the violation and the problem locally infeasible.
  bool violation_stationary(const MatrixXd& J) const;

  Solution stalled(const MatrixXd& J, double viol, std::string message) {
    if (viol > opts_.feasTol && violation_stationary(J)) {
      return finish(ExitStatus::Infeasible, "constraints appear locally infeasible");
    }
    return finish(ExitStatus::Stalled, std::move(message));
  }

  enum class Curvature { None, Escaped, Aborted, Failed };
  Curvature second_order_step(const std::vector<double>& lambda, double rho, double kkt);
  static constexpr int kMaxEscapes = 5;
  static constexpr double kMaxPenalty = 1.0e8;
  int escapes_ = 0;

  const ProblemSpec& spec_;
  const JacobianAssembler& jac_;
  const Options& opts_;
  const SolveHooks& hooks_;
  std::size_t n_;
  double sigma_ = 1.0;
  std::optional<std::size_t> obj_;
  std::vector<std::size_t> cons_;
  std::vector<bool> cons_linear_;
  std::size_t nonlinear_count_ = 0;
  std::vector<std::size_t> bounded_;

  IterateState state_;
  std::vector<IterationRecord> trace_;
  int evals_ = 0;
  double kkt_ = kInf;
};

bool SqpSolver::violation_stationary(const MatrixXd& J) const {
  const Index n = ix(n_);
  const Index nc = ix(cons_.size());
  const Index nz = n + 2 * nc;
  QpProblem qp;
  qp.G = MatrixXd::Identity(nz, nz) * 1.0e-8;
  qp.c = VectorXd::Zero(nz);
  qp.c.tail(2 * nc).setOnes();
  qp.A = MatrixXd::Zero(nc + n + 2 * nc, nz);
  qp.lo.resize(qp.A.rows());
  qp.hi.resize(qp.A.rows());
  for (Index k = 0; k < nc; ++k) {
    const std::size_t i = cons_[static_cast<std::size_t>(k)];
    qp.A.row(k).head(n) = J.row(ix(i));
    qp.A(k, n + k) = 1.0;
    qp.A(k, n + nc + k) = -1.0;
    qp.lo(k) = spec_.Flow[i] - state_.F[i];
    qp.hi(k) = spec_.Fupp[i] - state_.F[i];
  }
  for (Index j = 0; j < n; ++j) {
    const std::size_t u = static_cast<std::size_t>(j);
    const double radius = std::max(1.0, std::fabs(state_.x[u]));
    qp.A(nc + j, j) = 1.0;
    qp.lo(nc + j) = std::max(-radius, spec_.xlow[u] - state_.x[u]);
    qp.hi(nc + j) = std::min(radius, spec_.xupp[u] - state_.x[u]);
  }
  for (Index s = 0; s < 2 * nc; ++s) {
    qp.A(nc + n + s, n + s) = 1.0;
    qp.lo(nc + n + s) = 0.0;
    qp.hi(nc + n + s) = kInf;
  }
  const QpResult r = solve_qp(qp);
  if (r.status != QpStatus::Optimal) return false;
  const double now = general_violation(state_.F);
  return now - r.z.tail(2 * nc).sum() <= 1.0e-6 * std::max(1.0, now);
}

Subproblem SqpSolver::subproblem(const MatrixXd& B, const VectorXd& g, const MatrixXd& J,
                                 const std::vector<double>& base, const std::vector<double>& x,
                                 double rho, bool allow_elastic, const Pins* pins) const {
  const Index n = ix(n_);
  const Index nc = ix(cons_.size());
  const Index nb = ix(bounded_.size());

  auto build = [&](bool elastic) {
    const Index q = elastic ? ix(nonlinear_count_) : 0;
    const Index nz = n + 2 * q;
    QpProblem qp;
    qp.G = MatrixXd::Zero(nz, nz);
    qp.G.topLeftCorner(n, n) = B;
    qp.c = VectorXd::Zero(nz);
    qp.c.head(n) = g;
    const Index m = nc + nb + 2 * q;
    qp.A = MatrixXd::Zero(m, nz);
    qp.lo.resize(m);
    qp.hi.resize(m);
    Index slack = 0;
    for (Index k = 0; k < nc; ++k) {
      const std::size_t i = cons_[static_cast<std::size_t>(k)];
      qp.A.row(k).head(n) = J.row(ix(i));
      qp.lo(k) = spec_.Flow[i] - base[i];
      qp.hi(k) = spec_.Fupp[i] - base[i];
      if (pins && !std::isnan(pins->row[i])) qp.lo(k) = qp.hi(k) = pins->row[i] - base[i];
      if (elastic && !cons_linear_[static_cast<std::size_t>(k)]) {
        // lo <= J_i d + v - w <= hi, v, w >= 0
        qp.A(k, n + slack) = 1.0;
        qp.A(k, n + q + slack) = -1.0;
        ++slack;
      }
    }
    for (Index b = 0; b < nb; ++b) {
      const std::size_t j = bounded_[static_cast<std::size_t>(b)];
      qp.A(nc + b, ix(j)) = 1.0;
      qp.lo(nc + b) = spec_.xlow[j] - x[j];
      qp.hi(nc + b) = spec_.xupp[j] - x[j];
      if (pins && !std::isnan(pins->var[j])) qp.lo(nc + b) = qp.hi(nc + b) = pins->var[j] - x[j];
    }
    if (elastic) {
      // Slack curvature proportional to rho keeps the unconstrained start of
      // the dual method (slacks at -rho/mu) at a moderate scale.
      const double mu = 1.0e-3 * rho;
      for (Index s = 0; s < 2 * q; ++s) {
        qp.G(n + s, n + s) = mu;
        qp.c(n + s) = rho;
        qp.A(nc + nb + s, n + s) = 1.0;
        qp.lo(nc + nb + s) = 0.0;
        qp.hi(nc + nb + s) = kInf;
      }
    }
    return qp;
  };

  Subproblem out;
  auto unpack = [&](const QpResult& res, bool elastic) {
    out.ok = true;
    out.elastic = elastic;
    out.d = res.z.head(n);
    out.lambda.assign(spec_.neF, 0.0);
    for (Index k = 0; k < nc; ++k) out.lambda[cons_[static_cast<std::size_t>(k)]] = res.lambda(k);
    out.slack_sum = elastic ? res.z.tail(res.z.size() - n).sum() : 0.0;
  };

  const QpResult plain = solve_qp(build(false));
  if (plain.status == QpStatus::Optimal) {
    unpack(plain, false);
    return out;
  }
  if (!allow_elastic || nonlinear_count_ == 0) return out;
  const QpResult elastic = solve_qp(build(true));
  if (elastic.status == QpStatus::Optimal) unpack(elastic, true);
  return out;
}

Solution SqpSolver::finish(ExitStatus exit, std::string message) {
  if (hooks_.monitor) hooks_.monitor(2, state_.x);
  Solution sol;
  sol.exit = exit;
  sol.message = std::move(message);
  sol.x = state_.x;
  sol.F = state_.F;
  sol.Fmul = state_.multipliers;
  if (!sol.F.empty()) {
    sol.objective = reported_objective(sol.F, spec_);
    sol.violation = constraint_violation(spec_, sol.x, sol.F);
    sol.kkt = state_.J.entries.empty() && state_.J.neF == 0 ? kInf : kkt_residual(spec_, state_);
  } else {
    sol.violation = kInf;
    sol.kkt = kInf;
  }
  sol.majors = state_.major_iter;
  sol.evals = evals_;
  sol.trace = std::move(trace_);
  return sol;
}

SqpSolver::Curvature SqpSolver::second_order_step(const std::vector<double>& lambda, double rho,
                                                  double kkt) {
  const Index n = ix(n_);
  const double tol = opts_.feasTol;
  const MatrixXd J = state_.J.to_dense();
  const VectorXd x = to_eigen(state_.x);

  // Tangent space of the active rows and bounds, which stay pinned while
  // the step is pulled back onto the constraints.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Pins pins{std::vector<double>(spec_.neF, nan), std::vector<double>(n_, nan)};
  std::vector<VectorXd> normals;
  for (std::size_t i : cons_) {
    const double f = state_.F[i];
    if (std::fabs(f - spec_.Flow[i]) <= tol) pins.row[i] = spec_.Flow[i];
    else if (std::fabs(f - spec_.Fupp[i]) <= tol) pins.row[i] = spec_.Fupp[i];
    else continue;
    normals.emplace_back(J.row(ix(i)).transpose());
  }
  for (std::size_t j = 0; j < n_; ++j) {
    if (x(ix(j)) - spec_.xlow[j] <= tol) pins.var[j] = spec_.xlow[j];
    else if (spec_.xupp[j] - x(ix(j)) <= tol) pins.var[j] = spec_.xupp[j];
    else continue;
    normals.push_back(VectorXd::Unit(n, ix(j)));
  }
  MatrixXd Z;
  if (normals.empty()) {
    Z = MatrixXd::Identity(n, n);
  } else {
    MatrixXd A(ix(normals.size()), n);
    for (std::size_t k = 0; k < normals.size(); ++k) A.row(ix(k)) = normals[k].transpose();
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
    svd.setThreshold(1.0e-10);
    Z = svd.matrixV().rightCols(n - svd.rank());
  }
  if (Z.cols() == 0) return Curvature::None;

  auto inside = [&](const VectorXd& y) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (y(ix(j)) < spec_.xlow[j] || y(ix(j)) > spec_.xupp[j]) return false;
    }
    return true;
  };
  // A refused difference point is retried closer to x, as any other step.
  Curvature failure = Curvature::None;
  auto gradient_at = [&](const VectorXd& y, double& offset) -> std::optional<VectorXd> {
    ProtocolResult r = evaluate(&state_.x, to_std(y), 0);
    if (r.mode == EvalMode::UserAbort) failure = Curvature::Aborted;
    if (r.mode == EvalMode::EvalError) failure = Curvature::Failed;
    if (r.mode != EvalMode::Ok) return std::nullopt;
    offset = (to_eigen(r.x) - x).norm();
    return lagrangian_gradient(r.assembly.J.to_dense(), lambda);
  };

  // Reduced Hessian of the Lagrangian by differencing its gradient.
  const VectorXd gL = lagrangian_gradient(J, lambda);
  const double h = 1.0e-6 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  MatrixXd HZ(n, Z.cols());
  for (Index c = 0; c < Z.cols(); ++c) {
    const VectorXd xp = x + h * Z.col(c);
    const VectorXd xm = x - h * Z.col(c);
    const bool up = inside(xp);
    const bool down = inside(xm);
    if (!up && !down) return Curvature::None;
    double hp = 0.0, hm = 0.0;
    std::optional<VectorXd> gp = up ? gradient_at(xp, hp) : std::optional<VectorXd>(gL);
    if (failure != Curvature::None) return failure;
    std::optional<VectorXd> gm = down ? gradient_at(xm, hm) : std::optional<VectorXd>(gL);
    if (failure != Curvature::None) return failure;
    if (!gp || !gm || hp + hm <= 0.0) return Curvature::None;
    HZ.col(c) = (*gp - *gm) / (hp + hm);
  }
  MatrixXd M = Z.transpose() * HZ;
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
  const double lmin = eig.eigenvalues()(0);
  if (lmin >= -1.0e-5 * std::max(1.0, M.cwiseAbs().maxCoeff())) return Curvature::None;

  VectorXd p = Z * eig.eigenvectors().col(0);
  p /= p.lpNorm<Eigen::Infinity>();
  if (gL.dot(p) > 0.0) p = -p;

  // Move along p, pull back onto the constraints by least-distance
  // projections, and keep the first point that lowers the merit.
  const double phi0 = merit(state_.F, rho);
  const MatrixXd I = MatrixXd::Identity(n, n);
  const VectorXd zero = VectorXd::Zero(n);
  double alpha = 0.5 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  for (int attempt = 0; attempt < 12; ++attempt, alpha *= 0.5) {
    std::vector<double> trial = to_std(x + alpha * p);
    clip_to_bounds(spec_, trial);
    ProtocolResult r = evaluate(&state_.x, std::move(trial), 0);
    if (r.mode == EvalMode::UserAbort) return Curvature::Aborted;
    if (r.mode == EvalMode::EvalError) return Curvature::Failed;
    for (int k = 0; k < 8; ++k) {
      double off = constraint_violation(spec_, r.x, r.assembly.F);
      for (std::size_t i : cons_) {
        if (!std::isnan(pins.row[i])) off = std::max(off, std::fabs(r.assembly.F[i] - pins.row[i]));
      }
      if (off <= 0.1 * tol) break;
      const Subproblem back =
          subproblem(I, zero, r.assembly.J.to_dense(), r.assembly.F, r.x, rho, false, &pins);
      if (!back.ok) break;
      std::vector<double> next = to_std(to_eigen(r.x) + back.d);
      clip_to_bounds(spec_, next);
      ProtocolResult r2 = evaluate(&r.x, std::move(next), 0);
      if (r2.mode == EvalMode::UserAbort) return Curvature::Aborted;
      if (r2.mode == EvalMode::EvalError) return Curvature::Failed;
      r = std::move(r2);
    }
    const double phi = merit(r.assembly.F, rho);
    if (phi < phi0 - 1.0e-10 * std::max(1.0, std::fabs(phi0))) {
      const double step = (to_eigen(r.x) - x).lpNorm<Eigen::Infinity>();
      state_.x = std::move(r.x);
      state_.F = std::move(r.assembly.F);
      state_.J = std::move(r.assembly.J);
      state_.multipliers = lambda;
      state_.penalty = rho;
      ++state_.major_iter;

      IterationRecord rec;
      rec.iter = state_.major_iter;
      rec.merit_before = phi0;
      rec.merit = phi;
      rec.penalty = rho;
      rec.feasibility = constraint_violation(spec_, state_.x, state_.F);
      rec.optimality = kkt;
      rec.step = step;
      rec.x = state_.x;
      trace_.push_back(std::move(rec));
      return Curvature::Escaped;
    }
  }
  return Curvature::None;
}

Solution SqpSolver::run() {
  if (spec_.n != jac_.functions().n() || spec_.neF != jac_.functions().neF()) {
    throw DimensionError("solve: problem dimensions do not match the function set");
  }
  state_.multipliers.assign(spec_.neF, 0.0);
  for (std::size_t i : cons_) state_.multipliers[i] = spec_.Fmul0[i];

  std::vector<double> x = spec_.x0;
  for (std::size_t j = 0; j < n_; ++j) {
    if (spec_.xstate[j] == 4 && std::isfinite(spec_.xlow[j])) x[j] = spec_.xlow[j];
    if (spec_.xstate[j] == 5 && std::isfinite(spec_.xupp[j])) x[j] = spec_.xupp[j];
  }
  clip_to_bounds(spec_, x);
  state_.x = x;

  auto adopt = [&](ProtocolResult&& r) {
    state_.x = std::move(r.x);
    state_.F = std::move(r.assembly.F);
    state_.J = std::move(r.assembly.J);
  };

  ProtocolResult first = evaluate(nullptr, x, 1);
  if (first.mode == EvalMode::UserAbort) return finish(ExitStatus::UserAbort, "stopped by the evaluator");
  if (first.mode == EvalMode::EvalError) return finish(ExitStatus::EvalError, "cannot evaluate at the start point");
  adopt(std::move(first));

  // Phase 0: move onto the linear rows.
  {
    auto projected = maintain_linear_feasibility(spec_, state_, jac_.pattern(), jac_.cache());
    if (!projected) return finish(ExitStatus::Infeasible, "the linear constraints and bounds are inconsistent");
    if (projected->x != state_.x) {
      ProtocolResult r = evaluate(nullptr, projected->x, 0);
      if (r.mode == EvalMode::UserAbort) return finish(ExitStatus::UserAbort, "stopped by the evaluator");
      if (r.mode == EvalMode::EvalError) return finish(ExitStatus::EvalError, "cannot evaluate at the projected start point");
      adopt(std::move(r));
    }
  }

  MatrixXd B = MatrixXd::Identity(ix(n_), ix(n_));
  bool fresh_hessian = true;
  bool scaled = false;
  double rho = 1.0;
  for (std::size_t i : cons_) rho = std::max(rho, 2.0 * std::fabs(state_.multipliers[i]));

  for (;;) {
    const double viol = constraint_violation(spec_, state_.x, state_.F);
    if (!obj_ && viol <= opts_.feasTol) {
      kkt_ = 0.0;
      return finish(ExitStatus::Feasible, "feasible point found");
    }
    if (state_.major_iter >= opts_.majorIterLimit) {
      return finish(ExitStatus::IterLimit, "major iteration limit reached");
    }

    const MatrixXd J = state_.J.to_dense();
    const VectorXd g = objective_gradient(J);
    Subproblem sub = subproblem(B, g, J, state_.F, state_.x, rho, true);
    for (int bump = 0; sub.ok && sub.elastic && sub.slack_sum > 0.0 && bump < 2 && rho < kMaxPenalty; ++bump) {
      rho = std::min(kMaxPenalty, 10.0 * rho);
      sub = subproblem(B, g, J, state_.F, state_.x, rho, true);
    }
    if (!sub.ok) {
      if (!fresh_hessian) {
        B.setIdentity();
        fresh_hessian = true;
        continue;
      }
      return stalled(J, viol, "the QP subproblem could not be solved");
    }

    double lam_max = 0.0;
    for (std::size_t i : cons_) lam_max = std::max(lam_max, std::fabs(sub.lambda[i]));
    // Elastic multipliers sit at +-rho and carry no information about the
    // penalty needed; only a regular subproblem can raise it.
    if (!sub.elastic && rho < 1.1 * lam_max) rho = std::min(kMaxPenalty, std::max(2.0 * lam_max, 1.5 * rho));

    IterateState probe = state_;
    probe.multipliers = sub.lambda;
    const double kkt = kkt_residual(spec_, probe);
    if (obj_ && !sub.elastic && viol <= opts_.feasTol && kkt <= opts_.optTol) {
      // A first-order point may still be a saddle (a symmetric start stays
      // on its symmetry plane); look for negative curvature before stopping.
      if (escapes_ < kMaxEscapes) {
        const Curvature c = second_order_step(sub.lambda, rho, kkt);
        if (c == Curvature::Aborted) return finish(ExitStatus::UserAbort, "stopped by the evaluator");
        if (c == Curvature::Failed) return finish(ExitStatus::EvalError, "evaluation failed after step halving");
        if (c == Curvature::Escaped) {
          ++escapes_;
          B.setIdentity();
          fresh_hessian = true;
          scaled = false;
          continue;
        }
      }
      state_.multipliers = sub.lambda;
      return finish(ExitStatus::Optimal, "optimality conditions satisfied");
    }

    const double viol_sum = general_violation(state_.F);
    const double D = g.dot(sub.d) + rho * (sub.slack_sum - viol_sum);
    const double dnorm = sub.d.lpNorm<Eigen::Infinity>();
    const double xnorm = to_eigen(state_.x).lpNorm<Eigen::Infinity>();
    if (dnorm <= 1.0e-14 * (1.0 + xnorm)) {
      state_.multipliers = sub.lambda;
      if (viol > opts_.feasTol) return finish(ExitStatus::Infeasible, "constraints appear locally infeasible");
      return finish(ExitStatus::Stalled, "zero step before the optimality tolerance was met");
    }
    if (!(D < 0.0)) {
      if (!fresh_hessian) {
        B.setIdentity();
        fresh_hessian = true;
        continue;
      }
      state_.multipliers = sub.lambda;
      return stalled(J, viol, "search direction is not a descent direction for the merit function");
    }

    // Line search on the l1 merit function.
    const double phi0 = merit(state_.F, rho);
    const std::vector<double> x_old = state_.x;
    const VectorXd xv = to_eigen(x_old);
    std::optional<ProtocolResult> accepted;
    double alpha = 1.0;
    double step = 0.0;
    bool soc_tried = false;
    for (int ls = 0; ls < 60 && !accepted; ++ls) {
      std::vector<double> trial = to_std(xv + alpha * sub.d);
      clip_to_bounds(spec_, trial);
      ProtocolResult r = evaluate(&x_old, std::move(trial), 0);
      if (r.mode == EvalMode::UserAbort) return finish(ExitStatus::UserAbort, "stopped by the evaluator");
      if (r.mode == EvalMode::EvalError) return finish(ExitStatus::EvalError, "evaluation failed after step halving");
      const double a = alpha / std::ldexp(1.0, r.halvings);
      const double phi = merit(r.assembly.F, rho);
      if (phi <= phi0 + 1.0e-4 * a * D) {
        accepted = std::move(r);
        step = a;
        break;
      }
      if (!soc_tried && ls == 0 && r.halvings == 0 && nonlinear_count_ > 0) {
        soc_tried = true;
        // Second-order correction: re-linearize the nonlinear rows about x + d.
        std::vector<double> base = state_.F;
        const VectorXd Jd = J * sub.d;
        for (std::size_t k = 0; k < cons_.size(); ++k) {
          if (cons_linear_[k]) continue;
          const std::size_t i = cons_[k];
          base[i] = r.assembly.F[i] - Jd(ix(i));
        }
        const Subproblem corr = subproblem(B, g, J, base, x_old, rho, false);
        if (corr.ok) {
          std::vector<double> x2 = to_std(xv + corr.d);
          clip_to_bounds(spec_, x2);
          ProtocolResult r2 = evaluate(&x_old, std::move(x2), 0);
          if (r2.mode == EvalMode::UserAbort) return finish(ExitStatus::UserAbort, "stopped by the evaluator");
          if (r2.mode == EvalMode::Ok && r2.halvings == 0 &&
              merit(r2.assembly.F, rho) <= phi0 + 1.0e-4 * D) {
            accepted = std::move(r2);
            step = 1.0;
            break;
          }
        }
      }
      // safeguarded quadratic interpolation
      const double denom = 2.0 * (phi - phi0 - D * a);
      double next = denom > 0.0 ? -D * a * a / denom : 0.5 * a;
      alpha = std::clamp(next, 0.1 * a, 0.5 * a);
      if (alpha < 1.0e-12) break;
    }
    if (!accepted) {
      if (!fresh_hessian) {
        B.setIdentity();
        fresh_hessian = true;
        continue;
      }
      state_.multipliers = sub.lambda;
      return stalled(J, viol, "line search could not reduce the merit function");
    }

    // Damped BFGS update of the Lagrangian Hessian approximation.
    const MatrixXd J_new = accepted->assembly.J.to_dense();
    const VectorXd s = to_eigen(accepted->x) - xv;
    VectorXd y = lagrangian_gradient(J_new, sub.lambda) - lagrangian_gradient(J, sub.lambda);
    if (!scaled && s.dot(y) > 0.0) {
      B = (y.squaredNorm() / s.dot(y)) * MatrixXd::Identity(ix(n_), ix(n_));
      scaled = true;
    }
    const VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs > 1.0e-300) {
      double sy = s.dot(y);
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
      B = 0.5 * (B + B.transpose()).eval();
      fresh_hessian = false;
    }

    adopt(std::move(*accepted));
    state_.multipliers = sub.lambda;
    state_.penalty = rho;
    ++state_.major_iter;

    IterationRecord rec;
    rec.iter = state_.major_iter;
    rec.merit_before = phi0;
    rec.merit = merit(state_.F, rho);
    rec.penalty = rho;
    rec.feasibility = constraint_violation(spec_, state_.x, state_.F);
    rec.optimality = kkt;
    rec.step = step;
    rec.elastic = sub.elastic;
    rec.x = state_.x;
    trace_.push_back(std::move(rec));
  }
}

}  // namespace

Solution solve(const ProblemSpec& spec, const JacobianAssembler& jac, const Options& opts,
               const SolveHooks& hooks) {
  SqpSolver solver(spec, jac, opts, hooks);
  return solver.run();
}

}  // namespace jacopt
