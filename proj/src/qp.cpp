#include "jacopt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "jacopt/error.hpp"

namespace jacopt {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Working state of the dual method. Constraints are stored as columns of N
// with N_k' z + b_k >= 0 (or == 0 for the first `neq` of them).
class DualActiveSet {
 public:
  DualActiveSet(const MatrixXd& G, const VectorXd& c, MatrixXd N, VectorXd b, Index neq)
      : n_(G.rows()), N_(std::move(N)), b_(std::move(b)), neq_(neq) {
    m_ = N_.cols();
    Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
      status_ = QpStatus::NotConvex;
      return;
    }
    const MatrixXd L = llt.matrixL();
    // J = L^{-T}; J J' = G^{-1}
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n_, n_));
    J0_ = J_;
    R_ = MatrixXd::Zero(n_, n_);
    x_ = -llt.solve(c);
    scale_ = G.trace() * J_.trace();
    active_.assign(static_cast<std::size_t>(n_ + 1), 0);
    u_ = VectorXd::Zero(n_ + 1);
    status_ = QpStatus::Optimal;
  }

  QpStatus run(int max_iter) {
    if (status_ != QpStatus::Optimal) return status_;
    if (!add_equalities()) return status_ = QpStatus::Infeasible;
    return status_ = add_inequalities(max_iter);
  }

  const VectorXd& x() const { return x_; }
  int iterations() const { return iterations_; }

  /// Multiplier per constraint column (zero when inactive).
  VectorXd multipliers() const {
    VectorXd mult = VectorXd::Zero(m_);
    for (Index k = 0; k < iq_; ++k) mult(active_[static_cast<std::size_t>(k)]) = u_(k);
    return mult;
  }

 private:
  VectorXd primal_direction(const VectorXd& d) const {
    return J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  }

  VectorXd dual_direction(const VectorXd& d) const {
    VectorXd r(iq_);
    for (Index i = iq_ - 1; i >= 0; --i) {
      double sum = d(i);
      for (Index j = i + 1; j < iq_; ++j) sum -= R_(i, j) * r(j);
      r(i) = sum / R_(i, i);
    }
    return r;
  }

  // Appends d = J'n_p to the factorization; false if it is (numerically)
  // dependent on the active constraints.
  bool add_constraint(VectorXd& d) {
    if (iq_ >= n_) return false;
    for (Index j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (Index i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d(i);
    if (std::fabs(d(iq_ - 1)) <= kEps * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::fabs(d(iq_ - 1)));
    return true;
  }

  void delete_constraint(Index constraint) {
    Index qq = -1;
    for (Index i = peq_; i < iq_; ++i) {
      if (active_[static_cast<std::size_t>(i)] == constraint) {
        qq = i;
        break;
      }
    }
    if (qq < 0) throw Error("qp: constraint to drop is not active");
    for (Index i = qq; i < iq_ - 1; ++i) {
      active_[static_cast<std::size_t>(i)] = active_[static_cast<std::size_t>(i + 1)];
      u_(i) = u_(i + 1);
      R_.col(i) = R_.col(i + 1);
    }
    active_[static_cast<std::size_t>(iq_ - 1)] = active_[static_cast<std::size_t>(iq_)];
    u_(iq_ - 1) = u_(iq_);
    active_[static_cast<std::size_t>(iq_)] = 0;
    u_(iq_) = 0.0;
    R_.col(iq_ - 1).setZero();
    --iq_;
    if (iq_ == 0) return;
    for (Index j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Index k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  bool add_equalities() {
    for (Index i = 0; i < neq_; ++i) {
      const VectorXd np = N_.col(i);
      VectorXd d = J_.transpose() * np;
      // An equality dependent on the ones already active is skipped when it
      // holds at the current point and makes the problem infeasible otherwise.
      if (iq_ >= n_ || d.tail(n_ - iq_).norm() <= 1e-10 * np.norm()) {
        const double res = np.dot(x_) + b_(i);
        if (std::fabs(res) > 1e-9 * std::max({1.0, std::fabs(b_(i)), np.norm() * x_.norm()})) return false;
        continue;
      }
      const VectorXd z = primal_direction(d);
      const VectorXd r = dual_direction(d);
      double t2 = 0.0;
      if (z.squaredNorm() > kEps) t2 = (-np.dot(x_) - b_(i)) / z.dot(np);
      x_ += t2 * z;
      u_(iq_) = t2;
      u_.head(iq_) -= t2 * r;
      active_[static_cast<std::size_t>(iq_)] = i;
      if (!add_constraint(d)) return false;
    }
    peq_ = iq_;
    return true;
  }

  QpStatus add_inequalities(int max_iter) {
    std::vector<bool> inactive(static_cast<std::size_t>(m_), true);  // candidate for entering
    std::vector<bool> usable(static_cast<std::size_t>(m_), true);    // not excluded as dependent
    for (Index i = 0; i < neq_; ++i) inactive[static_cast<std::size_t>(i)] = false;
    VectorXd s(m_);

    for (;;) {
      if (++iterations_ > max_iter) return QpStatus::IterationLimit;
      for (Index i = neq_; i < m_; ++i) inactive[static_cast<std::size_t>(i)] = true;
      for (Index i = peq_; i < iq_; ++i) inactive[static_cast<std::size_t>(active_[static_cast<std::size_t>(i)])] = false;

      double psi = 0.0;
      for (Index i = neq_; i < m_; ++i) {
        s(i) = N_.col(i).dot(x_) + b_(i);
        psi += std::min(0.0, s(i));
      }
      if (std::fabs(psi) <= static_cast<double>(m_) * kEps * scale_ * 100.0) return QpStatus::Optimal;

      const VectorXd u_old = u_;
      const std::vector<Index> active_old = active_;
      const VectorXd x_old = x_;
      const Index iq_old = iq_;

    choose:
      Index ip = -1;
      double worst = 0.0;
      for (Index i = neq_; i < m_; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (inactive[k] && usable[k] && s(i) < worst) {
          worst = s(i);
          ip = i;
        }
      }
      if (ip < 0) return QpStatus::Optimal;
      const VectorXd np = N_.col(ip);
      u_(iq_) = 0.0;
      active_[static_cast<std::size_t>(iq_)] = ip;

      for (;;) {
        if (++iterations_ > max_iter) return QpStatus::IterationLimit;
        VectorXd d = J_.transpose() * np;
        const VectorXd z = primal_direction(d);
        const VectorXd r = dual_direction(d);

        // dual step: largest t keeping active inequality multipliers >= 0
        Index drop = -1;
        double t1 = kInf;
        for (Index k = peq_; k < iq_; ++k) {
          if (r(k) > 0.0 && u_(k) / r(k) < t1) {
            t1 = u_(k) / r(k);
            drop = active_[static_cast<std::size_t>(k)];
          }
        }
        // primal step: makes constraint ip active
        double t2 = kInf;
        if (z.squaredNorm() > kEps) t2 = -s(ip) / z.dot(np);
        const double t = std::min(t1, t2);
        if (t >= kInf) return QpStatus::Infeasible;

        if (t2 >= kInf) {
          u_.head(iq_) -= t * r;
          u_(iq_) += t;
          inactive[static_cast<std::size_t>(drop)] = true;
          delete_constraint(drop);
          continue;
        }

        x_ += t * z;
        u_.head(iq_) -= t * r;
        u_(iq_) += t;

        if (std::fabs(t - t2) <= kEps * std::max(1.0, std::fabs(t2))) {
          if (!add_constraint(d)) {
            // dependent constraint: restore and exclude it
            usable[static_cast<std::size_t>(ip)] = false;
            u_ = u_old;
            active_ = active_old;
            x_ = x_old;
            iq_ = iq_old;
            rebuild();
            for (Index i = neq_; i < m_; ++i) inactive[static_cast<std::size_t>(i)] = true;
            for (Index i = peq_; i < iq_; ++i) inactive[static_cast<std::size_t>(active_[static_cast<std::size_t>(i)])] = false;
            for (Index i = neq_; i < m_; ++i) s(i) = N_.col(i).dot(x_) + b_(i);
            goto choose;
          }
          inactive[static_cast<std::size_t>(ip)] = false;
          break;
        }
        inactive[static_cast<std::size_t>(drop)] = true;
        delete_constraint(drop);
        s(ip) = np.dot(x_) + b_(ip);
      }
    }
  }

  // Refactorizes J and R for the current active set from scratch.
  void rebuild() {
    const Index keep = iq_;
    std::vector<Index> ids(active_.begin(), active_.begin() + keep);
    J_ = J0_;
    R_.setZero();
    r_norm_ = 1.0;
    iq_ = 0;
    for (Index k = 0; k < keep; ++k) {
      VectorXd d = J_.transpose() * N_.col(ids[static_cast<std::size_t>(k)]);
      active_[static_cast<std::size_t>(k)] = ids[static_cast<std::size_t>(k)];
      add_constraint(d);
    }
  }

 private:
  Index n_;
  Index m_ = 0;
  MatrixXd N_;
  VectorXd b_;
  Index neq_;
  Index peq_ = 0;  // active-set positions held by equalities
  MatrixXd J_, J0_, R_;
  VectorXd x_, u_;
  std::vector<Index> active_;
  Index iq_ = 0;
  double r_norm_ = 1.0;
  double scale_ = 1.0;
  int iterations_ = 0;
  QpStatus status_ = QpStatus::Infeasible;
};

}  // namespace

QpResult solve_qp(const QpProblem& qp) {
  const Index n = qp.G.rows();
  const Index m = qp.A.rows();
  if (qp.G.cols() != n || qp.c.size() != n || (m > 0 && qp.A.cols() != n) || qp.lo.size() != m ||
      qp.hi.size() != m) {
    throw DimensionError("solve_qp: inconsistent dimensions");
  }

  // Column k of N: constraint N_k'z + b_k (>=|==) 0; origin maps it back to
  // (row, sign) of the caller's A.
  std::vector<Eigen::VectorXd> eq_cols, in_cols;
  std::vector<double> eq_b, in_b;
  std::vector<std::pair<Index, double>> eq_origin, in_origin;
  for (Index i = 0; i < m; ++i) {
    const double lo = qp.lo(i);
    const double hi = qp.hi(i);
    if (lo > hi) {
      QpResult bad;
      bad.status = QpStatus::Infeasible;
      return bad;
    }
    const Eigen::VectorXd a = qp.A.row(i).transpose();
    if (std::isfinite(lo) && lo == hi) {
      eq_cols.push_back(a);
      eq_b.push_back(-lo);
      eq_origin.emplace_back(i, 1.0);
      continue;
    }
    if (std::isfinite(lo)) {
      in_cols.push_back(a);
      in_b.push_back(-lo);
      in_origin.emplace_back(i, 1.0);
    }
    if (std::isfinite(hi)) {
      in_cols.push_back(-a);
      in_b.push_back(hi);
      in_origin.emplace_back(i, -1.0);
    }
  }
  const auto neq = static_cast<Index>(eq_cols.size());
  const auto total = neq + static_cast<Index>(in_cols.size());
  MatrixXd N(n, total);
  VectorXd b(total);
  for (Index k = 0; k < neq; ++k) {
    N.col(k) = eq_cols[static_cast<std::size_t>(k)];
    b(k) = eq_b[static_cast<std::size_t>(k)];
  }
  for (Index k = neq; k < total; ++k) {
    N.col(k) = in_cols[static_cast<std::size_t>(k - neq)];
    b(k) = in_b[static_cast<std::size_t>(k - neq)];
  }

  DualActiveSet solver(qp.G, qp.c, N, b, neq);
  QpResult out;
  out.status = solver.run(static_cast<int>(50 * (n + total) + 100));
  out.iterations = solver.iterations();
  out.z = solver.x();
  out.lambda = VectorXd::Zero(m);
  if (out.status == QpStatus::Optimal) {
    const VectorXd mult = solver.multipliers();
    for (Index k = 0; k < neq; ++k) out.lambda(eq_origin[static_cast<std::size_t>(k)].first) += mult(k);
    for (Index k = neq; k < total; ++k) {
      const auto& [row, sign] = in_origin[static_cast<std::size_t>(k - neq)];
      out.lambda(row) += sign * mult(k);
    }
    out.objective = 0.5 * out.z.dot(qp.G * out.z) + qp.c.dot(out.z);
  }
  return out;
}

}  // namespace jacopt
