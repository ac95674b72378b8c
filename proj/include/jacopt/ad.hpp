#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jacopt/function_set.hpp"

namespace jacopt {

/// n x p seed matrix S, p <= n. Stored either as a list of unit columns
/// (column k is e_{cols[k]}) or densely in column-major order.
class SeedMatrix {
 public:
  static SeedMatrix identity(std::size_t n);
  static SeedMatrix unit_columns(std::size_t n, std::vector<std::size_t> cols);
  /// `colmajor` has n*p entries; throws DimensionError if p > n.
  static SeedMatrix dense(std::size_t n, std::size_t p, std::vector<double> colmajor);

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  bool is_unit() const { return unit_; }
  /// Valid only when is_unit().
  const std::vector<std::size_t>& columns() const { return cols_; }
  double at(std::size_t row, std::size_t col) const;
  /// Row j of S: the derivative seed of variable j.
  std::vector<double> seed_of(std::size_t j) const;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  bool unit_ = true;
  std::vector<std::size_t> cols_;
  std::vector<double> dense_;
};

/// Counts forward sweeps and the derivative components they carried.
struct SweepCounter {
  std::size_t sweeps = 0;
  std::size_t last_width = 0;
  std::size_t total_components = 0;
};

struct JacobianProduct {
  std::vector<double> F;
  Eigen::MatrixXd JS;      // neF x p
  bool near_kink = false;  // an abs() argument was within kink_tol of zero
};

/// F(x) and J(x)*S in one vector-forward sweep. With p == 0 no sweep is
/// made and F comes from a plain evaluation.
JacobianProduct jacobian_times_seed(const FunctionSet& funcs, std::span<const double> x,
                                    const SeedMatrix& S, SweepCounter* counter = nullptr,
                                    double kink_tol = 0.0);

JacobianProduct full_jacobian(const FunctionSet& funcs, std::span<const double> x,
                              SweepCounter* counter = nullptr, double kink_tol = 0.0);

}  // namespace jacopt
