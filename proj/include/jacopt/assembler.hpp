#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jacopt/ad.hpp"
#include "jacopt/structure.hpp"

namespace jacopt {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Values of the Constant entries, row-major. Built once per pattern.
struct ConstantCache {
  std::vector<Triplet> entries;
};

/// Triplet-form Jacobian, sorted row-major then by column, no duplicates.
struct SparseJacobian {
  std::size_t neF = 0;
  std::size_t n = 0;
  std::vector<Triplet> entries;

  std::size_t nnz() const { return entries.size(); }
  Eigen::MatrixXd to_dense() const;
};

/// Unit columns e_j for each j in nonlinear_vars, ascending.
SeedMatrix build_seed(const StructurePattern& pattern);

ConstantCache init_cache(const StructurePattern& pattern);

struct Assembly {
  std::vector<double> F;
  SparseJacobian J;
  bool near_kink = false;
};

/// One forward sweep carrying |nonlinear_vars| derivative components;
/// Nonlinear entries come from J*S, Constant entries are copied from the
/// cache, Zero entries are omitted.
Assembly assemble(const FunctionSet& funcs, std::span<const double> x,
                  const StructurePattern& pattern, const ConstantCache& cache,
                  const SeedMatrix& seed, SweepCounter* counter = nullptr, double kink_tol = 0.0);

/// Pattern, seed and cache bundled for repeated assembly.
class JacobianAssembler {
 public:
  JacobianAssembler(const FunctionSet& funcs, StructurePattern pattern);

  const StructurePattern& pattern() const { return pattern_; }
  const SeedMatrix& seed() const { return seed_; }
  const ConstantCache& cache() const { return cache_; }
  const FunctionSet& functions() const { return *funcs_; }

  Assembly operator()(std::span<const double> x, SweepCounter* counter = nullptr,
                      double kink_tol = 0.0) const {
    return assemble(*funcs_, x, pattern_, cache_, seed_, counter, kink_tol);
  }

 private:
  const FunctionSet* funcs_;
  StructurePattern pattern_;
  SeedMatrix seed_;
  ConstantCache cache_;
};

}  // namespace jacopt
