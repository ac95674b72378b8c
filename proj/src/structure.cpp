#include "jacopt/structure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "jacopt/ad.hpp"
#include "jacopt/error.hpp"

namespace jacopt {

const char* to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::Zero: return "ZERO";
    case EntryKind::Constant: return "CONSTANT";
    case EntryKind::Nonlinear: return "NONLINEAR";
  }
  return "?";
}

StructurePattern::StructurePattern(std::size_t neF, std::size_t n, double tau)
    : neF_(neF), n_(n), tau_(tau), grid_(neF * n) {
  refresh();
}

StructurePattern::StructurePattern(std::size_t neF, std::size_t n, double tau,
                                   std::vector<EntryClass> grid)
    : neF_(neF), n_(n), tau_(tau), grid_(std::move(grid)) {
  if (grid_.size() != neF * n) throw DimensionError("structure grid has the wrong size");
  refresh();
}

void StructurePattern::set(std::size_t i, std::size_t j, EntryClass c) {
  grid_[i * n_ + j] = c;
  refresh();
}

std::size_t StructurePattern::count(EntryKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(grid_.begin(), grid_.end(), [kind](const EntryClass& c) { return c.kind == kind; }));
}

void StructurePattern::refresh() {
  linear_rows_.clear();
  nonlinear_vars_.clear();
  nnz_ = 0;
  std::vector<bool> col_nonlinear(n_, false);
  for (std::size_t i = 0; i < neF_; ++i) {
    bool row_linear = true;
    for (std::size_t j = 0; j < n_; ++j) {
      const EntryKind k = at(i, j).kind;
      if (k != EntryKind::Zero) ++nnz_;
      if (k == EntryKind::Nonlinear) {
        row_linear = false;
        col_nonlinear[j] = true;
      }
    }
    if (row_linear) linear_rows_.push_back(i);
  }
  for (std::size_t j = 0; j < n_; ++j) {
    if (col_nonlinear[j]) nonlinear_vars_.push_back(j);
  }
}

std::vector<double> perturb(std::span<const double> x0, int k, const Options& opts, int round) {
  if (k != 1 && k != 2) throw Error("perturb: draw index must be 1 or 2");
  std::seed_seq seq{static_cast<std::uint32_t>(opts.rngSeed & 0xffffffffU),
                    static_cast<std::uint32_t>(opts.rngSeed >> 32),
                    static_cast<std::uint32_t>(round)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<double> point(x0.begin(), x0.end());
  for (std::size_t j = 0; j < x0.size(); ++j) {
    const double radius = opts.probeScale * std::max(1.0, std::fabs(x0[j]));
    const double gap = 0.1 * radius;
    double d1;
    do {
      d1 = radius * unit(rng);
    } while (std::fabs(d1) < gap);
    double d2;
    do {
      d2 = radius * unit(rng);
    } while (std::fabs(d2) < gap || std::fabs(d1 - d2) < gap);
    point[j] = x0[j] + (k == 1 ? d1 : d2);
  }
  return point;
}

StructurePattern classify_entries(const Eigen::MatrixXd& J1, const Eigen::MatrixXd& J2) {
  const double scale = std::max({1.0, J1.cwiseAbs().maxCoeff(), J2.cwiseAbs().maxCoeff()});
  const double tau = 1.0e-10 * scale;
  const auto neF = static_cast<std::size_t>(J1.rows());
  const auto n = static_cast<std::size_t>(J1.cols());
  std::vector<EntryClass> grid(neF * n);
  for (std::size_t i = 0; i < neF; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = J1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double b = J2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      EntryClass c;
      if (std::fabs(a) <= tau && std::fabs(b) <= tau) {
        c = EntryClass::zero();
      } else if (std::fabs(a - b) <= tau * std::max(1.0, std::fabs(a))) {
        c = EntryClass::constant(a);
      } else {
        c = EntryClass::nonlinear();
      }
      grid[i * n + j] = c;
    }
  }
  return StructurePattern(neF, n, tau, std::move(grid));
}

StructurePattern probe_structure(const FunctionSet& funcs, std::span<const double> x0,
                                 const Options& opts) {
  if (x0.size() != funcs.n()) throw DimensionError("probe_structure: start point has the wrong size");
  for (int round = 0;; ++round) {
    std::array<std::vector<double>, 2> points{perturb(x0, 1, opts, round), perturb(x0, 2, opts, round)};
    std::array<Eigen::MatrixXd, 2> J;
    try {
      for (int k = 0; k < 2; ++k) J[k] = full_jacobian(funcs, points[k]).JS;
    } catch (const EvalFault& fault) {
      if (round == 0) continue;
      throw ProbeError(std::string("evaluation failed at both probe rounds (") + fault.what() +
                       "); reduce Probe scale or move the start point");
    }
    StructurePattern pattern = classify_entries(J[0], J[1]);
    pattern.probe_points = std::move(points);
    return pattern;
  }
}

BlockPartition block_partition(const StructurePattern& pattern) {
  BlockPartition part;
  part.linear_rows = pattern.linear_rows();
  part.nonlinear_vars = pattern.nonlinear_vars();
  std::size_t r = 0;
  for (std::size_t i = 0; i < pattern.neF(); ++i) {
    if (r < part.linear_rows.size() && part.linear_rows[r] == i) {
      ++r;
    } else {
      part.nonlinear_rows.push_back(i);
    }
  }
  std::size_t c = 0;
  for (std::size_t j = 0; j < pattern.n(); ++j) {
    if (c < part.nonlinear_vars.size() && part.nonlinear_vars[c] == j) {
      ++c;
    } else {
      part.linear_vars.push_back(j);
    }
  }
  return part;
}

std::string dump_structure(const StructurePattern& pattern) {
  std::string out;
  for (std::size_t i = 0; i < pattern.neF(); ++i) {
    for (std::size_t j = 0; j < pattern.n(); ++j) {
      const EntryClass& c = pattern.at(i, j);
      if (c.kind == EntryKind::Zero) continue;
      if (c.kind == EntryKind::Constant) {
        out += fmt::format("{} {} {} {}\n", i + 1, j + 1, to_string(c.kind), c.value);
      } else {
        out += fmt::format("{} {} {}\n", i + 1, j + 1, to_string(c.kind));
      }
    }
  }
  return out;
}

}  // namespace jacopt
