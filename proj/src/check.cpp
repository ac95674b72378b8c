#include "jacopt/check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "jacopt/ad.hpp"
#include "jacopt/error.hpp"

namespace jacopt {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

Eigen::MatrixXd fd_jacobian(const FunctionSet& funcs, std::span<const double> x0,
                            std::span<const double> steps) {
  const std::size_t n = funcs.n();
  if (x0.size() != n || steps.size() != n) throw DimensionError("fd_jacobian: dimension mismatch");
  Eigen::MatrixXd J(ix(funcs.neF()), ix(n));
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> fp(funcs.neF()), fm(funcs.neF());
  for (std::size_t j = 0; j < n; ++j) {
    const double h = steps[j];
    if (!(h > 0)) throw CheckError("fd_jacobian: step must be positive");
    try {
      x[j] = x0[j] + h;
      funcs.eval(x, fp);
      x[j] = x0[j] - h;
      funcs.eval(x, fm);
    } catch (const EvalFault& fault) {
      throw CheckError(fmt::format("difference column {}: {}", j + 1, fault.what()));
    }
    x[j] = x0[j];
    for (std::size_t i = 0; i < funcs.neF(); ++i) J(ix(i), ix(j)) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

Eigen::MatrixXd fd_jacobian(const FunctionSet& funcs, std::span<const double> x0, double h) {
  std::vector<double> steps(funcs.n(), h);
  return fd_jacobian(funcs, x0, steps);
}

CheckReport verify_at_start(const FunctionSet& funcs, std::span<const double> x0,
                            StructurePattern& pattern, const Options& opts,
                            const ConstantCache* cache) {
  if (pattern.n() != funcs.n() || pattern.neF() != funcs.neF()) {
    throw DimensionError("verify_at_start: pattern does not match the function set");
  }
  CheckReport report;
  const double tau = pattern.tau();
  const double tol = opts.checkTol;

  std::vector<double> steps(funcs.n());
  for (std::size_t j = 0; j < funcs.n(); ++j) steps[j] = opts.fdStep * std::max(1.0, std::fabs(x0[j]));
  const Eigen::MatrixXd Jfd = fd_jacobian(funcs, x0, steps);

  const JacobianProduct exact = full_jacobian(funcs, x0, nullptr, opts.feasTol);
  const Eigen::MatrixXd& Jad = exact.JS;
  report.nonsmooth = exact.near_kink;

  const ConstantCache own = cache ? ConstantCache{} : init_cache(pattern);
  const ConstantCache& cached = cache ? *cache : own;
  std::map<std::pair<std::size_t, std::size_t>, double> cached_value;
  for (const auto& t : cached.entries) cached_value[{t.row, t.col}] = t.value;

  const StructurePattern before = pattern;
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); };

  for (std::size_t i = 0; i < pattern.neF(); ++i) {
    for (std::size_t j = 0; j < pattern.n(); ++j) {
      const EntryClass cls = before.at(i, j);
      const double ad = Jad(ix(i), ix(j));
      const double fd = Jfd(ix(i), ix(j));
      auto reclassify = [&](std::string note) {
        pattern.set(i, j, EntryClass::nonlinear());
        report.pattern_mismatches.push_back({i, j, cls.kind, EntryKind::Nonlinear, ad, fd, std::move(note)});
      };

      double assembled = ad;
      switch (cls.kind) {
        case EntryKind::Zero:
          if (std::fabs(fd) > tol || std::fabs(ad) > tau) {
            reclassify(fmt::format("entry marked zero has derivative {} (differences {})", ad, fd));
          } else {
            continue;
          }
          break;
        case EntryKind::Constant: {
          auto it = cached_value.find({i, j});
          if (it == cached_value.end()) {
            report.failures.push_back(fmt::format("({},{}): constant entry missing from cache", i + 1, j + 1));
            continue;
          }
          const double c = it->second;
          if (std::fabs(ad - c) <= tau * std::max(1.0, std::fabs(c))) {
            assembled = c;
          } else if (c == cls.value) {
            reclassify(fmt::format("constant {} from the probes differs from {} at the start point", c, ad));
          } else {
            report.failures.push_back(fmt::format(
                "({},{}): cached constant {} disagrees with pattern value {} and derivative {}", i + 1,
                j + 1, c, cls.value, ad));
            continue;
          }
          break;
        }
        case EntryKind::Nonlinear:
          break;
      }

      const double err = rel(assembled, fd);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_row = i;
        report.worst_col = j;
      }
      if (err > tol) {
        report.failures.push_back(fmt::format("({},{}): derivative {} disagrees with differences {}",
                                              i + 1, j + 1, assembled, fd));
      }
    }
  }
  for (const auto& [key, value] : cached_value) {
    if (before.at(key.first, key.second).kind != EntryKind::Constant) {
      report.failures.push_back(
          fmt::format("({},{}): cache holds an entry the pattern does not mark constant", key.first + 1,
                      key.second + 1));
    }
  }
  report.passed = report.failures.empty() && report.max_rel_error <= tol;
  return report;
}

}  // namespace jacopt
