// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cli.hpp"
#include "jacopt/ad.hpp"
#include "jacopt/assembler.hpp"
#include "jacopt/check.hpp"
#include "jacopt/io.hpp"
#include "jacopt/pipeline.hpp"
#include "jacopt/structure.hpp"
#include "support/fixtures.hpp"
#include "support/symbolic.hpp"
#include "support/toy_oracle.hpp"

using namespace jacopt;

namespace {

/// Collects the first few reasons a criterion failed.
struct Verdict {
  std::vector<std::string> problems;
  std::string detail;

  void expect(bool ok, const std::string& why) {
    if (!ok && problems.size() < 5) problems.push_back(why);
    if (!ok) ++failures;
  }
  int failures = 0;
};

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

constexpr std::size_t kCorpusSize = 250;

std::vector<fixtures::CorpusProblem> corpus() {
  fixtures::CorpusGenerator gen(0x5eed);
  std::vector<fixtures::CorpusProblem> out;
  for (std::size_t k = 0; k < kCorpusSize; ++k) out.push_back(gen.next());
  return out;
}

// 1 -------------------------------------------------------------------------
Verdict fixture_end_to_end() {
  Verdict v;
  const oracle::ToyOptimum opt = oracle::solve_toy();
  v.expect(!opt.minimizers.empty(), "oracle found no minimizer");
  v.expect(std::fabs(opt.grid_min - opt.f) < 1e-2 && opt.grid_min >= opt.f - 1e-12,
           fmt::format("grid {} disagrees with multistart {}", opt.grid_min, opt.f));

  const std::string prob = fixtures::data_path("prob.txt");
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_cli({"jacopt", prob, "--specs", fixtures::data_path("prob.spc")}, out, err);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.expect(code == 0, fmt::format("cli exit code {}: {}", code, err.str()));
  v.expect(out.str().find("exit optimal") != std::string::npos, "cli did not report optimal");
  v.expect(secs < 1.0, fmt::format("cli took {:.3f} s", secs));

  const ParsedProblem p = parse_problem_file(read_text_file(prob));
  const PipelineResult r = run_pipeline(p.spec, p.funcs, parse_specs_file(read_text_file(fixtures::data_path("prob.spc"))).options);
  if (!r.solution) {
    v.expect(false, "no solution");
    return v;
  }
  const Solution& s = *r.solution;
  const double dist = oracle::distance_to_minimizers(opt, s.x);
  v.expect(s.exit == ExitStatus::Optimal, fmt::format("exit {}", to_string(s.exit)));
  v.expect(s.violation <= 1e-6, fmt::format("violation {:.2e}", s.violation));
  v.expect(s.kkt <= 1e-6, fmt::format("kkt {:.2e}", s.kkt));
  v.expect(dist <= 1e-5, fmt::format("x off the oracle by {:.2e}", dist));
  v.expect(std::fabs(s.objective - opt.f) <= 1e-5, fmt::format("f={} oracle {}", s.objective, opt.f));
  v.detail = fmt::format("f={:.10f} oracle={:.10f} |dx|={:.1e} viol={:.1e} kkt={:.1e} {:.3f}s", s.objective,
                         opt.f, dist, s.violation, s.kkt, secs);
  return v;
}

// 2 -------------------------------------------------------------------------
Verdict structure_detection() {
  Verdict v;
  const auto rows = fixtures::toy_rows();
  const StructurePattern truth = oracle::symbolic_pattern(rows, 4);
  const FunctionSet f = fixtures::toy_functions();
  const ProblemSpec spec = fixtures::toy_spec();

  // The oracle itself must match the hand-derived structure.
  const std::set<std::pair<std::size_t, std::size_t>> constants = {{0, 3}, {1, 1}, {1, 2}, {2, 0}, {3, 3}};
  v.expect(truth.nnz() == 12 && truth.count(EntryKind::Constant) == 5 && truth.count(EntryKind::Nonlinear) == 7,
           "symbolic oracle counts");

  std::set<std::string> dumps;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Options opts;
    opts.rngSeed = seed * 7919 + 13;
    const StructurePattern p = probe_structure(f, spec.x0, opts);
    dumps.insert(dump_structure(p));
    v.expect(p.nnz() == 12, fmt::format("seed {}: nnz {}", opts.rngSeed, p.nnz()));
    v.expect(p.count(EntryKind::Constant) == 5, fmt::format("seed {}: constants", opts.rngSeed));
    v.expect(p.count(EntryKind::Nonlinear) == 7, fmt::format("seed {}: nonlinear", opts.rngSeed));
    v.expect(p.count(EntryKind::Zero) == 4, fmt::format("seed {}: zeros", opts.rngSeed));
    v.expect(p.linear_rows() == std::vector<std::size_t>{1}, fmt::format("seed {}: linear rows", opts.rngSeed));
    v.expect(p.nonlinear_vars() == std::vector<std::size_t>{0, 1, 2},
             fmt::format("seed {}: nonlinear vars", opts.rngSeed));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const EntryClass& got = p.at(i, j);
        const EntryClass& want = truth.at(i, j);
        v.expect(got.kind == want.kind, fmt::format("seed {}: ({},{}) kind", opts.rngSeed, i + 1, j + 1));
        if (want.kind == EntryKind::Constant) {
          v.expect(constants.count({i, j}) == 1, "unexpected constant position in oracle");
          v.expect(got.value == want.value, fmt::format("seed {}: ({},{}) value {} want {}", opts.rngSeed, i + 1,
                                                        j + 1, got.value, want.value));
        }
      }
    }
  }
  v.expect(dumps.size() == 1, fmt::format("{} distinct classifications", dumps.size()));
  v.detail = "100 seeds, one classification";
  return v;
}

// 3 -------------------------------------------------------------------------
Verdict ad_correctness(const std::vector<fixtures::CorpusProblem>& problems) {
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  double worst_fd = 0.0, worst_lin = 0.0, worst_sym = 0.0;
  for (const auto& p : problems) {
    std::vector<double> x(p.n);
    for (auto& xi : x) xi = U(rng);
    const JacobianProduct full = full_jacobian(p.funcs, x);
    const Eigen::MatrixXd sym = oracle::symbolic_jacobian(p.rows, p.n, x);
    const double h = 1e-6;
    for (std::size_t j = 0; j < p.n; ++j) {
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const auto Fp = eval_rows(p.funcs, xp), Fm = eval_rows(p.funcs, xm);
      for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const double J = full.JS(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double fd = (Fp[i] - Fm[i]) / (2 * h);
        worst_fd = std::max(worst_fd, rel(fd, J));
        worst_sym = std::max(worst_sym, rel(J, sym(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
    }
    // J (a S1 + b S2) = a J S1 + b J S2 for dense seeds
    const std::size_t cols = std::min<std::size_t>(p.n, 3);
    std::vector<double> s1(p.n * cols), s2(p.n * cols), s3(p.n * cols);
    const double a = U(rng), b = U(rng);
    for (std::size_t k = 0; k < s1.size(); ++k) {
      s1[k] = U(rng);
      s2[k] = U(rng);
      s3[k] = a * s1[k] + b * s2[k];
    }
    const auto J1 = jacobian_times_seed(p.funcs, x, SeedMatrix::dense(p.n, cols, s1)).JS;
    const auto J2 = jacobian_times_seed(p.funcs, x, SeedMatrix::dense(p.n, cols, s2)).JS;
    const auto J3 = jacobian_times_seed(p.funcs, x, SeedMatrix::dense(p.n, cols, s3)).JS;
    const Eigen::MatrixXd combo = a * J1 + b * J2;
    for (Eigen::Index i = 0; i < combo.rows(); ++i) {
      for (Eigen::Index k = 0; k < combo.cols(); ++k) {
        const double scale = std::max({1.0, std::fabs(a * J1(i, k)), std::fabs(b * J2(i, k))});
        worst_lin = std::max(worst_lin, std::fabs(J3(i, k) - combo(i, k)) / scale);
      }
    }
  }
  v.expect(problems.size() >= 200, "corpus too small");
  v.expect(worst_fd <= 1e-6, fmt::format("finite-difference error {:.2e}", worst_fd));
  v.expect(worst_lin <= 1e-12, fmt::format("seed linearity error {:.2e}", worst_lin));
  v.expect(worst_sym <= 1e-12, fmt::format("symbolic mismatch {:.2e}", worst_sym));
  v.detail = fmt::format("{} problems, fd {:.1e}, linearity {:.1e}, symbolic {:.1e}", problems.size(), worst_fd,
                         worst_lin, worst_sym);
  return v;
}

// 4 -------------------------------------------------------------------------
Verdict cache_equivalence(const std::vector<fixtures::CorpusProblem>& problems) {
  Verdict v;
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  std::size_t points = 0;
  for (const auto& p : problems) {
    std::vector<double> x0(p.n);
    for (auto& xi : x0) xi = U(rng);
    Options opts;
    StructurePattern pattern = probe_structure(p.funcs, x0, opts);
    const CheckReport chk = verify_at_start(p.funcs, x0, pattern, opts);
    v.expect(chk.passed, fmt::format("problem {:x}: check failed", p.seed));
    const JacobianAssembler jac(p.funcs, pattern);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> x(p.n);
      for (auto& xi : x) xi = U(rng);
      SweepCounter counter;
      const Assembly a = jac(x, &counter);
      const JacobianProduct full = full_jacobian(p.funcs, x);
      ++points;
      v.expect(counter.last_width == pattern.nonlinear_vars().size(),
               fmt::format("problem {:x}: carried {} components, {} nonlinear vars", p.seed, counter.last_width,
                           pattern.nonlinear_vars().size()));
      const Eigen::MatrixXd dense = a.J.to_dense();
      for (std::size_t i = 0; i < pattern.neF(); ++i) {
        for (std::size_t j = 0; j < p.n; ++j) {
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          const double want = full.JS(ii, jj);
          switch (pattern.at(i, j).kind) {
            case EntryKind::Constant:
              v.expect(dense(ii, jj) == want,
                       fmt::format("problem {:x}: constant ({},{}) {} vs {}", p.seed, i + 1, j + 1, dense(ii, jj), want));
              break;
            case EntryKind::Nonlinear:
              v.expect(std::fabs(dense(ii, jj) - want) <= pattern.tau(),
                       fmt::format("problem {:x}: nonlinear ({},{})", p.seed, i + 1, j + 1));
              break;
            case EntryKind::Zero:
              v.expect(dense(ii, jj) == 0.0 && std::fabs(want) <= pattern.tau(),
                       fmt::format("problem {:x}: zero ({},{}) is {}", p.seed, i + 1, j + 1, want));
              break;
          }
        }
      }
      for (std::size_t i = 0; i < a.F.size(); ++i) v.expect(a.F[i] == full.F[i], "F differs");
    }
  }
  v.detail = fmt::format("{} problems x 10 points = {} assemblies", problems.size(), points);
  return v;
}

// 5 -------------------------------------------------------------------------
Verdict linear_feasibility(const std::vector<fixtures::CorpusProblem>& problems) {
  Verdict v;
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::size_t used = 0, iterates = 0;
  std::map<ExitStatus, int> exits;
  for (const auto& p : problems) {
    const std::size_t neF = p.rows.size();
    bool has_linear = false;
    for (std::size_t i = 1; i < neF; ++i) has_linear = has_linear || p.linear[i];
    if (!has_linear) continue;
    ++used;

    ProblemSpec spec = default_spec(p.n, neF);
    std::vector<double> xref(p.n);
    for (auto& xi : xref) xi = U(rng);
    for (std::size_t j = 0; j < p.n; ++j) {
      spec.x0[j] = 2.0 * U(rng);
      spec.xlow[j] = -3.0;
      spec.xupp[j] = 3.0;
    }
    const auto Fref = eval_rows(p.funcs, xref);
    for (std::size_t i = 1; i < neF; ++i) {
      if (p.linear[i] && i % 2 == 1) {
        spec.Flow[i] = spec.Fupp[i] = Fref[i];
      } else {
        spec.Flow[i] = Fref[i] - 0.5;
        spec.Fupp[i] = Fref[i] + 0.5;
      }
    }
    const PipelineResult r = run_pipeline(spec, p.funcs, Options{});
    if (!r.solution) {
      v.expect(false, fmt::format("problem {:x}: not solved", p.seed));
      continue;
    }
    ++exits[r.solution->exit];
    for (const auto& rec : r.solution->trace) {
      ++iterates;
      const auto F = eval_rows(p.funcs, rec.x);
      for (std::size_t i = 1; i < neF; ++i) {
        if (!p.linear[i]) continue;
        const double viol = std::max({0.0, spec.Flow[i] - F[i], F[i] - spec.Fupp[i]});
        v.expect(viol <= 1e-6, fmt::format("problem {:x} iter {}: linear row {} violated by {:.2e}", p.seed,
                                           rec.iter, i + 1, viol));
      }
    }
  }
  v.expect(used > 0, "no corpus problem has a linear constraint row");
  std::string tally;
  for (const auto& [e, c] : exits) tally += fmt::format(" {}={}", to_string(e), c);
  v.detail = fmt::format("{} problems, {} iterates;{}", used, iterates, tally);
  return v;
}

// 6 -------------------------------------------------------------------------
Verdict validation_catches_corruption(const std::vector<fixtures::CorpusProblem>& problems) {
  Verdict v;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  int trials = 0, caught = 0, wrong_constant = 0, false_zero = 0;
  for (std::size_t k = 0; trials < 100; ++k) {
    const auto& p = problems[k % problems.size()];
    std::vector<double> x0(p.n);
    for (auto& xi : x0) xi = U(rng);
    Options opts;
    StructurePattern pattern = probe_structure(p.funcs, x0, opts);
    {
      StructurePattern copy = pattern;
      if (!verify_at_start(p.funcs, x0, copy, opts).passed) continue;
      pattern = copy;
    }
    ConstantCache cache = init_cache(pattern);
    std::vector<std::pair<std::size_t, std::size_t>> nonzero;
    for (std::size_t i = 0; i < pattern.neF(); ++i) {
      for (std::size_t j = 0; j < p.n; ++j) {
        if (pattern.at(i, j).kind != EntryKind::Zero) nonzero.emplace_back(i, j);
      }
    }
    if (nonzero.empty()) continue;

    const bool corrupt_cache = trials % 2 == 0 && !cache.entries.empty();
    if (corrupt_cache) {
      ++wrong_constant;
      auto& e = cache.entries[std::uniform_int_distribution<std::size_t>(0, cache.entries.size() - 1)(rng)];
      const double mag = std::uniform_real_distribution<double>(0.01, 1.0)(rng) * std::max(1.0, std::fabs(e.value));
      e.value += (rng() & 1) ? mag : -mag;
    } else {
      ++false_zero;
      const auto [i, j] = nonzero[std::uniform_int_distribution<std::size_t>(0, nonzero.size() - 1)(rng)];
      pattern.set(i, j, EntryClass::zero());
      cache = init_cache(pattern);
    }
    ++trials;
    const CheckReport chk = verify_at_start(p.funcs, x0, pattern, opts, &cache);
    const bool detected = !chk.passed || !chk.pattern_mismatches.empty();
    caught += detected;
    v.expect(detected, fmt::format("problem {:x}: {} not detected", p.seed, corrupt_cache ? "wrong constant" : "false zero"));
  }

  // Local-pattern trap: the probes see dg/dt = 1 everywhere, x0 sits in the bump.
  const FunctionSet f = fixtures::trap_functions();
  const ProblemSpec spec = fixtures::trap_spec();
  const PipelineResult r = run_pipeline(spec, f, Options{});
  v.expect(r.probed.at(1, 1).kind == EntryKind::Constant, "trap: probes did not see a constant");
  v.expect(r.pattern.at(1, 1).kind == EntryKind::Nonlinear, "trap: not reclassified");
  v.expect(r.check.passed, "trap: check failed");
  double dx = 1e9;
  if (r.solution) {
    const Solution& s = *r.solution;
    dx = std::max(std::fabs(s.x[0] - 2.0), std::fabs(s.x[1] - fixtures::Trap::target_t));
    v.expect(s.exit == ExitStatus::Optimal, fmt::format("trap exit {}", to_string(s.exit)));
    v.expect(dx <= 1e-6, fmt::format("trap solution off by {:.2e}", dx));
  } else {
    v.expect(false, "trap: not solved");
  }
  v.detail = fmt::format("{}/{} caught ({} wrong constants, {} false zeros); trap |dx|={:.1e}", caught, trials,
                         wrong_constant, false_zero, dx);
  return v;
}

// 7 -------------------------------------------------------------------------
struct Call {
  int status;
  std::vector<double> x;
};

Verdict protocol_conformance(const std::vector<fixtures::CorpusProblem>& problems) {
  Verdict v;
  auto check_handshake = [&](const std::vector<Call>& calls, const std::string& name) {
    const auto first = std::count_if(calls.begin(), calls.end(), [](const Call& c) { return c.status == 1; });
    const auto last = std::count_if(calls.begin(), calls.end(), [](const Call& c) { return c.status >= 2; });
    v.expect(first == 1 && !calls.empty() && calls.front().status == 1, name + ": Status=1 not exactly once first");
    v.expect(last == 1 && !calls.empty() && calls.back().status >= 2, name + ": Status>=2 not exactly once last");
  };
  auto recording = [](std::vector<Call>& calls, std::function<int(int, std::size_t)> script = {}) {
    SolveHooks h;
    h.monitor = [&calls, script](int status, std::span<const double> x) {
      calls.push_back({status, {x.begin(), x.end()}});
      return script ? script(status, calls.size()) : 0;
    };
    return h;
  };

  // Plain solves of the fixture, its feasibility variant and corpus problems.
  int solves = 0;
  {
    std::vector<Call> calls;
    run_pipeline(fixtures::toy_spec(), fixtures::toy_functions(), Options{}, recording(calls));
    check_handshake(calls, "fixture");
    ++solves;
  }
  {
    std::vector<Call> calls;
    run_pipeline(fixtures::toy_spec(0), fixtures::toy_functions(), Options{}, recording(calls));
    check_handshake(calls, "feasibility");
    ++solves;
  }
  for (std::size_t k = 0; k < 30; ++k) {
    const auto& p = problems[k];
    ProblemSpec spec = default_spec(p.n, p.rows.size());
    std::vector<Call> calls;
    const PipelineResult r = run_pipeline(spec, p.funcs, Options{}, recording(calls));
    if (r.solution) {
      check_handshake(calls, fmt::format("corpus {:x}", p.seed));
      v.expect(static_cast<std::size_t>(r.solution->evals) + 1 == calls.size(), "evals miscounted");
      ++solves;
    }
  }

  // mode = -1 on a few calls: each retry halves the step from the same base.
  int halvings_seen = 0;
  for (int reject : {3, 5, 8}) {
    std::vector<Call> calls;
    std::set<std::size_t> rejected;
    const PipelineResult r = run_pipeline(fixtures::toy_spec(), fixtures::toy_functions(), Options{},
                                          recording(calls, [&, reject](int status, std::size_t n) {
                                            if (status == 0 && n >= static_cast<std::size_t>(reject) &&
                                                n < static_cast<std::size_t>(reject) + 2) {
                                              rejected.insert(n);
                                              return -1;
                                            }
                                            return 0;
                                          }));
    check_handshake(calls, fmt::format("reject at {}", reject));
    v.expect(r.solution && r.solution->exit == ExitStatus::Optimal, fmt::format("reject at {}: not optimal", reject));
    // calls n (rejected), n+1 (rejected, half step), n+2 (quarter step)
    const std::size_t n = static_cast<std::size_t>(reject) - 1;
    if (calls.size() > n + 2) {
      for (std::size_t j = 0; j < calls[n].x.size(); ++j) {
        const double base1 = 2 * calls[n + 1].x[j] - calls[n].x[j];
        const double base2 = 2 * calls[n + 2].x[j] - calls[n + 1].x[j];
        v.expect(std::fabs(base1 - base2) <= 1e-12 * std::max(1.0, std::fabs(base1)),
                 fmt::format("reject at {}: retries are not halvings", reject));
      }
      ++halvings_seen;
    }
  }
  v.expect(halvings_seen == 3, "halving sequences not observed");

  // mode = -1 forever: retries stop after retry_budget halvings.
  for (int budget : {0, 3, 10}) {
    Options opts;
    opts.retryBudget = budget;
    std::vector<Call> calls;
    int refusals = 0;
    const PipelineResult r = run_pipeline(fixtures::toy_spec(), fixtures::toy_functions(), opts,
                                          recording(calls, [&](int status, std::size_t n) {
                                            if (status == 0 && n >= 3) {
                                              ++refusals;
                                              return -1;
                                            }
                                            return 0;
                                          }));
    check_handshake(calls, fmt::format("budget {}", budget));
    v.expect(r.solution && r.solution->exit == ExitStatus::EvalError, fmt::format("budget {}: not EvalError", budget));
    v.expect(refusals == budget + 1, fmt::format("budget {}: {} refused calls", budget, refusals));
  }

  // mode = -2 aborts.
  for (int at : {1, 2, 3, 6}) {
    std::vector<Call> calls;
    const PipelineResult r = run_pipeline(fixtures::toy_spec(), fixtures::toy_functions(), Options{},
                                          recording(calls, [at](int status, std::size_t n) {
                                            return status < 2 && n == static_cast<std::size_t>(at) ? -2 : 0;
                                          }));
    check_handshake(calls, fmt::format("abort at {}", at));
    v.expect(r.solution && r.solution->exit == ExitStatus::UserAbort, fmt::format("abort at {}: not UserAbort", at));
    v.expect(r.solution && r.solution->evals == at, fmt::format("abort at {}: evals", at));
    v.expect(calls.size() == static_cast<std::size_t>(at) + 1, fmt::format("abort at {}: evaluated after abort", at));
  }
  v.detail = fmt::format("{} clean solves, halving, budgets 0/3/10, aborts", solves);
  return v;
}

// 8 -------------------------------------------------------------------------
Verdict feasibility_only() {
  Verdict v;
  // Direct substitution of the witness (1,1,0,3).
  const double x1 = 1, x2 = 1, x3 = 0, x4 = 3;
  v.expect(x1 >= 0 && x4 >= 0, "witness bounds");
  v.expect(4 * x2 + 2 * x3 >= 0, "witness linear row");
  v.expect(x1 + x2 * x2 + x3 * x3 == 2, "witness row 3");
  v.expect(std::pow(x2, 4) + std::pow(x3, 4) + x4 == 4, "witness row 4");
  const ProblemSpec spec = finalize_spec(fixtures::toy_spec(0), Options{});
  const std::vector<double> w{x1, x2, x3, x4};
  v.expect(constraint_violation(spec, w, eval_rows(fixtures::toy_functions(), w)) == 0.0, "witness violation");

  const ParsedProblem p = parse_problem_file(read_text_file(fixtures::data_path("prob_feasibility.txt")));
  v.expect(p.spec.obj_row == 0, "feasibility file has an objective");
  const PipelineResult r = run_pipeline(p.spec, p.funcs, Options{});
  double viol = 1e9;
  if (r.solution) {
    const auto& x = r.solution->x;
    viol = std::max({0.0, -x[0], -x[3], -(4 * x[1] + 2 * x[2]), std::fabs(x[0] + x[1] * x[1] + x[2] * x[2] - 2),
                     std::fabs(std::pow(x[1], 4) + std::pow(x[2], 4) + x[3] - 4)});
    v.expect(r.solution->exit == ExitStatus::Feasible, fmt::format("exit {}", to_string(r.solution->exit)));
    v.expect(viol <= 1e-6, fmt::format("violation {:.2e}", viol));
    v.expect(r.solution->violation <= 1e-6, "reported violation");
  } else {
    v.expect(false, "not solved");
  }
  std::ostringstream out, err;
  v.expect(run_cli({"jacopt", fixtures::data_path("prob_feasibility.txt")}, out, err) == 0, "cli exit code");
  v.detail = fmt::format("violation {:.1e}", viol);
  return v;
}

}  // namespace

int main() {
  const auto problems = corpus();
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"fixture end-to-end", fixture_end_to_end},
      {"structure detection", structure_detection},
      {"AD correctness", [&] { return ad_correctness(problems); }},
      {"constant-cache equivalence", [&] { return cache_equivalence(problems); }},
      {"linear feasibility maintenance", [&] { return linear_feasibility(problems); }},
      {"validation catches corruption", [&] { return validation_catches_corruption(problems); }},
      {"protocol conformance", [&] { return protocol_conformance(problems); }},
      {"feasibility-only mode", feasibility_only},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].run();
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = v.failures == 0;
    failed += !ok;
    fmt::print("{} {} {}: {}\n", ok ? "PASS" : "FAIL", k + 1, criteria[k].name, v.detail);
    for (const auto& why : v.problems) fmt::print("     {}\n", why);
    if (v.failures > static_cast<int>(v.problems.size())) {
      fmt::print("     ... {} failures in total\n", v.failures);
    }
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
