#include "crowdcache/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>

#include "crowdcache/errors.hpp"

namespace crowdcache {

namespace {

// Stream roles for deriving per-job generators from one master seed.
enum : std::uint64_t { kStreamParams = 1, kStreamGraph = 2 };

std::uint64_t job_stream(std::uint64_t role, std::uint64_t a, std::uint64_t b) {
  return role ^ (a + 1) * 0x100000001b3ULL ^ (b + 1) * 0x9e3779b97f4a7c15ULL;
}

void parallel_jobs(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(workers, count);
  pool.reserve(n_threads);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

double clamped_mean_utility(const GameParams& params, const StrategyProfile& raw) {
  const StrategyProfile x = project_box(params, raw.x);
  double total = 0.0;
  for (std::size_t i = 0; i < params.n_meds; ++i) total += utility(params, i, x);
  return total / static_cast<double>(params.n_meds);
}

double clamped_total_resources(const GameParams& params, const StrategyProfile& raw) {
  const StrategyProfile x = project_box(params, raw.x);
  double total = 0.0;
  for (double v : x.x) total += v;
  return total;
}

}  // namespace

std::size_t default_worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CROWDCACHE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
  }
  return n;
}

GameParams sample_base_case(const BaseCaseSpec& spec, Rng& rng) {
  if (spec.n_meds == 0) throw InvalidInputError("n_meds must be positive");
  if (spec.cap_choices.empty()) throw InvalidInputError("cap_choices must be nonempty");
  const std::size_t n = spec.n_meds;
  std::vector<double> q(n), h(n), cap(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = rng.uniform(spec.q_low, spec.q_high);
  for (std::size_t i = 0; i < n; ++i) h[i] = rng.uniform(spec.h_low, spec.h_high);
  for (std::size_t i = 0; i < n; ++i) {
    cap[i] = spec.cap_choices[rng.uniform_index(spec.cap_choices.size())];
  }
  const double gamma = spec.gamma > 0.0 ? spec.gamma : 0.02 / static_cast<double>(n);
  return GameParams::make(n, spec.p_bar, gamma, std::move(q), std::move(h), std::move(cap));
}

GameParams apply_factors(const GameParams& params, const SensitivityFactors& factors) {
  std::vector<double> q = params.q;
  for (double& v : q) v *= factors.qcost_scale;
  return GameParams::make(params.n_meds, params.p_bar * factors.price_scale,
                          params.gamma * factors.gamma_scale, std::move(q), params.h, params.cap);
}

StrategyProfile baseline_fraction(const GameParams& params, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidInputError("fraction must lie in (0, 1]");
  }
  std::vector<double> x(params.n_meds);
  for (std::size_t i = 0; i < params.n_meds; ++i) x[i] = fraction * params.cap[i];

  for (std::size_t pass = 0; pass < params.n_meds; ++pass) {
    const StrategyProfile profile = StrategyProfile::unconstrained(x);
    bool changed = false;
    std::vector<bool> drop(params.n_meds, false);
    for (std::size_t i = 0; i < params.n_meds; ++i) {
      if (x[i] > 0.0 && utility(params, i, profile) <= 0.0) drop[i] = true;
    }
    for (std::size_t i = 0; i < params.n_meds; ++i) {
      if (drop[i]) {
        x[i] = 0.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return StrategyProfile::feasible(params, std::move(x));
}

GraphSequence build_sequence(std::size_t n, const GraphConfig& cfg, std::uint64_t graph_seed,
                             bool with_diagnostics) {
  Rng rng(graph_seed);
  DevicePositions pos = uniform_positions(n, cfg.box, cfg.radius_min, cfg.radius_max, rng);
  return generate_mobility_sequence(std::move(pos), cfg.length, cfg.max_step, cfg.box,
                                    cfg.window_b, rng, with_diagnostics);
}

GraphSequence build_sequence(std::size_t n, const GraphConfig& cfg, const DevicePositions& pos,
                             std::uint64_t graph_seed, bool with_diagnostics) {
  if (pos.size() != n) throw InvalidInputError("positions do not match n_meds");
  Rng rng(graph_seed);
  return generate_mobility_sequence(pos, cfg.length, cfg.max_step, cfg.box, cfg.window_b, rng,
                                    with_diagnostics);
}

std::vector<RunTrace> run_convergence_comparison(const GameParams& params,
                                                 const ComparisonConfig& cfg,
                                                 const GraphSequence& graphs) {
  const StrategyProfile ne = solve_ne_oracle(params);
  SolveHooks hooks;
  hooks.ne_hint = &ne;

  std::vector<RunTrace> traces;
  auto run = [&](const std::string& label, auto&& solve) {
    try {
      RunTrace trace = solve();
      trace.algorithm = label;
      traces.push_back(std::move(trace));
    } catch (const std::exception& e) {
      throw SolverFailureError(label + ": " + e.what());
    }
  };

  run("cen-crowdcache", [&] { return solve_centralized(params, cfg.solver, hooks).trace; });
  run("dcrowdcache", [&] { return solve_dcrowdcache(params, cfg.solver, graphs, hooks).trace; });
  SolverConfig m1 = cfg.solver;
  m1.beta = cfg.beta1;
  run("dcrowdcache-m1", [&] { return solve_dcrowdcache_m(params, m1, graphs, hooks).trace; });
  SolverConfig m2 = cfg.solver;
  m2.beta = cfg.beta2;
  run("dcrowdcache-m2", [&] { return solve_dcrowdcache_m(params, m2, graphs, hooks).trace; });
  return traces;
}

double ScalingTable::mean_iterations(std::size_t n, const std::string& algorithm) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const ScalingRow& row : rows) {
    if (row.n == n && row.algorithm == algorithm) {
      total += static_cast<double>(row.iterations);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double ScalingTable::mean_wall_time(std::size_t n, const std::string& algorithm) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const ScalingRow& row : rows) {
    if (row.n == n && row.algorithm == algorithm) {
      total += row.wall_time_s;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

ScalingTable run_scaling_study(const ScalingConfig& cfg) {
  if (cfg.reps == 0) throw InvalidInputError("reps must be >= 1");
  const std::size_t workers = cfg.workers > 0 ? cfg.workers : default_worker_count();
  const Rng master(cfg.base.seed);

  const std::size_t jobs = cfg.sizes.size() * cfg.reps;
  std::vector<std::vector<ScalingRow>> results(jobs);
  parallel_jobs(jobs, workers, [&](std::size_t job) {
    const std::size_t size_idx = job / cfg.reps;
    const std::size_t rep = job % cfg.reps;
    const std::size_t n = cfg.sizes[size_idx];

    BaseCaseSpec spec = cfg.base;
    spec.n_meds = n;
    Rng params_rng = master.derive(job_stream(kStreamParams, size_idx, rep));
    const GameParams params = sample_base_case(spec, params_rng);
    const GraphSequence graphs = build_sequence(
        n, cfg.graph, master.derive(job_stream(kStreamGraph, size_idx, rep)).next_u64(), false);
    const StrategyProfile ne = solve_ne_oracle(params);
    SolveHooks hooks;
    hooks.ne_hint = &ne;

    const SolveResult plain = solve_dcrowdcache(params, cfg.solver, graphs, hooks);
    SolverConfig momentum_cfg = cfg.solver;
    momentum_cfg.beta = cfg.beta;
    const SolveResult momentum = solve_dcrowdcache_m(params, momentum_cfg, graphs, hooks);

    results[job] = {
        {n, "dcrowdcache", rep, plain.trace.iterations, plain.trace.wall_time_s,
         plain.trace.converged},
        {n, "dcrowdcache-m", rep, momentum.trace.iterations, momentum.trace.wall_time_s,
         momentum.trace.converged},
    };
  });

  ScalingTable table;
  for (auto& rows : results) {
    for (ScalingRow& row : rows) table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_string(SweepFactor factor) {
  switch (factor) {
    case SweepFactor::Gamma: return "gamma";
    case SweepFactor::Price: return "price";
    case SweepFactor::QCost: return "qcost";
  }
  return "?";
}

std::string to_string(SweepAlgorithm algorithm) {
  switch (algorithm) {
    case SweepAlgorithm::Proposed: return "proposed";
    case SweepAlgorithm::Heuristic: return "heuristic";
    case SweepAlgorithm::Average: return "average";
  }
  return "?";
}

double SweepResult::level_mean_utility(double level, const std::string& algorithm) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const SweepRecord& r : records) {
    if (r.level == level && r.algorithm == algorithm) {
      total += r.avg_utility;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double SweepResult::level_mean_resources(double level, const std::string& algorithm) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const SweepRecord& r : records) {
    if (r.level == level && r.algorithm == algorithm) {
      total += r.total_resources;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

SweepResult run_sensitivity(const SweepConfig& cfg) {
  if (cfg.levels.empty()) throw InvalidInputError("levels must be nonempty");
  for (double level : cfg.levels) {
    if (!(level > 0.0)) throw InvalidInputError("levels must be positive");
  }
  if (cfg.reps == 0) throw InvalidInputError("reps must be >= 1");
  const std::size_t workers = cfg.workers > 0 ? cfg.workers : default_worker_count();
  const Rng master(cfg.base.seed);

  struct Job {
    std::size_t rep;
    std::size_t level_idx;
  };
  std::vector<Job> jobs;
  jobs.reserve(cfg.reps * cfg.levels.size());
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) jobs.push_back({rep, li});
  }

  std::vector<std::vector<SweepRecord>> results(jobs.size());
  parallel_jobs(jobs.size(), workers, [&](std::size_t idx) {
    const auto [rep, level_idx] = jobs[idx];
    const double level = cfg.levels[level_idx];

    const GameParams base_params = sweep_rep_params(cfg, rep, level_idx);

    SensitivityFactors factors;
    switch (cfg.factor) {
      case SweepFactor::Gamma: factors.gamma_scale = level; break;
      case SweepFactor::Price: factors.price_scale = level; break;
      case SweepFactor::QCost: factors.qcost_scale = level; break;
    }
    const GameParams params = apply_factors(base_params, factors);

    std::vector<SweepRecord>& out = results[idx];
    for (SweepAlgorithm algorithm : cfg.algorithms) {
      SweepRecord record;
      record.factor = cfg.factor;
      record.level = level;
      record.algorithm = to_string(algorithm);
      record.rep = rep;
      if (algorithm == SweepAlgorithm::Proposed) {
        const GraphSequence graphs = build_sequence(
            params.n_meds, cfg.graph, master.derive(job_stream(kStreamGraph, rep, 0)).next_u64(),
            false);
        const SolveResult solved = solve_dcrowdcache(params, cfg.solver, graphs);
        record.avg_utility = clamped_mean_utility(params, solved.profile);
        record.total_resources = clamped_total_resources(params, solved.profile);
        record.iterations = solved.trace.iterations;
      } else {
        const double fraction = algorithm == SweepAlgorithm::Heuristic ? 0.2 : 0.5;
        const StrategyProfile x = baseline_fraction(params, fraction);
        record.avg_utility = clamped_mean_utility(params, x);
        record.total_resources = clamped_total_resources(params, x);
        record.iterations = 0;
      }
      out.push_back(record);
    }
  });

  SweepResult result;
  result.factor = cfg.factor;
  for (auto& rows : results) {
    for (SweepRecord& r : rows) result.records.push_back(std::move(r));
  }
  return result;
}

GameParams sweep_rep_params(const SweepConfig& cfg, std::size_t rep, std::size_t level_idx) {
  const Rng master(cfg.base.seed);
  const std::uint64_t stream = cfg.resample_per_level
                                   ? job_stream(kStreamParams, rep, level_idx)
                                   : job_stream(kStreamParams, rep, 0);
  Rng params_rng = master.derive(stream);
  return sample_base_case(cfg.base, params_rng);
}

}  // namespace crowdcache
