#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crowdcache/game.hpp"
#include "crowdcache/graph.hpp"
#include "crowdcache/rng.hpp"
#include "crowdcache/solvers.hpp"

namespace crowdcache {

/// Sampling laws for the reference experiment setup: unit price normalized to
/// 1, quadratic costs U[0.01, 0.1], linear costs U[0.05, 0.15], capacities
/// uniform over {16, 32, 48, 64} GB.
///
/// The price sensitivity gamma is a required knob with a documented default:
/// gamma <= 0 selects 0.02/N. That keeps gamma * sum(x) a modest fraction of
/// the unit price at every scale (equilibrium prices stay near 0.8 rather
/// than collapsing toward the linear-cost floor), which is the regime where
/// raising the quadratic-cost scale lowers both supply and realized utility.
struct BaseCaseSpec {
  std::size_t n_meds = 512;
  double p_bar = 1.0;
  double q_low = 0.01;
  double q_high = 0.1;
  double h_low = 0.05;
  double h_high = 0.15;
  std::vector<double> cap_choices = {16.0, 32.0, 48.0, 64.0};
  double gamma = 0.0;  // <= 0: use 0.02 / n_meds
  std::uint64_t seed = 0;
};

GameParams sample_base_case(const BaseCaseSpec& spec, Rng& rng);

/// Multiplicative scaling of gamma, p_bar, and all q_i. All factors 1
/// reproduces the base parameters exactly.
struct SensitivityFactors {
  double gamma_scale = 1.0;
  double price_scale = 1.0;
  double qcost_scale = 1.0;
};

GameParams apply_factors(const GameParams& params, const SensitivityFactors& factors);

/// The fixed-fraction baselines: tentatively offer fraction * cap_i, then
/// synchronously zero every device whose utility is non-positive, repeating
/// until a fixpoint (one device's exit raises the price and can flip others).
/// fraction = 0.2 is the hand-tuned "Heuristic", 0.5 the "Average" scheme.
StrategyProfile baseline_fraction(const GameParams& params, double fraction);

/// Knobs for generating communication graph sequences in experiments.
struct GraphConfig {
  double radius_min = 150.0;
  double radius_max = 200.0;
  double max_step = 10.0;
  BoundingBox box{0.0, 0.0, 1000.0, 1000.0};
  int window_b = 1;
  std::size_t length = 64;
};

GraphSequence build_sequence(std::size_t n, const GraphConfig& cfg, std::uint64_t graph_seed,
                             bool with_diagnostics);
GraphSequence build_sequence(std::size_t n, const GraphConfig& cfg, const DevicePositions& pos,
                             std::uint64_t graph_seed, bool with_diagnostics);

/// One shared game and graph sequence, four solvers: the centralized
/// iteration, the consensus solver, and the momentum variant at two betas.
struct ComparisonConfig {
  SolverConfig solver;  // alpha/tol/max_iters/init shared by all four runs
  double beta1 = 0.5;
  double beta2 = 0.8;
};

std::vector<RunTrace> run_convergence_comparison(const GameParams& params,
                                                 const ComparisonConfig& cfg,
                                                 const GraphSequence& graphs);

struct ScalingRow {
  std::size_t n;
  std::string algorithm;
  std::size_t rep;
  std::size_t iterations;
  double wall_time_s;
  bool converged;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  double mean_iterations(std::size_t n, const std::string& algorithm) const;
  double mean_wall_time(std::size_t n, const std::string& algorithm) const;
};

struct ScalingConfig {
  std::vector<std::size_t> sizes = {256, 512, 1024, 2048, 4096};
  std::size_t reps = 20;
  SolverConfig solver;
  double beta = 0.5;  // momentum for the -m column
  BaseCaseSpec base;
  GraphConfig graph;
  std::size_t workers = 0;  // 0: hardware concurrency capped by CROWDCACHE_THREADS
};

/// Per size and replication, runs dcrowdcache and dcrowdcache-m on the same
/// sampled game and graph sequence and records iterations and wall time.
ScalingTable run_scaling_study(const ScalingConfig& cfg);

enum class SweepFactor { Gamma, Price, QCost };
enum class SweepAlgorithm { Proposed, Heuristic, Average };

std::string to_string(SweepFactor factor);
std::string to_string(SweepAlgorithm algorithm);

struct SweepRecord {
  SweepFactor factor;
  double level;
  std::string algorithm;
  std::size_t rep;
  double avg_utility;       // mean device utility at the clamped final profile
  double total_resources;   // sum of the clamped final profile
  std::size_t iterations;   // 0 for the closed-form baselines
};

struct SweepResult {
  SweepFactor factor = SweepFactor::Gamma;
  std::vector<SweepRecord> records;
  double level_mean_utility(double level, const std::string& algorithm) const;
  double level_mean_resources(double level, const std::string& algorithm) const;
};

struct SweepConfig {
  SweepFactor factor = SweepFactor::Gamma;
  std::vector<double> levels = {0.5, 0.75, 1.0, 1.25, 1.5};
  std::size_t reps = 20;
  /// Paired mode (default) samples one game per rep and reuses it across all
  /// levels; resample_per_level draws fresh parameters per (rep, level).
  bool resample_per_level = false;
  std::vector<SweepAlgorithm> algorithms = {SweepAlgorithm::Proposed, SweepAlgorithm::Heuristic,
                                            SweepAlgorithm::Average};
  BaseCaseSpec base;
  GraphConfig graph;
  SolverConfig solver;
  std::size_t workers = 0;
};

SweepResult run_sensitivity(const SweepConfig& cfg);

/// The (unscaled) base game a sweep replication samples; exposed so the exact
/// per-rep instances can be reproduced outside the sweep.
GameParams sweep_rep_params(const SweepConfig& cfg, std::size_t rep, std::size_t level_idx);

/// Worker-count default: CROWDCACHE_THREADS if set, else hardware concurrency.
std::size_t default_worker_count();

}  // namespace crowdcache
