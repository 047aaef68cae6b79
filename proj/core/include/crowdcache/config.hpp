#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdcache/experiments.hpp"
#include "crowdcache/game.hpp"
#include "crowdcache/solvers.hpp"

namespace crowdcache {

enum class RunMode { Solve, Compare, Scale, Sweep, Diagnose };
enum class AlgorithmKind { Centralized, DCrowdCache, DCrowdCacheM };

std::string to_string(RunMode mode);
std::string to_string(AlgorithmKind algorithm);

/// Explicit seeds for the three independent random streams. Wall-clock
/// seeding is deliberately impossible; every run is reproducible.
struct Seeds {
  std::uint64_t params = 0;
  std::uint64_t graph = 1;
  std::uint64_t init = 2;
};

/// Fully resolved run configuration. parse_config() fills defaults, rejects
/// unknown keys, and validates ranges; resolved_config_json() dumps the
/// complete effective configuration, which parses back to the same RunConfig.
struct RunConfig {
  RunMode mode = RunMode::Solve;
  std::string description;
  AlgorithmKind algorithm = AlgorithmKind::DCrowdCache;
  std::string out_dir = "out";
  bool quiet = false;

  std::optional<GameParams> inline_params;  // exactly one of these two is set
  std::optional<BaseCaseSpec> base_case;    // (scale/sweep require base_case)

  SolverConfig solver;
  GraphConfig graph;
  std::optional<std::string> positions_csv;
  bool export_snapshots = false;
  Seeds seeds;

  // sweep mode
  SweepFactor sweep_factor = SweepFactor::Gamma;
  std::vector<double> sweep_levels = {0.5, 0.75, 1.0, 1.25, 1.5};
  std::size_t sweep_reps = 20;
  bool sweep_resample = false;

  // scale mode
  std::vector<std::size_t> scale_sizes = {256, 512, 1024, 2048, 4096};
  std::size_t scale_reps = 20;
  double scale_beta = 0.5;

  // compare mode
  double compare_beta1 = 0.5;
  double compare_beta2 = 0.8;
};

/// Parses and validates a JSON configuration document. Unknown keys are
/// rejected by name; all defaults are applied here and nowhere else.
RunConfig parse_config(const std::string& text);

/// The complete effective configuration as JSON (round-trips through
/// parse_config).
std::string resolved_config_json(const RunConfig& config);

}  // namespace crowdcache
