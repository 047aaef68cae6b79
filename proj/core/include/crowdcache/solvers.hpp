#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crowdcache/game.hpp"
#include "crowdcache/graph.hpp"

namespace crowdcache {

/// Row i is device i's current estimate of everyone's actions; entry (i,i) is
/// its own action. Stored row-major.
struct EstimateMatrix {
  std::size_t n = 0;
  std::vector<double> z;

  static EstimateMatrix zeros(std::size_t n) { return {n, std::vector<double>(n * n, 0.0)}; }
  /// Every row equal to the given profile (consensus on x).
  static EstimateMatrix consensus(const StrategyProfile& x);

  double* row(std::size_t i) { return z.data() + i * n; }
  const double* row(std::size_t i) const { return z.data() + i * n; }
  double at(std::size_t i, std::size_t j) const { return z[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return z[i * n + j]; }
  std::vector<double> diagonal() const;
};

/// Frobenius distance between z and the consensus matrix 1 x^T.
double frobenius_error(const EstimateMatrix& z, const StrategyProfile& x);
/// Frobenius distance between z and 1 zhat^T, zhat the mean of the rows.
double disagreement(const EstimateMatrix& z);

enum class InitKind { Zeros, SeededUniform };
enum class StoppingRule { OracleRelative, SelfRelative };

struct SolverConfig {
  double alpha = 0.05;
  double beta = 0.0;        // heavy-ball momentum, used by the -m solver only
  double tol = 1e-6;        // relative stopping tolerance
  std::size_t max_iters = 100000;
  InitKind init = InitKind::Zeros;
  std::uint64_t init_seed = 0;
  /// OracleRelative stops on ||x_k - x*|| / max(||x_0 - x*||, 1e-15) < tol
  /// (diagnostic mode, needs the equilibrium); SelfRelative stops on
  /// ||z_{k+1} - z_k||_F / max(||z_k||_F, 1) < tol and needs no oracle.
  StoppingRule stopping = StoppingRule::OracleRelative;
  /// Clamp actions again after the momentum term. Off by default: the printed
  /// method adds momentum after the projection, so actions may transiently
  /// exit the box.
  bool momentum_clamp = false;
};

struct TraceRecord {
  std::size_t k;
  double err_z;        // ||z_k - 1 (x*)^T||_F (equals err_x for the centralized run)
  double err_x;        // ||x_k - x*||
  double disagreement; // ||z_k - 1 zhat^T||_F (0 for the centralized run)
};

struct RunTrace {
  std::string algorithm;
  std::vector<TraceRecord> records;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  bool converged = false;
  double final_relative_error = 0.0;
};

struct SolveResult {
  StrategyProfile profile;  // final actions; may exit the box under momentum
  RunTrace trace;
};

/// Test and instrumentation hooks. All optional.
struct SolveHooks {
  const StrategyProfile* ne_hint = nullptr;           // skip the oracle solve
  const EstimateMatrix* initial_estimates = nullptr;  // decentralized override
  const std::vector<double>* initial_profile = nullptr;  // centralized override
  /// Called once per (iteration, device) with the estimate rows the device's
  /// update read; lets tests verify the update touched neighbors only.
  std::function<void(std::size_t k, std::size_t i, const std::vector<int>& rows)>
      on_rows_touched;
  /// Called with the estimate matrix after each update (k is the new index).
  std::function<void(std::size_t k, const EstimateMatrix& z)> on_iterate;
};

/// The unique Nash equilibrium, solved independently of the iterative
/// algorithms: active-set enumeration for n <= 12, projected gradient with a
/// spectrally safe step otherwise. The result satisfies the fixed-point
/// residual ||x - P[x - F(x)/L]|| < 1e-10.
StrategyProfile solve_ne_oracle(const GameParams& params);
StrategyProfile solve_ne_enumeration(const GameParams& params);
StrategyProfile solve_ne_projected_gradient(const GameParams& params);

/// ||x - P[x - alpha0 F(x)]||, the equilibrium fixed-point residual.
double fixed_point_residual(const GameParams& params, const StrategyProfile& x, double alpha0);

/// Full-information synchronous projected gradient play.
SolveResult solve_centralized(const GameParams& params, const SolverConfig& cfg,
                              const SolveHooks& hooks = {});

/// Consensus gradient play over the graph sequence: each device mixes its
/// neighbors' estimate rows with Metropolis weights, takes a projected
/// gradient step on its own coordinate at the mixed estimate, and adopts the
/// mixed off-diagonal estimates. Uses snapshot k % length at iteration k.
SolveResult solve_dcrowdcache(const GameParams& params, const SolverConfig& cfg,
                              const GraphSequence& graphs, const SolveHooks& hooks = {});

/// The heavy-ball variant: adds beta * (current - previous) to the estimate
/// update and, after the projection, to the action update.
SolveResult solve_dcrowdcache_m(const GameParams& params, const SolverConfig& cfg,
                                const GraphSequence& graphs, const SolveHooks& hooks = {});

/// Step-size certificate for the consensus solver. Qbar is the 2x2 matrix
///   [ 1 - 2 xi a + L^2 a^2          2 c L a              ]
///   [ 2 c L a                       (1 + 2 L a + L^2 a^2) c^2 ]
/// whose largest eigenvalue below 1 certifies per-step linear contraction of
/// ||z_k - 1 (x*)^T||^2; c is the largest snapshot contraction constant.
struct StepSizeReport {
  double alpha_tested = 0.0;
  double lambda_max = 0.0;
  bool q11_positive = false;           // Qbar_11 > 0
  bool det_q_positive = false;         // det(Qbar) > 0
  bool i_minus_q11_positive = false;   // (I - Qbar)_11 > 0
  bool det_i_minus_q_positive = false; // det(I - Qbar) > 0
  double alpha_upper_simple = 0.0;     // 2 xi / L^2
  bool contracts = false;              // lambda_max < 1
};

double qbar_lambda_max(const AnalysisConstants& constants, double c, double alpha);
StepSizeReport step_size_report(const GameParams& params, double c_max, double alpha);

/// Supremum of the initial interval of step-sizes with lambda_max(Qbar) < 1,
/// located to 1e-10 relative precision. Positive for every c in (0,1).
double max_admissible_step(const GameParams& params, double c_max);

}  // namespace crowdcache
