#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace crowdcache {

/// Economic constants of one resource-crowdsourcing game instance.
///
/// N devices each offer x_i GB of storage, capped by cap[i]. The platform pays
/// unit price p(x) = p_bar - gamma * sum_j x_j; device i pays a contribution
/// cost q[i]*x_i^2 + h[i]*x_i. gamma and all q[i] must be strictly positive,
/// which makes the game mapping strongly monotone and the equilibrium unique.
struct GameParams {
  std::size_t n_meds = 0;
  double p_bar = 0.0;
  double gamma = 0.0;
  std::vector<double> q;
  std::vector<double> h;
  std::vector<double> cap;

  /// Validates invariants, throws InvalidInputError on violation.
  static GameParams make(std::size_t n_meds, double p_bar, double gamma,
                         std::vector<double> q, std::vector<double> h,
                         std::vector<double> cap);

  std::size_t size() const { return n_meds; }
};

/// JSON (de)serialization, keys: n_meds, p_bar, gamma, q, h, cap.
std::string to_json(const GameParams& params, int indent = 2);
GameParams game_params_from_json(const std::string& text);

/// Constants used by the convergence analysis, derived from GameParams.
///
/// mu is the strong-monotonicity constant of the game mapping. The mapping is
/// affine with symmetric Jacobian A = diag(2 q_i + gamma) + gamma * 11^T, so
/// the tight constant is the smallest eigenvalue of A; that is what is stored
/// here (it equals 2 q + 2 gamma for a single device). l1 and l2 are the own-
/// and cross-coordinate Lipschitz constants of the objective gradients, l is
/// their Euclidean combination, and xi = mu / N enters the step-size matrix.
struct AnalysisConstants {
  double mu = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l = 0.0;
  double xi = 0.0;
};

/// A joint action vector. Feasible profiles satisfy 0 <= x_i <= cap_i; the
/// momentum solver produces transiently unconstrained ones, so feasibility is
/// tracked explicitly rather than assumed.
struct StrategyProfile {
  std::vector<double> x;

  /// Validated constructor: throws if any coordinate leaves [0, cap_i].
  static StrategyProfile feasible(const GameParams& params, std::vector<double> v);
  /// Unvalidated constructor for iterates that may exit the box.
  static StrategyProfile unconstrained(std::vector<double> v);

  bool is_feasible(const GameParams& params, double tol = 0.0) const;
  std::size_t size() const { return x.size(); }
};

/// Unit price p(x) = p_bar - gamma * sum_j x_j. May be negative; the model
/// deliberately applies no floor.
double unit_price(const GameParams& params, const StrategyProfile& x);

/// Contribution cost of device i at offer x_i: q_i x_i^2 + h_i x_i.
double cost(const GameParams& params, std::size_t i, double x_i);

/// Utility of device i: p(x) * x_i - cost_i(x_i). The local objective
/// J_i = -U_i exactly.
double utility(const GameParams& params, std::size_t i, const StrategyProfile& x);
double local_objective(const GameParams& params, std::size_t i, const StrategyProfile& x);

/// dJ_i/dx_i = 2 (q_i + gamma) x_i + gamma * sum_{j != i} x_j + h_i - p_bar.
double gradient(const GameParams& params, std::size_t i, const StrategyProfile& x);

/// Same gradient on a raw length-N buffer (an estimate row, say). The solvers
/// share this exact code path so degenerate cases reduce bit-for-bit.
double gradient_at(const GameParams& params, std::size_t i, const double* x);

/// Stacked own-gradients F(x) = (d J_1/d x_1, ..., d J_N/d x_N).
std::vector<double> game_mapping(const GameParams& params, const StrategyProfile& x);

/// Component-wise clamp of v onto the box prod_i [0, cap_i]. Idempotent.
StrategyProfile project_box(const GameParams& params, const std::vector<double>& v);

AnalysisConstants analysis_constants(const GameParams& params);

/// Extreme eigenvalues of the game-mapping Jacobian diag(2 q_i + gamma) +
/// gamma * 11^T, solved from its secular equation to ~1e-14 relative
/// precision. Used for the strong-monotonicity constant and for picking
/// provably convergent projected-gradient steps.
struct JacobianSpectrumEdges {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};
JacobianSpectrumEdges jacobian_spectrum_edges(const GameParams& params);

}  // namespace crowdcache
