#include "crowdcache/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "crowdcache/errors.hpp"
#include "crowdcache/rng.hpp"

namespace crowdcache {

namespace {

constexpr double kDenominatorFloor = 1e-15;
constexpr double kDivergenceFactor = 1e6;

double clamp_box(double v, double cap) { return std::min(std::max(v, 0.0), cap); }

void validate_config(const SolverConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw InvalidInputError("alpha must be positive");
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) throw InvalidInputError("beta must lie in [0, 1)");
  if (!(cfg.tol > 0.0)) throw InvalidInputError("tol must be positive");
  if (cfg.max_iters == 0) throw InvalidInputError("max_iters must be >= 1");
}

double norm2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

EstimateMatrix initial_estimates(const GameParams& params, const SolverConfig& cfg) {
  const std::size_t n = params.n_meds;
  if (cfg.init == InitKind::Zeros) return EstimateMatrix::zeros(n);
  const double cap_max = *std::max_element(params.cap.begin(), params.cap.end());
  Rng rng(cfg.init_seed);
  EstimateMatrix z = EstimateMatrix::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      z.at(i, c) = (c == i) ? rng.uniform(0.0, params.cap[i]) : rng.uniform(0.0, cap_max);
    }
  }
  return z;
}

std::vector<double> initial_profile(const GameParams& params, const SolverConfig& cfg) {
  if (cfg.init == InitKind::Zeros) return std::vector<double>(params.n_meds, 0.0);
  Rng rng(cfg.init_seed);
  std::vector<double> x(params.n_meds);
  for (std::size_t i = 0; i < params.n_meds; ++i) x[i] = rng.uniform(0.0, params.cap[i]);
  return x;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

EstimateMatrix EstimateMatrix::consensus(const StrategyProfile& x) {
  EstimateMatrix z = EstimateMatrix::zeros(x.size());
  for (std::size_t i = 0; i < z.n; ++i) {
    std::copy(x.x.begin(), x.x.end(), z.row(i));
  }
  return z;
}

std::vector<double> EstimateMatrix::diagonal() const {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

double frobenius_error(const EstimateMatrix& z, const StrategyProfile& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.n; ++i) {
    const double* row = z.row(i);
    for (std::size_t c = 0; c < z.n; ++c) {
      const double d = row[c] - x.x[c];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double disagreement(const EstimateMatrix& z) {
  std::vector<double> mean(z.n, 0.0);
  for (std::size_t i = 0; i < z.n; ++i) {
    const double* row = z.row(i);
    for (std::size_t c = 0; c < z.n; ++c) mean[c] += row[c];
  }
  for (double& m : mean) m /= static_cast<double>(z.n);
  double s = 0.0;
  for (std::size_t i = 0; i < z.n; ++i) {
    const double* row = z.row(i);
    for (std::size_t c = 0; c < z.n; ++c) {
      const double d = row[c] - mean[c];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double fixed_point_residual(const GameParams& params, const StrategyProfile& x, double alpha0) {
  std::vector<double> stepped(params.n_meds);
  for (std::size_t i = 0; i < params.n_meds; ++i) {
    stepped[i] = x.x[i] - alpha0 * gradient_at(params, i, x.x.data());
  }
  const StrategyProfile projected = project_box(params, stepped);
  return norm2(x.x, projected.x);
}

StrategyProfile solve_ne_enumeration(const GameParams& params) {
  const std::size_t n = params.n_meds;
  if (n > 12) throw InvalidInputError("active-set enumeration is limited to n <= 12");
  constexpr double kTol = 1e-9;

  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = (i == j) ? 2.0 * (params.q[i] + params.gamma) : params.gamma;
    }
    b(i) = params.p_bar - params.h[i];
  }

  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;

  std::vector<int> state(n);  // 0: at zero, 1: interior, 2: at cap
  std::vector<double> x(n);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rem = code;
    std::vector<std::size_t> free_set;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(rem % 3);
      rem /= 3;
      x[i] = (state[i] == 2) ? params.cap[i] : 0.0;
      if (state[i] == 1) free_set.push_back(i);
    }

    if (!free_set.empty()) {
      const auto m = static_cast<Eigen::Index>(free_set.size());
      Eigen::MatrixXd a_ff(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = free_set[static_cast<std::size_t>(r)];
        double fixed_term = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (state[j] == 2) fixed_term += a(i, j) * params.cap[j];
        }
        rhs(r) = b(static_cast<Eigen::Index>(i)) - fixed_term;
        for (Eigen::Index s = 0; s < m; ++s) {
          a_ff(r, s) = a(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(free_set[static_cast<std::size_t>(s)]));
        }
      }
      const Eigen::VectorXd sol = a_ff.llt().solve(rhs);
      bool in_box = true;
      for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = free_set[static_cast<std::size_t>(r)];
        if (sol(r) < -kTol || sol(r) > params.cap[i] + kTol) {
          in_box = false;
          break;
        }
        x[i] = clamp_box(sol(r), params.cap[i]);
      }
      if (!in_box) continue;
    }

    bool kkt = true;
    for (std::size_t i = 0; i < n && kkt; ++i) {
      const double g = gradient_at(params, i, x.data());
      if (state[i] == 0 && g < -kTol) kkt = false;  // could profitably increase
      if (state[i] == 2 && g > kTol) kkt = false;   // could profitably decrease
    }
    if (kkt) return StrategyProfile::unconstrained(std::move(x));
  }
  throw SolverFailureError("active-set enumeration found no KKT-consistent assignment");
}

StrategyProfile solve_ne_projected_gradient(const GameParams& params) {
  const std::size_t n = params.n_meds;
  const JacobianSpectrumEdges edges = jacobian_spectrum_edges(params);
  const double step = 2.0 / (edges.lambda_min + edges.lambda_max);
  const AnalysisConstants constants = analysis_constants(params);
  const double residual_step = 1.0 / constants.l;

  std::vector<double> x(n, 0.0);
  std::vector<double> next(n);
  constexpr std::size_t kMaxIters = 10'000'000;
  for (std::size_t k = 0; k < kMaxIters; ++k) {
    double sum = 0.0;
    for (double v : x) sum += v;
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = 2.0 * (params.q[i] + params.gamma) * x[i] +
                          params.gamma * (sum - x[i]) + params.h[i] - params.p_bar;
      next[i] = clamp_box(x[i] - step * grad, params.cap[i]);
    }
    const double change = norm2(x, next);
    double x_norm = 0.0;
    for (double v : next) x_norm += v * v;
    x.swap(next);
    if (change <= 1e-12 * std::max(std::sqrt(x_norm), 1.0)) {
      const StrategyProfile candidate = StrategyProfile::unconstrained(x);
      if (fixed_point_residual(params, candidate, residual_step) < 1e-11) return candidate;
    }
  }
  throw SolverFailureError("projected-gradient equilibrium solve did not converge");
}

StrategyProfile solve_ne_oracle(const GameParams& params) {
  return params.n_meds <= 12 ? solve_ne_enumeration(params) : solve_ne_projected_gradient(params);
}

SolveResult solve_centralized(const GameParams& params, const SolverConfig& cfg,
                              const SolveHooks& hooks) {
  validate_config(cfg);
  const std::size_t n = params.n_meds;
  const StrategyProfile ne = hooks.ne_hint ? *hooks.ne_hint : solve_ne_oracle(params);

  std::vector<double> x =
      hooks.initial_profile ? *hooks.initial_profile : initial_profile(params, cfg);
  if (x.size() != n) throw InvalidInputError("initial profile has wrong length");
  std::vector<double> next(n);

  RunTrace trace;
  trace.algorithm = "cen-crowdcache";
  Timer timer;
  const double denom0 = std::max(norm2(x, ne.x), kDenominatorFloor);

  std::size_t k = 0;
  double self_change = std::numeric_limits<double>::infinity();
  for (;; ++k) {
    const double err = norm2(x, ne.x);
    trace.records.push_back({k, err, err, 0.0});
    const double rel = err / denom0;
    trace.final_relative_error = rel;
    if (cfg.stopping == StoppingRule::OracleRelative && rel < cfg.tol) {
      trace.converged = true;
      break;
    }
    if (cfg.stopping == StoppingRule::SelfRelative && k > 0 && self_change < cfg.tol) {
      trace.converged = true;
      break;
    }
    if (k >= cfg.max_iters) break;
    if (rel > kDivergenceFactor) {
      throw StepSizeTooLargeError("centralized iteration error grew by more than 1e6x");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double g = gradient_at(params, i, x.data());
      next[i] = clamp_box(x[i] - cfg.alpha * g, params.cap[i]);
    }
    if (cfg.stopping == StoppingRule::SelfRelative) {
      double x_norm = 0.0;
      for (double v : x) x_norm += v * v;
      self_change = norm2(next, x) / std::max(std::sqrt(x_norm), 1.0);
    }
    x.swap(next);
  }
  trace.iterations = k;
  trace.wall_time_s = timer.seconds();
  return {StrategyProfile::unconstrained(std::move(x)), std::move(trace)};
}

namespace {

SolveResult run_consensus_solver(const GameParams& params, const SolverConfig& cfg,
                                 const GraphSequence& graphs, double beta,
                                 const std::string& label, const SolveHooks& hooks) {
  validate_config(cfg);
  const std::size_t n = params.n_meds;
  if (graphs.size() == 0) throw InvalidInputError("graph sequence is empty");
  for (const GraphSnapshot& s : graphs.snapshots) {
    if (s.n != n) {
      throw InvalidInputError("graph snapshot size " + std::to_string(s.n) +
                              " does not match n_meds " + std::to_string(n));
    }
  }

  const StrategyProfile ne = hooks.ne_hint ? *hooks.ne_hint : solve_ne_oracle(params);

  EstimateMatrix z_cur =
      hooks.initial_estimates ? *hooks.initial_estimates : initial_estimates(params, cfg);
  if (z_cur.n != n) throw InvalidInputError("initial estimate matrix has wrong size");
  EstimateMatrix z_prev = z_cur;  // z_{-1} = z_0
  EstimateMatrix z_next = EstimateMatrix::zeros(n);

  RunTrace trace;
  trace.algorithm = label;
  Timer timer;
  const double denom0 = std::max(norm2(z_cur.diagonal(), ne.x), kDenominatorFloor);

  std::vector<int> touched;
  std::size_t k = 0;
  double self_change = std::numeric_limits<double>::infinity();
  for (;; ++k) {
    const double err_x = norm2(z_cur.diagonal(), ne.x);
    trace.records.push_back({k, frobenius_error(z_cur, ne), err_x, disagreement(z_cur)});
    const double rel = err_x / denom0;
    trace.final_relative_error = rel;
    if (cfg.stopping == StoppingRule::OracleRelative && rel < cfg.tol) {
      trace.converged = true;
      break;
    }
    if (cfg.stopping == StoppingRule::SelfRelative && k > 0 && self_change < cfg.tol) {
      trace.converged = true;
      break;
    }
    if (k >= cfg.max_iters) break;
    if (rel > kDivergenceFactor) {
      throw StepSizeTooLargeError(label + " error grew by more than 1e6x; reduce alpha");
    }

    const GraphSnapshot& graph = graphs.at_step(k);
    for (std::size_t i = 0; i < n; ++i) {
      // Mix the neighbor rows only; this loop is the entire information the
      // device receives, so locality is structural rather than a convention.
      double* r = z_next.row(i);
      std::fill(r, r + n, 0.0);
      if (hooks.on_rows_touched) touched.clear();
      for (const WeightEntry& e : graph.weights[i]) {
        const double* row_j = z_cur.row(static_cast<std::size_t>(e.j));
        for (std::size_t c = 0; c < n; ++c) r[c] += e.w * row_j[c];
        if (hooks.on_rows_touched) touched.push_back(e.j);
      }
      if (hooks.on_rows_touched) hooks.on_rows_touched(k, i, touched);

      const double g = gradient_at(params, i, r);
      double action = clamp_box(r[i] - cfg.alpha * g, params.cap[i]);
      if (beta != 0.0) {
        for (std::size_t c = 0; c < n; ++c) {
          if (c != i) r[c] += beta * (z_cur.at(i, c) - z_prev.at(i, c));
        }
        action += beta * (z_cur.at(i, i) - z_prev.at(i, i));
        if (cfg.momentum_clamp) action = clamp_box(action, params.cap[i]);
      }
      r[i] = action;
    }

    if (cfg.stopping == StoppingRule::SelfRelative) {
      double diff = 0.0, z_norm = 0.0;
      for (std::size_t idx = 0; idx < z_cur.z.size(); ++idx) {
        const double d = z_next.z[idx] - z_cur.z[idx];
        diff += d * d;
        z_norm += z_cur.z[idx] * z_cur.z[idx];
      }
      self_change = std::sqrt(diff) / std::max(std::sqrt(z_norm), 1.0);
    }

    std::swap(z_prev, z_cur);
    std::swap(z_cur, z_next);
    if (hooks.on_iterate) hooks.on_iterate(k + 1, z_cur);
  }
  trace.iterations = k;
  trace.wall_time_s = timer.seconds();
  return {StrategyProfile::unconstrained(z_cur.diagonal()), std::move(trace)};
}

}  // namespace

SolveResult solve_dcrowdcache(const GameParams& params, const SolverConfig& cfg,
                              const GraphSequence& graphs, const SolveHooks& hooks) {
  return run_consensus_solver(params, cfg, graphs, 0.0, "dcrowdcache", hooks);
}

SolveResult solve_dcrowdcache_m(const GameParams& params, const SolverConfig& cfg,
                                const GraphSequence& graphs, const SolveHooks& hooks) {
  return run_consensus_solver(params, cfg, graphs, cfg.beta, "dcrowdcache-m", hooks);
}

double qbar_lambda_max(const AnalysisConstants& constants, double c, double alpha) {
  const double l = constants.l;
  const double xi = constants.xi;
  const double p = 1.0 - 2.0 * xi * alpha + l * l * alpha * alpha;
  const double q = (1.0 + 2.0 * l * alpha + l * l * alpha * alpha) * c * c;
  const double r = 2.0 * c * l * alpha;
  const double mid = 0.5 * (p + q);
  const double half_gap = 0.5 * (p - q);
  return mid + std::sqrt(half_gap * half_gap + r * r);
}

StepSizeReport step_size_report(const GameParams& params, double c_max, double alpha) {
  if (!(c_max > 0.0 && c_max < 1.0)) throw InvalidInputError("c_max must lie in (0,1)");
  if (!(alpha > 0.0)) throw InvalidInputError("alpha must be positive");
  const AnalysisConstants constants = analysis_constants(params);
  const double l = constants.l;
  const double xi = constants.xi;
  const double c2 = c_max * c_max;
  const double a = alpha;

  StepSizeReport report;
  report.alpha_tested = alpha;
  report.lambda_max = qbar_lambda_max(constants, c_max, alpha);
  report.alpha_upper_simple = 2.0 * xi / (l * l);
  report.q11_positive = l * l * a * a - 2.0 * xi * a + 1.0 > 0.0;
  report.det_q_positive =
      c2 * (std::pow(l, 4) * std::pow(a, 4) + 2.0 * l * l * (l - xi) * std::pow(a, 3) -
            2.0 * l * (l + 2.0 * xi) * a * a + 2.0 * (l - xi) * a + 1.0) > 0.0;
  report.i_minus_q11_positive = -(l * l * a * a) + 2.0 * xi * a > 0.0;
  report.det_i_minus_q_positive =
      a * (std::pow(l, 4) * c2 * std::pow(a, 3) + 2.0 * l * l * (l - xi) * c2 * a * a -
           (4.0 * l * (l + xi) * c2 + l * l * (1.0 - c2)) * a + 2.0 * (1.0 - c2) * xi) > 0.0;
  report.contracts = report.lambda_max < 1.0;
  return report;
}

double max_admissible_step(const GameParams& params, double c_max) {
  if (!(c_max > 0.0 && c_max < 1.0)) throw InvalidInputError("c_max must lie in (0,1)");
  const AnalysisConstants constants = analysis_constants(params);
  const double upper = 2.0 * constants.xi / (constants.l * constants.l);

  // lambda_max(Qbar) dips below 1 immediately to the right of 0 and is back
  // at or above 1 by `upper`; locate the first crossing.
  constexpr int kGrid = 4096;
  double lo = 0.0;
  double hi = upper;
  for (int g = 1; g <= kGrid; ++g) {
    const double a = upper * static_cast<double>(g) / kGrid;
    if (qbar_lambda_max(constants, c_max, a) >= 1.0) {
      hi = a;
      lo = upper * static_cast<double>(g - 1) / kGrid;
      break;
    }
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (qbar_lambda_max(constants, c_max, mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace crowdcache
