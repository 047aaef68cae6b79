#include "crowdcache/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "crowdcache/errors.hpp"

namespace crowdcache {

namespace {

void require_index(const GameParams& params, std::size_t i) {
  if (i >= params.n_meds) {
    throw InvalidInputError("device index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(params.n_meds) + ")");
  }
}

void require_length(const GameParams& params, std::size_t n, const char* what) {
  if (n != params.n_meds) {
    throw InvalidInputError(std::string(what) + " has length " + std::to_string(n) +
                            ", expected " + std::to_string(params.n_meds));
  }
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double value : v) s += value;
  return s;
}

/// d J_i / d x_i evaluated at the raw vector x (length n_meds).
double gradient_raw(const GameParams& params, std::size_t i, const double* x) {
  double others = 0.0;
  for (std::size_t j = 0; j < params.n_meds; ++j) {
    if (j != i) others += x[j];
  }
  return 2.0 * (params.q[i] + params.gamma) * x[i] + params.gamma * others + params.h[i] -
         params.p_bar;
}

}  // namespace

GameParams GameParams::make(std::size_t n_meds, double p_bar, double gamma,
                            std::vector<double> q, std::vector<double> h,
                            std::vector<double> cap) {
  if (n_meds == 0) throw InvalidInputError("n_meds must be positive");
  if (!(p_bar >= 0.0)) throw InvalidInputError("p_bar must be nonnegative");
  if (!(gamma > 0.0)) {
    throw InvalidInputError(
        "gamma must be strictly positive: the strong-monotonicity constant mu "
        "would vanish and the equilibrium would no longer be unique");
  }
  if (q.size() != n_meds || h.size() != n_meds || cap.size() != n_meds) {
    throw InvalidInputError("q, h, cap must all have length n_meds");
  }
  for (std::size_t i = 0; i < n_meds; ++i) {
    if (!(q[i] > 0.0)) {
      throw InvalidInputError("q[" + std::to_string(i) + "] must be strictly positive (mu > 0)");
    }
    if (!(h[i] >= 0.0)) {
      throw InvalidInputError("h[" + std::to_string(i) + "] must be nonnegative");
    }
    if (!(cap[i] > 0.0)) {
      throw InvalidInputError("cap[" + std::to_string(i) + "] must be strictly positive");
    }
  }
  GameParams p;
  p.n_meds = n_meds;
  p.p_bar = p_bar;
  p.gamma = gamma;
  p.q = std::move(q);
  p.h = std::move(h);
  p.cap = std::move(cap);
  return p;
}

std::string to_json(const GameParams& params, int indent) {
  nlohmann::json j;
  j["n_meds"] = params.n_meds;
  j["p_bar"] = params.p_bar;
  j["gamma"] = params.gamma;
  j["q"] = params.q;
  j["h"] = params.h;
  j["cap"] = params.cap;
  return j.dump(indent);
}

GameParams game_params_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInputError(std::string("malformed GameParams JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInputError("GameParams JSON must be an object");
  static const char* kKeys[] = {"n_meds", "p_bar", "gamma", "q", "h", "cap"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return it.key() == k; }) == std::end(kKeys)) {
      throw InvalidInputError("unknown GameParams key \"" + it.key() + "\"");
    }
  }
  for (const char* k : kKeys) {
    if (!j.contains(k)) throw InvalidInputError(std::string("missing GameParams key \"") + k + "\"");
  }
  try {
    return GameParams::make(j["n_meds"].get<std::size_t>(), j["p_bar"].get<double>(),
                            j["gamma"].get<double>(), j["q"].get<std::vector<double>>(),
                            j["h"].get<std::vector<double>>(),
                            j["cap"].get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("GameParams JSON type error: ") + e.what());
  }
}

StrategyProfile StrategyProfile::feasible(const GameParams& params, std::vector<double> v) {
  require_length(params, v.size(), "profile");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= params.cap[i])) {
      throw InvalidInputError("profile coordinate " + std::to_string(i) + " = " +
                              std::to_string(v[i]) + " outside [0, " +
                              std::to_string(params.cap[i]) + "]");
    }
  }
  return StrategyProfile{std::move(v)};
}

StrategyProfile StrategyProfile::unconstrained(std::vector<double> v) {
  return StrategyProfile{std::move(v)};
}

bool StrategyProfile::is_feasible(const GameParams& params, double tol) const {
  if (x.size() != params.n_meds) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < -tol || x[i] > params.cap[i] + tol) return false;
  }
  return true;
}

double unit_price(const GameParams& params, const StrategyProfile& x) {
  require_length(params, x.size(), "profile");
  return params.p_bar - params.gamma * sum(x.x);
}

double cost(const GameParams& params, std::size_t i, double x_i) {
  require_index(params, i);
  return params.q[i] * x_i * x_i + params.h[i] * x_i;
}

double utility(const GameParams& params, std::size_t i, const StrategyProfile& x) {
  require_index(params, i);
  require_length(params, x.size(), "profile");
  return unit_price(params, x) * x.x[i] - cost(params, i, x.x[i]);
}

double local_objective(const GameParams& params, std::size_t i, const StrategyProfile& x) {
  return -utility(params, i, x);
}

double gradient(const GameParams& params, std::size_t i, const StrategyProfile& x) {
  require_index(params, i);
  require_length(params, x.size(), "profile");
  return gradient_raw(params, i, x.x.data());
}

double gradient_at(const GameParams& params, std::size_t i, const double* x) {
  return gradient_raw(params, i, x);
}

std::vector<double> game_mapping(const GameParams& params, const StrategyProfile& x) {
  require_length(params, x.size(), "profile");
  std::vector<double> f(params.n_meds);
  for (std::size_t i = 0; i < params.n_meds; ++i) f[i] = gradient_raw(params, i, x.x.data());
  return f;
}

StrategyProfile project_box(const GameParams& params, const std::vector<double>& v) {
  require_length(params, v.size(), "vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::min(std::max(v[i], 0.0), params.cap[i]);
  }
  return StrategyProfile{std::move(out)};
}

namespace {

// Secular function of diag(d) + gamma*11^T: phi(lambda) = 1 + gamma*sum 1/(d_i-lambda).
// Roots with non-zero-sum eigenvectors interlace the sorted d_i, plus one root
// above max d_i; duplicated d_i are themselves eigenvalues (zero-sum vectors).
double secular(const std::vector<double>& d, double gamma, double lambda) {
  double s = 0.0;
  for (double di : d) s += 1.0 / (di - lambda);
  return 1.0 + gamma * s;
}

// Bisection for the unique secular root in (lo, hi), where phi -> -inf at lo+
// and phi(hi) >= 0, phi strictly increasing on the pole-free interval.
double secular_root(const std::vector<double>& d, double gamma, double lo, double hi) {
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (secular(d, gamma, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

JacobianSpectrumEdges jacobian_spectrum_edges(const GameParams& params) {
  const std::size_t n = params.n_meds;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 2.0 * params.q[i] + params.gamma;
  if (n == 1) {
    const double v = d[0] + params.gamma;
    return {v, v};
  }
  std::vector<double> ds = d;
  std::sort(ds.begin(), ds.end());

  JacobianSpectrumEdges edges;
  if (ds[0] == ds[1]) {
    edges.lambda_min = ds[0];
  } else {
    edges.lambda_min = secular_root(ds, params.gamma, ds[0], ds[1]);
  }
  const double hi = ds[n - 1] + params.gamma * static_cast<double>(n) * (1.0 + 1e-12) +
                    std::numeric_limits<double>::min();
  edges.lambda_max = secular_root(ds, params.gamma, ds[n - 1], hi);
  return edges;
}

AnalysisConstants analysis_constants(const GameParams& params) {
  const double q_max = *std::max_element(params.q.begin(), params.q.end());
  AnalysisConstants c;
  c.mu = jacobian_spectrum_edges(params).lambda_min;
  c.l1 = 2.0 * (q_max + params.gamma);
  c.l2 = params.gamma * std::sqrt(static_cast<double>(params.n_meds - 1));
  c.l = std::sqrt(c.l1 * c.l1 + c.l2 * c.l2);
  c.xi = c.mu / static_cast<double>(params.n_meds);
  if (!(c.mu > 0.0) || c.mu > c.l1 + 1e-12) {
    throw InvalidInputError("analysis constants violate 0 < mu <= l1");
  }
  return c;
}

}  // namespace crowdcache
