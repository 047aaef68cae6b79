#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "crowdcache/errors.hpp"
#include "crowdcache/game.hpp"
#include "crowdcache/rng.hpp"

using namespace crowdcache;

namespace {

// Two devices, the worked reference instance used throughout the suites.
GameParams base2() {
  return GameParams::make(2, 1.0, 0.1, {0.05, 0.05}, {0.1, 0.1}, {10.0, 10.0});
}

GameParams random_game(Rng& rng, std::size_t n) {
  std::vector<double> q(n), h(n), cap(n);
  for (auto& v : q) v = rng.uniform(0.01, 0.1);
  for (auto& v : h) v = rng.uniform(0.05, 0.15);
  for (auto& v : cap) v = 16.0 * (1.0 + rng.uniform_index(4));
  return GameParams::make(n, 1.0, rng.uniform(0.02, 0.3), q, h, cap);
}

// Dense Jacobian diag(2 q_i + gamma) + gamma * 11^T for oracle eigensolves.
Eigen::MatrixXd jacobian(const GameParams& p) {
  const auto n = static_cast<Eigen::Index>(p.n_meds);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = (i == j) ? 2.0 * (p.q[static_cast<std::size_t>(i)] + p.gamma) : p.gamma;
    }
  }
  return a;
}

}  // namespace

TEST_CASE("params validation") {
  CHECK_THROWS_AS(GameParams::make(2, 1.0, 0.0, {0.1, 0.1}, {0.1, 0.1}, {1.0, 1.0}),
                  InvalidInputError);
  CHECK_THROWS_AS(GameParams::make(2, 1.0, -0.5, {0.1, 0.1}, {0.1, 0.1}, {1.0, 1.0}),
                  InvalidInputError);
  CHECK_THROWS_AS(GameParams::make(2, 1.0, 0.1, {0.0, 0.1}, {0.1, 0.1}, {1.0, 1.0}),
                  InvalidInputError);
  CHECK_THROWS_AS(GameParams::make(2, 1.0, 0.1, {0.1}, {0.1, 0.1}, {1.0, 1.0}),
                  InvalidInputError);
  CHECK_THROWS_AS(GameParams::make(2, 1.0, 0.1, {0.1, 0.1}, {0.1, 0.1}, {1.0, 0.0}),
                  InvalidInputError);
}

TEST_CASE("params json round trip") {
  const GameParams p = base2();
  const GameParams back = game_params_from_json(to_json(p));
  CHECK(back.n_meds == p.n_meds);
  CHECK(back.p_bar == p.p_bar);
  CHECK(back.gamma == p.gamma);
  CHECK(back.q == p.q);
  CHECK(back.h == p.h);
  CHECK(back.cap == p.cap);

  CHECK_THROWS_AS(game_params_from_json(R"({"n_meds":1})"), InvalidInputError);
  CHECK_THROWS_WITH_AS(
      game_params_from_json(
          R"({"n_meds":1,"p_bar":1,"gamma":0.1,"q":[0.1],"h":[0.1],"cap":[1],"bogus":2})"),
      doctest::Contains("bogus"), InvalidInputError);
}

TEST_CASE("unit price") {
  const GameParams p = base2();
  CHECK(unit_price(p, StrategyProfile::feasible(p, {0.0, 0.0})) == 1.0);
  CHECK(unit_price(p, StrategyProfile::feasible(p, {2.25, 2.25})) == doctest::Approx(0.55).epsilon(1e-12));
  // Prices are not floored at zero.
  CHECK(unit_price(p, StrategyProfile::feasible(p, {10.0, 10.0})) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(unit_price(p, StrategyProfile::unconstrained({1.0})), InvalidInputError);
}

TEST_CASE("cost") {
  const GameParams p = base2();
  CHECK(cost(p, 0, 0.0) == 0.0);
  CHECK(cost(p, 0, 2.0) == doctest::Approx(0.4).epsilon(1e-12));
  const GameParams p2 = GameParams::make(1, 1.0, 0.1, {0.1}, {0.15}, {10.0});
  CHECK(cost(p2, 0, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(cost(p, 2, 1.0), InvalidInputError);
}

TEST_CASE("utility") {
  const GameParams p = base2();
  // Inactive device earns nothing regardless of the others.
  CHECK(utility(p, 0, StrategyProfile::feasible(p, {0.0, 7.5})) == 0.0);
  // p = 0.55 at (2.25, 2.25); U = 0.55*2.25 - (0.05*2.25^2 + 0.1*2.25).
  CHECK(utility(p, 0, StrategyProfile::feasible(p, {2.25, 2.25})) ==
        doctest::Approx(0.759375).epsilon(1e-12));

  // Single device, negligible gamma: U(5) = 1*5 - (0.05*25 + 0.1*5) = 3.25.
  const GameParams solo = GameParams::make(1, 1.0, 1e-12, {0.05}, {0.1}, {10.0});
  CHECK(utility(solo, 0, StrategyProfile::feasible(solo, {5.0})) ==
        doctest::Approx(3.25).epsilon(1e-9));
}

TEST_CASE("objective is negated utility") {
  const GameParams p = base2();
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const StrategyProfile x = StrategyProfile::unconstrained(
        {rng.uniform(-5.0, 15.0), rng.uniform(-5.0, 15.0)});
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(local_objective(p, i, x) == -utility(p, i, x));
    }
  }
}

TEST_CASE("gradient") {
  const GameParams p = base2();
  const StrategyProfile zero = StrategyProfile::feasible(p, {0.0, 0.0});
  CHECK(gradient(p, 0, zero) == doctest::Approx(p.h[0] - p.p_bar).epsilon(1e-14));

  // (2.25, 2.25) solves the interior system [[0.3,0.1],[0.1,0.3]] x = (0.9,0.9).
  const StrategyProfile ne = StrategyProfile::feasible(p, {2.25, 2.25});
  CHECK(gradient(p, 0, ne) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(gradient(p, 1, ne) == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(gradient(p, 5, ne), InvalidInputError);
}

TEST_CASE("gradient equals central finite difference") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const GameParams p = random_game(rng, 4);
    std::vector<double> base(4);
    for (auto& v : base) v = rng.uniform(-10.0, 20.0);
    const double eps = 0.5;  // exact for a quadratic objective
    for (std::size_t i = 0; i < 4; ++i) {
      std::vector<double> hi = base, lo = base;
      hi[i] += eps;
      lo[i] -= eps;
      const double fd = (local_objective(p, i, StrategyProfile::unconstrained(hi)) -
                         local_objective(p, i, StrategyProfile::unconstrained(lo))) /
                        (2.0 * eps);
      const double an = gradient(p, i, StrategyProfile::unconstrained(base));
      CHECK(an == doctest::Approx(fd).epsilon(1e-10));
    }
  }
}

TEST_CASE("game mapping values") {
  const GameParams p = base2();
  const std::vector<double> f = game_mapping(p, StrategyProfile::feasible(p, {1.0, 0.0}));
  CHECK(f[0] == doctest::Approx(-0.6).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(-0.8).epsilon(1e-12));

  const std::vector<double> at_ne = game_mapping(p, StrategyProfile::feasible(p, {2.25, 2.25}));
  CHECK(std::abs(at_ne[0]) < 1e-14);
  CHECK(std::abs(at_ne[1]) < 1e-14);
}

TEST_CASE("strong monotonicity with the computed constant") {
  Rng rng(23);
  for (int g = 0; g < 10; ++g) {
    const std::size_t n = 1 + rng.uniform_index(16);
    const GameParams p = random_game(rng, n);
    const double mu = analysis_constants(p).mu;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(-p.cap[i], 2.0 * p.cap[i]);
        y[i] = rng.uniform(-p.cap[i], 2.0 * p.cap[i]);
      }
      const auto fx = game_mapping(p, StrategyProfile::unconstrained(x));
      const auto fy = game_mapping(p, StrategyProfile::unconstrained(y));
      double inner = 0.0, dist2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        inner += (x[i] - y[i]) * (fx[i] - fy[i]);
        dist2 += (x[i] - y[i]) * (x[i] - y[i]);
      }
      REQUIRE(inner >= mu * dist2 - 1e-9);
    }
  }
}

TEST_CASE("lipschitz constants and their extremal directions") {
  Rng rng(31);
  for (int g = 0; g < 10; ++g) {
    const std::size_t n = 2 + rng.uniform_index(15);
    const GameParams p = random_game(rng, n);
    const AnalysisConstants c = analysis_constants(p);

    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t i = rng.uniform_index(n);
      std::vector<double> x(n), y(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = rng.uniform(-20.0, 20.0);

      // Own-coordinate bound |g(x_i) - g(y_i)| <= l1 |x_i - y_i|.
      y = x;
      y[i] = rng.uniform(-20.0, 20.0);
      const double own = std::abs(gradient_at(p, i, x.data()) - gradient_at(p, i, y.data()));
      CHECK(own <= c.l1 * std::abs(x[i] - y[i]) + 1e-9);

      // Cross bound over the other coordinates.
      y = x;
      double cross_norm2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        y[j] = rng.uniform(-20.0, 20.0);
        cross_norm2 += (x[j] - y[j]) * (x[j] - y[j]);
      }
      const double cross = std::abs(gradient_at(p, i, x.data()) - gradient_at(p, i, y.data()));
      CHECK(cross <= c.l2 * std::sqrt(cross_norm2) + 1e-9);
    }

    // l1 is attained exactly by the device with the largest quadratic cost.
    const std::size_t worst = static_cast<std::size_t>(
        std::max_element(p.q.begin(), p.q.end()) - p.q.begin());
    std::vector<double> x(n, 1.0), y(n, 1.0);
    y[worst] = 3.0;
    const double own = std::abs(gradient_at(p, worst, x.data()) - gradient_at(p, worst, y.data()));
    CHECK(own == doctest::Approx(c.l1 * 2.0).epsilon(1e-12));

    // l2 is attained by constant difference vectors on the other coordinates.
    const std::size_t i = 0;
    y = x;
    for (std::size_t j = 1; j < n; ++j) y[j] += 0.7;
    const double cross = std::abs(gradient_at(p, i, x.data()) - gradient_at(p, i, y.data()));
    const double norm = 0.7 * std::sqrt(static_cast<double>(n - 1));
    CHECK(cross == doctest::Approx(c.l2 * norm).epsilon(1e-12));
  }
}

TEST_CASE("projection") {
  const GameParams p = base2();
  const StrategyProfile inside = project_box(p, {3.0, 4.0});
  CHECK(inside.x == std::vector<double>{3.0, 4.0});
  const StrategyProfile clamped = project_box(p, {-3.0, 12.0});
  CHECK(clamped.x == std::vector<double>{0.0, 10.0});
  const GameParams one = GameParams::make(1, 1.0, 0.1, {0.05}, {0.1}, {16.0});
  CHECK(project_box(one, {16.0001}).x == std::vector<double>{16.0});

  // Idempotent and nonexpansive.
  Rng rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> u(2), v(2);
    for (std::size_t i = 0; i < 2; ++i) {
      u[i] = rng.uniform(-30.0, 30.0);
      v[i] = rng.uniform(-30.0, 30.0);
    }
    const auto pu = project_box(p, u), pv = project_box(p, v);
    CHECK(project_box(p, pu.x).x == pu.x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      num += (pu.x[i] - pv.x[i]) * (pu.x[i] - pv.x[i]);
      den += (u[i] - v[i]) * (u[i] - v[i]);
    }
    CHECK(num <= den + 1e-12);
  }
}

TEST_CASE("analysis constants on the reference instance") {
  const AnalysisConstants c = analysis_constants(base2());
  // Jacobian [[0.3, 0.1], [0.1, 0.3]]: eigenvalues 0.2 (zero-sum) and 0.4.
  CHECK(c.mu == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(c.l1 == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(c.l2 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(c.l == doctest::Approx(std::sqrt(0.10)).epsilon(1e-12));
  CHECK(c.xi == doctest::Approx(0.1).epsilon(1e-12));

  const GameParams solo = GameParams::make(1, 1.0, 0.1, {0.05}, {0.1}, {10.0});
  const AnalysisConstants c1 = analysis_constants(solo);
  CHECK(c1.l2 == 0.0);
  CHECK(c1.mu == doctest::Approx(2.0 * 0.05 + 2.0 * 0.1).epsilon(1e-12));
}

TEST_CASE("spectrum edges match a dense eigensolve") {
  Rng rng(53);
  for (int g = 0; g < 30; ++g) {
    const std::size_t n = 1 + rng.uniform_index(24);
    const GameParams p = random_game(rng, n);
    const JacobianSpectrumEdges edges = jacobian_spectrum_edges(p);
    const Eigen::VectorXd ev = jacobian(p).selfadjointView<Eigen::Lower>().eigenvalues();
    CHECK(edges.lambda_min == doctest::Approx(ev.minCoeff()).epsilon(1e-10));
    CHECK(edges.lambda_max == doctest::Approx(ev.maxCoeff()).epsilon(1e-10));

    const AnalysisConstants c = analysis_constants(p);
    CHECK(c.mu <= c.l1 + 1e-12);
    CHECK(c.l >= c.l1);
    CHECK(c.l >= c.l2);
  }
}
