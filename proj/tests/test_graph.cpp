#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crowdcache/errors.hpp"
#include "crowdcache/graph.hpp"
#include "crowdcache/rng.hpp"

using namespace crowdcache;

namespace {

DevicePositions row_of_three() {
  // 0 -- 1 -- 2 with the end devices out of each other's range.
  return {{0.0, 100.0, 200.0}, {0.0, 0.0, 0.0}, {150.0, 150.0, 150.0}};
}

// Floyd-Warshall all-pairs oracle for small graphs.
std::vector<int> apsp_oracle(const std::vector<std::pair<int, int>>& edges, std::size_t n) {
  const int inf = 1 << 20;
  std::vector<int> d(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0;
  for (auto [i, j] : edges) {
    d[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = 1;
    d[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)] = 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
      }
    }
  }
  return d;
}

}  // namespace

TEST_CASE("geometric graph edge rule") {
  // 100 m apart with radii (150, 200): within both ranges.
  DevicePositions close{{0.0, 100.0}, {0.0, 0.0}, {150.0, 200.0}};
  CHECK(geometric_graph(close).edges.size() == 1);

  // 180 m apart: inside the 200 m radius but outside the 150 m one.
  DevicePositions far{{0.0, 180.0}, {0.0, 0.0}, {150.0, 200.0}};
  CHECK(geometric_graph(far).edges.empty());

  DevicePositions single{{0.0}, {0.0}, {150.0}};
  const GraphSnapshot g = geometric_graph(single);
  CHECK(g.n == 1);
  CHECK(g.edges.empty());
  CHECK(g.neighbor_sets[0] == std::vector<int>{0});
  CHECK(g.weights[0].size() == 1);
  CHECK(g.weights[0][0].w == 1.0);
  CHECK(g.diameter == 0);
}

TEST_CASE("geometric graph commutes with node permutation") {
  Rng rng(3);
  const BoundingBox box{0.0, 0.0, 600.0, 600.0};
  DevicePositions pos = uniform_positions(12, box, 150.0, 200.0, rng);

  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 11; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);

  DevicePositions shuffled;
  shuffled.x.resize(12);
  shuffled.y.resize(12);
  shuffled.radius.resize(12);
  for (std::size_t i = 0; i < 12; ++i) {
    shuffled.x[perm[i]] = pos.x[i];
    shuffled.y[perm[i]] = pos.y[i];
    shuffled.radius[perm[i]] = pos.radius[i];
  }

  auto canon = [](std::vector<std::pair<int, int>> edges) {
    for (auto& [i, j] : edges) {
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    return edges;
  };
  std::vector<std::pair<int, int>> mapped;
  for (auto [i, j] : geometric_graph(pos).edges) {
    mapped.emplace_back(static_cast<int>(perm[static_cast<std::size_t>(i)]),
                        static_cast<int>(perm[static_cast<std::size_t>(j)]));
  }
  CHECK(canon(mapped) == canon(geometric_graph(shuffled).edges));
}

TEST_CASE("metropolis weights on the two-node graph") {
  // Self-inclusive counts make K_2 weights 1/3, not the classical 1/2.
  const auto rows = metropolis_weights({{0, 1}, {0, 1}});
  CHECK(rows[0][0].w == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rows[0][1].w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(rows[1][0].w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(rows[1][1].w == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("metropolis weights on the path graph") {
  const GraphSnapshot g = geometric_graph(row_of_three());
  REQUIRE(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(g.weight(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.weight(1, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.weight(0, 2) == 0.0);
  CHECK(g.weight(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(g.weight(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.weight(2, 2) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("metropolis weights reject bad neighbor sets") {
  CHECK_THROWS_AS(metropolis_weights({{1}, {0, 1}}), InvalidInputError);   // missing self
  CHECK_THROWS_AS(metropolis_weights({{0, 1}, {1}}), InvalidInputError);   // asymmetric
}

TEST_CASE("metropolis weights of an isolated node") {
  const auto rows = metropolis_weights({{0}, {1, 2}, {1, 2}});
  REQUIRE(rows[0].size() == 1);
  CHECK(rows[0][0].j == 0);
  CHECK(rows[0][0].w == 1.0);
}

TEST_CASE("generated matrices are symmetric doubly-stochastic with min+ >= 1/n") {
  Rng rng(101);
  const std::size_t n = 48;
  for (int trial = 0; trial < 60; ++trial) {
    const BoundingBox box{0.0, 0.0, 900.0, 900.0};
    const DevicePositions pos = uniform_positions(n, box, 150.0, 200.0, rng);
    const GraphSnapshot g = geometric_graph(pos, false);

    std::vector<double> row_sum(n, 0.0), col_sum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const WeightEntry& e : g.weights[i]) {
        row_sum[i] += e.w;
        col_sum[static_cast<std::size_t>(e.j)] += e.w;
        CHECK(e.w > 0.0);
        CHECK(e.w <= 1.0);
        CHECK(g.weight(static_cast<std::size_t>(e.j), i) == e.w);  // exact symmetry
      }
      CHECK(g.weight(i, i) > 0.0);
      CHECK(g.min_positive_weight >= 1.0 / static_cast<double>(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(row_sum[i] - 1.0) < 1e-12);
      CHECK(std::abs(col_sum[i] - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("diameter") {
  // Complete graph on 4 nodes.
  std::vector<std::pair<int, int>> k4;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) k4.emplace_back(i, j);
  }
  CHECK(diameter(k4, 4) == 1);
  CHECK(diameter({{0, 1}, {1, 2}}, 3) == 2);
  CHECK_FALSE(diameter({{0, 1}}, 4).has_value());

  // BFS result matches a Floyd-Warshall oracle on random graphs.
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(9);
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.4) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
    const auto d = apsp_oracle(edges, n);
    const int worst = *std::max_element(d.begin(), d.end());
    const auto got = diameter(edges, n);
    if (worst >= (1 << 20)) {
      CHECK_FALSE(got.has_value());
    } else {
      CHECK(got == worst);
    }
  }
}

TEST_CASE("edge utility") {
  CHECK(edge_utility({{0, 1}, {1, 2}}, 3) == 2);  // both pairs through each edge

  for (std::size_t n : {2u, 3u, 5u, 8u}) {
    std::vector<std::pair<int, int>> kn;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) kn.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
    CHECK(edge_utility(kn, n) == 1);
  }

  // Star with hub 0: each spoke carries its leaf's 3 pairs.
  CHECK(edge_utility({{0, 1}, {0, 2}, {0, 3}}, 4) == 3);

  CHECK_THROWS_AS(edge_utility({{0, 1}}, 3), UndefinedQuantityError);
}

TEST_CASE("contraction constant values") {
  const GraphSnapshot path = geometric_graph(row_of_three());
  // w = 1/4, D = 2, K = 2: mixing gap 3/64, c = sqrt(61/64).
  CHECK(*path.contraction == doctest::Approx(std::sqrt(61.0 / 64.0)).epsilon(1e-12));
  CHECK(contraction_constant(path) == *path.contraction);

  DevicePositions pair{{0.0, 100.0}, {0.0, 0.0}, {150.0, 200.0}};
  const GraphSnapshot k2 = geometric_graph(pair);
  // w = 1/3, D = 1, K = 1: gap 2/9, c = sqrt(7/9).
  CHECK(*k2.contraction == doctest::Approx(std::sqrt(7.0 / 9.0)).epsilon(1e-12));

  DevicePositions split{{0.0, 500.0}, {0.0, 0.0}, {150.0, 150.0}};
  const GraphSnapshot disconnected = geometric_graph(split);
  CHECK_FALSE(disconnected.contraction.has_value());
  CHECK_THROWS_AS(contraction_constant(disconnected), UndefinedQuantityError);
}

TEST_CASE("mixing contracts disagreement by the contraction constant") {
  Rng rng(201);
  int connected_seen = 0;
  while (connected_seen < 40) {
    const std::size_t n = 3 + rng.uniform_index(14);
    const BoundingBox box{0.0, 0.0, 450.0, 450.0};
    const GraphSnapshot g =
        geometric_graph(uniform_positions(n, box, 150.0, 200.0, rng));
    if (!g.connected()) continue;
    ++connected_seen;
    const double c2 = *g.contraction * *g.contraction;

    for (int trial = 0; trial < 25; ++trial) {
      std::vector<double> z(n * n);
      for (double& v : z) v = rng.uniform(-1.0, 1.0);

      std::vector<double> mean(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t col = 0; col < n; ++col) mean[col] += z[i * n + col];
      }
      for (double& m : mean) m /= static_cast<double>(n);

      double before = 0.0, after = 0.0;
      std::vector<double> mean_after(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(n, 0.0);
        for (const WeightEntry& e : g.weights[i]) {
          for (std::size_t col = 0; col < n; ++col) {
            r[col] += e.w * z[static_cast<std::size_t>(e.j) * n + col];
          }
        }
        for (std::size_t col = 0; col < n; ++col) {
          before += (z[i * n + col] - mean[col]) * (z[i * n + col] - mean[col]);
          after += (r[col] - mean[col]) * (r[col] - mean[col]);
          mean_after[col] += r[col];
        }
      }
      CHECK(after <= c2 * before + 1e-12);

      // Doubly-stochastic mixing preserves the row mean.
      for (std::size_t col = 0; col < n; ++col) {
        CHECK(std::abs(mean_after[col] / static_cast<double>(n) - mean[col]) < 1e-12);
      }
    }
  }
}

TEST_CASE("step positions") {
  const BoundingBox box{0.0, 0.0, 500.0, 500.0};
  Rng rng(5);
  const DevicePositions pos = uniform_positions(8, box, 150.0, 200.0, rng);

  Rng walk(99);
  const DevicePositions frozen = step_positions(pos, walk, 0.0, box);
  CHECK(frozen.x == pos.x);
  CHECK(frozen.y == pos.y);

  Rng a(42), b(42);
  const DevicePositions pa = step_positions(pos, a, 10.0, box);
  const DevicePositions pb = step_positions(pos, b, 10.0, box);
  CHECK(pa.x == pb.x);
  CHECK(pa.y == pb.y);
  CHECK(pa.radius == pos.radius);

  Rng c(7);
  DevicePositions current = pos;
  for (int step = 0; step < 1000; ++step) {
    current = step_positions(current, c, 25.0, box);
    for (std::size_t i = 0; i < current.size(); ++i) {
      CHECK(current.x[i] >= box.x0);
      CHECK(current.x[i] <= box.x1);
      CHECK(current.y[i] >= box.y0);
      CHECK(current.y[i] <= box.y1);
    }
  }
}

TEST_CASE("b-connectivity windows") {
  // Alternating single-edge graphs on 3 nodes: each alone is disconnected,
  // each union window of two forms the connected path.
  std::vector<std::vector<std::pair<int, int>>> alternating;
  for (int k = 0; k < 8; ++k) {
    alternating.push_back(k % 2 == 0 ? std::vector<std::pair<int, int>>{{0, 1}}
                                     : std::vector<std::pair<int, int>>{{1, 2}});
  }
  CHECK(check_b_connectivity(alternating, 3, 2));
  CHECK_FALSE(check_b_connectivity(alternating, 3, 1));

  std::vector<std::vector<std::pair<int, int>>> full(5, {{0, 1}, {1, 2}});
  for (int b = 1; b <= 5; ++b) CHECK(check_b_connectivity(full, 3, b));

  // Node 2 isolated in every snapshot.
  std::vector<std::vector<std::pair<int, int>>> broken(6, {{0, 1}});
  for (int b = 1; b <= 3; ++b) CHECK_FALSE(check_b_connectivity(broken, 3, b));
}

TEST_CASE("mobility sequence flags b-connectivity") {
  Rng rng(11);
  const BoundingBox box{0.0, 0.0, 400.0, 400.0};
  DevicePositions pos = uniform_positions(16, box, 150.0, 200.0, rng);
  const GraphSequence seq = generate_mobility_sequence(pos, 12, 10.0, box, 1, rng);
  CHECK(seq.size() == 12);
  CHECK(seq.b_connected == check_b_connectivity(seq.snapshots, 1));
  CHECK(seq.at_step(13).n == 16);  // cyclic indexing
}
