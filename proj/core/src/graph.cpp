#include "crowdcache/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "crowdcache/errors.hpp"

namespace crowdcache {

namespace {

std::vector<std::vector<int>> adjacency(const std::vector<std::pair<int, int>>& edges,
                                        std::size_t n) {
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
      throw InvalidInputError("edge endpoint out of range");
    }
    if (i == j) continue;  // self-loops are implicit, never stored
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

// BFS distances from s; unreached nodes keep -1.
std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int s) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue{s};
  dist[static_cast<std::size_t>(s)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

bool connected_from_adj(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return true;
  const std::vector<int> dist = bfs_distances(adj, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

}  // namespace

double GraphSnapshot::weight(std::size_t i, std::size_t j) const {
  for (const WeightEntry& e : weights[i]) {
    if (static_cast<std::size_t>(e.j) == j) return e.w;
  }
  return 0.0;
}

std::vector<double> GraphSnapshot::dense_weights() const {
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const WeightEntry& e : weights[i]) dense[i * n + static_cast<std::size_t>(e.j)] = e.w;
  }
  return dense;
}

std::optional<double> GraphSequence::max_contraction() const {
  std::optional<double> c;
  for (const GraphSnapshot& s : snapshots) {
    if (s.contraction && (!c || *s.contraction > *c)) c = *s.contraction;
  }
  return c;
}

GraphSequence GraphSequence::make(std::vector<GraphSnapshot> snapshots, int window_b) {
  if (window_b < 1) throw InvalidInputError("window_b must be >= 1");
  if (snapshots.empty()) throw InvalidInputError("sequence needs at least one snapshot");
  GraphSequence seq;
  seq.window_b = window_b;
  seq.b_connected = check_b_connectivity(snapshots, window_b);
  seq.snapshots = std::move(snapshots);
  return seq;
}

std::vector<std::vector<WeightEntry>> metropolis_weights(
    const std::vector<std::vector<int>>& neighbor_sets) {
  const std::size_t n = neighbor_sets.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::binary_search(neighbor_sets[i].begin(), neighbor_sets[i].end(),
                            static_cast<int>(i))) {
      throw InvalidInputError("neighbor set of node " + std::to_string(i) +
                              " does not contain the node itself");
    }
    for (int j : neighbor_sets[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= n) {
        throw InvalidInputError("neighbor index out of range");
      }
      if (static_cast<std::size_t>(j) != i &&
          !std::binary_search(neighbor_sets[static_cast<std::size_t>(j)].begin(),
                              neighbor_sets[static_cast<std::size_t>(j)].end(),
                              static_cast<int>(i))) {
        throw InvalidInputError("neighbor sets are not symmetric between " + std::to_string(i) +
                                " and " + std::to_string(j));
      }
    }
  }

  std::vector<std::vector<WeightEntry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    double off_diagonal = 0.0;
    rows[i].reserve(neighbor_sets[i].size());
    for (int j : neighbor_sets[i]) {
      if (static_cast<std::size_t>(j) == i) continue;
      const std::size_t count_i = neighbor_sets[i].size();
      const std::size_t count_j = neighbor_sets[static_cast<std::size_t>(j)].size();
      const double w = 1.0 / (1.0 + static_cast<double>(std::max(count_i, count_j)));
      rows[i].push_back({j, w});
      off_diagonal += w;
    }
    rows[i].push_back({static_cast<int>(i), 1.0 - off_diagonal});
    std::sort(rows[i].begin(), rows[i].end(),
              [](const WeightEntry& a, const WeightEntry& b) { return a.j < b.j; });
  }
  return rows;
}

std::optional<int> diameter(const std::vector<std::pair<int, int>>& edges, std::size_t n) {
  if (n == 0) throw InvalidInputError("diameter needs n >= 1");
  const auto adj = adjacency(edges, n);
  int diam = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::vector<int> dist = bfs_distances(adj, static_cast<int>(s));
    for (int d : dist) {
      if (d < 0) return std::nullopt;
      diam = std::max(diam, d);
    }
  }
  return diam;
}

long long edge_utility(const std::vector<std::pair<int, int>>& edges, std::size_t n) {
  if (n < 2) throw UndefinedQuantityError("edge utility needs at least one node pair");
  const auto adj = adjacency(edges, n);
  if (!connected_from_adj(adj)) {
    throw UndefinedQuantityError("edge utility is undefined on a disconnected graph");
  }

  // Edge id lookup: edge (min,max) -> index.
  std::vector<std::pair<long long, std::size_t>> edge_ids;
  edge_ids.reserve(edges.size());
  std::size_t unique_edges = 0;
  auto key = [n](int a, int b) {
    const long long lo = std::min(a, b), hi = std::max(a, b);
    return lo * static_cast<long long>(n) + hi;
  };
  for (auto [i, j] : edges) {
    if (i == j) continue;
    edge_ids.emplace_back(key(i, j), 0);
  }
  std::sort(edge_ids.begin(), edge_ids.end());
  edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end(),
                             [](auto& a, auto& b) { return a.first == b.first; }),
                 edge_ids.end());
  for (auto& e : edge_ids) e.second = unique_edges++;
  auto edge_index = [&](int a, int b) {
    const long long k = key(a, b);
    auto it = std::lower_bound(edge_ids.begin(), edge_ids.end(), k,
                               [](const auto& e, long long v) { return e.first < v; });
    return it->second;
  };

  std::vector<long long> crossings(unique_edges, 0);
  std::vector<int> parent(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::vector<int> dist = bfs_distances(adj, static_cast<int>(s));
    // Canonical tree: parent of v is its lowest-indexed predecessor.
    for (std::size_t v = 0; v < n; ++v) {
      parent[v] = -1;
      if (v == s || dist[v] < 0) continue;
      for (int u : adj[v]) {
        if (dist[static_cast<std::size_t>(u)] == dist[v] - 1) {
          parent[v] = u;
          break;  // adjacency is sorted, first hit is the lowest index
        }
      }
    }
    for (std::size_t t = s + 1; t < n; ++t) {
      int v = static_cast<int>(t);
      while (v != static_cast<int>(s)) {
        const int u = parent[static_cast<std::size_t>(v)];
        ++crossings[edge_index(u, v)];
        v = u;
      }
    }
  }
  return *std::max_element(crossings.begin(), crossings.end());
}

double contraction_constant(const GraphSnapshot& snapshot) {
  if (snapshot.n < 2) {
    throw UndefinedQuantityError("contraction constant needs at least two nodes");
  }
  if (!snapshot.diameter.has_value() || !snapshot.edge_utility.has_value()) {
    throw UndefinedQuantityError("contraction constant is undefined on a disconnected graph");
  }
  const double w = snapshot.min_positive_weight;
  const double gap = static_cast<double>(snapshot.n) * w * w /
                     (static_cast<double>(*snapshot.diameter) *
                      static_cast<double>(*snapshot.edge_utility));
  if (!(gap > 0.0 && gap <= 1.0)) {
    throw UndefinedQuantityError("mixing gap outside (0, 1]");
  }
  return std::sqrt(1.0 - gap);
}

GraphSnapshot snapshot_from_edges(std::size_t n, std::vector<std::pair<int, int>> edges,
                                  bool with_diagnostics) {
  if (n == 0) throw InvalidInputError("snapshot needs n >= 1");
  GraphSnapshot g;
  g.n = n;
  g.edges = std::move(edges);

  g.neighbor_sets.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) g.neighbor_sets[i].push_back(static_cast<int>(i));
  for (auto [i, j] : g.edges) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
      throw InvalidInputError("edge endpoint out of range");
    }
    if (i == j) continue;
    g.neighbor_sets[static_cast<std::size_t>(i)].push_back(j);
    g.neighbor_sets[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& set : g.neighbor_sets) std::sort(set.begin(), set.end());

  g.weights = metropolis_weights(g.neighbor_sets);
  g.min_positive_weight = std::numeric_limits<double>::infinity();
  for (const auto& row : g.weights) {
    for (const WeightEntry& e : row) {
      if (e.w > 0.0) g.min_positive_weight = std::min(g.min_positive_weight, e.w);
    }
  }

  if (with_diagnostics) {
    g.diameter = diameter(g.edges, n);
    if (g.diameter && n >= 2) {
      g.edge_utility = edge_utility(g.edges, n);
      g.contraction = contraction_constant(g);
    }
  }
  return g;
}

GraphSnapshot geometric_graph(const DevicePositions& pos, bool with_diagnostics) {
  const std::size_t n = pos.size();
  if (n == 0) throw InvalidInputError("geometric graph needs n >= 1");
  if (pos.y.size() != n || pos.radius.size() != n) {
    throw InvalidInputError("positions fields must all have length n");
  }

  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pos.x[i] - pos.x[j];
      const double dy = pos.y[i] - pos.y[j];
      const double range = std::min(pos.radius[i], pos.radius[j]);
      if (dx * dx + dy * dy <= range * range) {
        edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return snapshot_from_edges(n, std::move(edges), with_diagnostics);
}

DevicePositions step_positions(const DevicePositions& pos, Rng& rng, double max_step,
                               const BoundingBox& box) {
  if (max_step < 0.0) throw InvalidInputError("max_step must be nonnegative");
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) {
    throw InvalidInputError("bounding box must have positive extent");
  }
  auto reflect = [](double v, double lo, double hi) {
    const double width = hi - lo;
    double t = std::fmod(v - lo, 2.0 * width);
    if (t < 0.0) t += 2.0 * width;
    return lo + (t <= width ? t : 2.0 * width - t);
  };

  DevicePositions out = pos;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double step = rng.uniform(0.0, max_step);
    out.x[i] = reflect(pos.x[i] + step * std::cos(angle), box.x0, box.x1);
    out.y[i] = reflect(pos.y[i] + step * std::sin(angle), box.y0, box.y1);
  }
  return out;
}

bool check_b_connectivity(const std::vector<std::vector<std::pair<int, int>>>& edge_sets,
                          std::size_t n, int b) {
  if (b < 1) throw InvalidInputError("b must be >= 1");
  if (edge_sets.size() < static_cast<std::size_t>(b)) {
    throw InvalidInputError("need at least b snapshots");
  }
  const std::size_t windows = edge_sets.size() / static_cast<std::size_t>(b);
  for (std::size_t w = 0; w < windows; ++w) {
    std::vector<std::pair<int, int>> merged;
    for (std::size_t k = w * static_cast<std::size_t>(b); k < (w + 1) * static_cast<std::size_t>(b);
         ++k) {
      merged.insert(merged.end(), edge_sets[k].begin(), edge_sets[k].end());
    }
    if (!connected_from_adj(adjacency(merged, n))) return false;
  }
  return true;
}

bool check_b_connectivity(const std::vector<GraphSnapshot>& snapshots, int b) {
  if (snapshots.empty()) throw InvalidInputError("need at least one snapshot");
  std::vector<std::vector<std::pair<int, int>>> edge_sets;
  edge_sets.reserve(snapshots.size());
  for (const GraphSnapshot& s : snapshots) edge_sets.push_back(s.edges);
  return check_b_connectivity(edge_sets, snapshots.front().n, b);
}

DevicePositions uniform_positions(std::size_t n, const BoundingBox& box, double radius_min,
                                  double radius_max, Rng& rng) {
  if (n == 0) throw InvalidInputError("n must be >= 1");
  if (!(radius_min > 0.0) || radius_max < radius_min) {
    throw InvalidInputError("radius range must satisfy 0 < radius_min <= radius_max");
  }
  DevicePositions pos;
  pos.x.resize(n);
  pos.y.resize(n);
  pos.radius.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos.x[i] = rng.uniform(box.x0, box.x1);
    pos.y[i] = rng.uniform(box.y0, box.y1);
  }
  for (std::size_t i = 0; i < n; ++i) pos.radius[i] = rng.uniform(radius_min, radius_max);
  return pos;
}

GraphSequence generate_mobility_sequence(DevicePositions pos, std::size_t length,
                                         double max_step, const BoundingBox& box, int window_b,
                                         Rng& rng, bool with_diagnostics) {
  if (length == 0) throw InvalidInputError("sequence length must be >= 1");
  std::vector<GraphSnapshot> snapshots;
  snapshots.reserve(length);
  snapshots.push_back(geometric_graph(pos, with_diagnostics));
  for (std::size_t k = 1; k < length; ++k) {
    pos = step_positions(pos, rng, max_step, box);
    snapshots.push_back(geometric_graph(pos, with_diagnostics));
  }
  return GraphSequence::make(std::move(snapshots), window_b);
}

}  // namespace crowdcache
