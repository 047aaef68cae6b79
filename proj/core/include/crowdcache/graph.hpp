#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "crowdcache/rng.hpp"

namespace crowdcache {

struct BoundingBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1000.0;
  double y1 = 1000.0;
};

/// Planar device locations (meters) and per-device coverage radii.
struct DevicePositions {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> radius;

  std::size_t size() const { return x.size(); }
};

struct WeightEntry {
  int j;
  double w;
};

/// One time step of the communication topology: undirected edges, self-
/// inclusive neighbor sets, the Metropolis weight matrix (stored sparse,
/// row-major), and the connectivity diagnostics used by the convergence
/// theory. Diagnostics are std::nullopt when the snapshot is disconnected
/// (or, for the pairwise ones, when n == 1).
struct GraphSnapshot {
  std::size_t n = 0;
  std::vector<std::pair<int, int>> edges;          // i < j
  std::vector<std::vector<int>> neighbor_sets;     // sorted, each contains its own index
  std::vector<std::vector<WeightEntry>> weights;   // sorted by j, includes diagonal
  double min_positive_weight = 0.0;
  std::optional<int> diameter;
  std::optional<long long> edge_utility;
  std::optional<double> contraction;

  bool connected() const { return diameter.has_value(); }
  double weight(std::size_t i, std::size_t j) const;
  std::vector<double> dense_weights() const;  // row-major n*n, for small n
};

/// A cyclic schedule of snapshots plus its connectivity window B. The solver
/// uses snapshot k % size() at iteration k, so B-connectivity over the cycle
/// extends to every k when size() is a multiple of B.
struct GraphSequence {
  std::vector<GraphSnapshot> snapshots;
  int window_b = 1;
  bool b_connected = false;

  std::size_t size() const { return snapshots.size(); }
  const GraphSnapshot& at_step(std::size_t k) const { return snapshots[k % snapshots.size()]; }
  /// Largest contraction constant over the connected snapshots, if any.
  std::optional<double> max_contraction() const;

  static GraphSequence make(std::vector<GraphSnapshot> snapshots, int window_b);
};

/// Builds the snapshot of a random geometric graph: edge (i,j) present iff
/// the planar distance is at most min(radius_i, radius_j), which keeps every
/// link bidirectional. with_diagnostics controls whether diameter /
/// edge-utility / contraction are computed (skip for very large graphs).
GraphSnapshot geometric_graph(const DevicePositions& pos, bool with_diagnostics = true);

/// Assembles a snapshot (neighbor sets, weights, diagnostics) from an
/// explicit undirected edge list.
GraphSnapshot snapshot_from_edges(std::size_t n, std::vector<std::pair<int, int>> edges,
                                  bool with_diagnostics = true);

/// Metropolis weights from self-inclusive neighbor sets:
///   W_ij = 1 / (1 + max(|N_i|, |N_j|))   for j in N_i \ {i},
///   W_ii = 1 - sum_{j != i} W_ij.
/// Counts are self-inclusive exactly as exchanged by the devices, so a
/// degree-d node counts d+1 (K_2 gets 1/3, not the classical 1/2).
std::vector<std::vector<WeightEntry>> metropolis_weights(
    const std::vector<std::vector<int>>& neighbor_sets);

/// Hop-count diameter ignoring self-loops; nullopt when disconnected. 0 for a
/// single-node graph.
std::optional<int> diameter(const std::vector<std::pair<int, int>>& edges, std::size_t n);

/// Maximal edge-utility: with one canonical shortest path per node pair
/// (BFS from the lower-indexed endpoint, lowest-index predecessor on ties),
/// the largest number of pairs routed across any single edge. Throws
/// UndefinedQuantityError when the graph is disconnected or has no pairs.
long long edge_utility(const std::vector<std::pair<int, int>>& edges, std::size_t n);

/// Contraction constant c of the mixing step on a connected snapshot: the
/// factor with ||W z - mean||_F <= c ||z - mean||_F for every z, given by
/// c = sqrt(1 - n w^2 / (D K)) with w the smallest positive weight, D the
/// diameter and K the maximal edge-utility. Lies in (0,1) when connected.
/// Throws UndefinedQuantityError when disconnected or n == 1.
double contraction_constant(const GraphSnapshot& snapshot);

/// Moves every device by a uniformly random direction and a uniform length
/// in [0, max_step], reflecting at the bounding box. Radii are unchanged.
DevicePositions step_positions(const DevicePositions& pos, Rng& rng, double max_step,
                               const BoundingBox& box);

/// Assumption check: for every full window [kB, (k+1)B), the union of the
/// window's edge sets is connected. The final partial window is ignored.
bool check_b_connectivity(const std::vector<GraphSnapshot>& snapshots, int b);
bool check_b_connectivity(const std::vector<std::vector<std::pair<int, int>>>& edge_sets,
                          std::size_t n, int b);

/// Uniform positions in the box with radii drawn from [radius_min, radius_max].
DevicePositions uniform_positions(std::size_t n, const BoundingBox& box, double radius_min,
                                  double radius_max, Rng& rng);

/// Evolves positions `length` times and snapshots the geometric graph at each
/// step (the initial positions give snapshot 0).
GraphSequence generate_mobility_sequence(DevicePositions pos, std::size_t length,
                                         double max_step, const BoundingBox& box, int window_b,
                                         Rng& rng, bool with_diagnostics = true);

}  // namespace crowdcache
