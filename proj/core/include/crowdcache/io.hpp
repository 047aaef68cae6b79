#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdcache/config.hpp"
#include "crowdcache/experiments.hpp"
#include "crowdcache/graph.hpp"
#include "crowdcache/solvers.hpp"

namespace crowdcache {

/// Reads device positions from a CSV with header `id,lat,lon` (coordinates
/// are projected to planar meters by an equirectangular projection about the
/// dataset centroid) or `id,x_m,y_m` (used as-is). Coverage radii are drawn
/// uniformly from [radius_min, radius_max] with the given seed. Duplicate ids,
/// bad headers, and non-numeric fields raise IngestError with the line number.
DevicePositions ingest_positions(const std::string& path, double radius_min, double radius_max,
                                 std::uint64_t seed);

/// Writers; all doubles are printed with %.17g so outputs are byte-stable.
void write_trace_csv(const std::string& path, const RunTrace& trace);
void write_plot_csv(const std::string& path, const RunTrace& trace);
void write_summary_json(const std::string& path, const RunTrace& trace, std::size_t n_meds,
                        double alpha, double beta);
void write_scaling_csv(const std::string& path, const ScalingTable& table);
void write_sweep_csv(const std::string& path, const SweepResult& result);
void write_snapshot_edges_csv(const std::string& path, const GraphSequence& graphs);
void write_snapshot_weights_csv(const std::string& path, const GraphSequence& graphs);

/// Executes the configured mode, writing all artifacts (including
/// resolved_config.json) into config.out_dir. Returns the process exit
/// status: 0 on success, 1 on any solver/ingestion error (the message goes
/// to stderr with the mode as context).
int run(const RunConfig& config);

}  // namespace crowdcache
