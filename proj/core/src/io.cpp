#include "crowdcache/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "crowdcache/errors.hpp"

namespace crowdcache {

namespace {

constexpr double kEarthRadiusM = 6371000.0;

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no, const char* what) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IngestError("line " + std::to_string(line_no) + ": non-numeric " + what + " \"" +
                      text + "\"");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot open output file " + path);
  return out;
}

std::string sanitize(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return out;
}

}  // namespace

DevicePositions ingest_positions(const std::string& path, double radius_min, double radius_max,
                                 std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open positions file " + path);

  std::string line;
  if (!std::getline(in, line)) throw IngestError("positions file is empty: " + path);
  const std::vector<std::string> header = split_csv(line);
  bool latlon = false;
  if (header.size() == 3 && header[0] == "id" && header[1] == "lat" && header[2] == "lon") {
    latlon = true;
  } else if (header.size() == 3 && header[0] == "id" && header[1] == "x_m" &&
             header[2] == "y_m") {
    latlon = false;
  } else {
    throw IngestError("line 1: header must be id,lat,lon or id,x_m,y_m, got \"" + trim(line) +
                      "\"");
  }

  std::vector<std::string> ids;
  std::vector<double> a, b;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 3) {
      throw IngestError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    }
    if (std::find(ids.begin(), ids.end(), fields[0]) != ids.end()) {
      throw IngestError("line " + std::to_string(line_no) + ": duplicate id \"" + fields[0] +
                        "\"");
    }
    ids.push_back(fields[0]);
    a.push_back(parse_double(fields[1], line_no, latlon ? "lat" : "x_m"));
    b.push_back(parse_double(fields[2], line_no, latlon ? "lon" : "y_m"));
  }
  if (ids.empty()) throw IngestError("positions file has no data rows: " + path);

  DevicePositions pos;
  const std::size_t n = ids.size();
  pos.x.resize(n);
  pos.y.resize(n);
  if (latlon) {
    double lat0 = 0.0, lon0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lat0 += a[i];
      lon0 += b[i];
    }
    lat0 /= static_cast<double>(n);
    lon0 /= static_cast<double>(n);
    const double deg = std::numbers::pi / 180.0;
    const double cos_lat0 = std::cos(lat0 * deg);
    for (std::size_t i = 0; i < n; ++i) {
      pos.x[i] = kEarthRadiusM * (b[i] - lon0) * deg * cos_lat0;
      pos.y[i] = kEarthRadiusM * (a[i] - lat0) * deg;
    }
  } else {
    pos.x = a;
    pos.y = b;
  }

  Rng rng = Rng(seed).derive(17);  // decorrelated from the mobility stream
  pos.radius.resize(n);
  for (std::size_t i = 0; i < n; ++i) pos.radius[i] = rng.uniform(radius_min, radius_max);
  return pos;
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out = open_out(path);
  out << "k,err_z,err_x,disagreement\n";
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << fmt(r.err_z) << ',' << fmt(r.err_x) << ',' << fmt(r.disagreement)
        << '\n';
  }
}

void write_plot_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out = open_out(path);
  out << "k,err\n";
  for (const TraceRecord& r : trace.records) out << r.k << ',' << fmt(r.err_x) << '\n';
}

void write_summary_json(const std::string& path, const RunTrace& trace, std::size_t n_meds,
                        double alpha, double beta) {
  nlohmann::json j;
  j["algorithm"] = trace.algorithm;
  j["n_meds"] = n_meds;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["iterations"] = trace.iterations;
  j["wall_time_s"] = trace.wall_time_s;
  j["converged"] = trace.converged;
  j["final_error"] = trace.final_relative_error;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_scaling_csv(const std::string& path, const ScalingTable& table) {
  std::vector<ScalingRow> rows = table.rows;
  std::sort(rows.begin(), rows.end(), [](const ScalingRow& a, const ScalingRow& b) {
    return std::tie(a.n, a.algorithm, a.rep) < std::tie(b.n, b.algorithm, b.rep);
  });
  std::ofstream out = open_out(path);
  out << "n,algorithm,rep,iterations,wall_time_s\n";
  for (const ScalingRow& r : rows) {
    out << r.n << ',' << r.algorithm << ',' << r.rep << ',' << r.iterations << ','
        << fmt(r.wall_time_s) << '\n';
  }
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
  std::vector<SweepRecord> rows = result.records;
  std::sort(rows.begin(), rows.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.level, a.algorithm, a.rep) < std::tie(b.level, b.algorithm, b.rep);
  });
  std::ofstream out = open_out(path);
  out << "factor,level,algorithm,rep,avg_utility,total_resources,iterations\n";
  for (const SweepRecord& r : rows) {
    out << to_string(r.factor) << ',' << fmt(r.level) << ',' << r.algorithm << ',' << r.rep
        << ',' << fmt(r.avg_utility) << ',' << fmt(r.total_resources) << ',' << r.iterations
        << '\n';
  }
}

void write_snapshot_edges_csv(const std::string& path, const GraphSequence& graphs) {
  std::ofstream out = open_out(path);
  out << "k,i,j\n";
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    for (auto [i, j] : graphs.snapshots[k].edges) out << k << ',' << i << ',' << j << '\n';
  }
}

void write_snapshot_weights_csv(const std::string& path, const GraphSequence& graphs) {
  std::ofstream out = open_out(path);
  out << "k,i,j,w\n";
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const GraphSnapshot& g = graphs.snapshots[k];
    for (std::size_t i = 0; i < g.n; ++i) {
      for (const WeightEntry& e : g.weights[i]) {
        out << k << ',' << i << ',' << e.j << ',' << fmt(e.w) << '\n';
      }
    }
  }
}

namespace {

GameParams realize_params(const RunConfig& config) {
  if (config.inline_params) return *config.inline_params;
  Rng rng(config.seeds.params);
  return sample_base_case(*config.base_case, rng);
}

GraphSequence realize_sequence(const RunConfig& config, std::size_t n, bool with_diagnostics) {
  if (config.positions_csv) {
    DevicePositions pos = ingest_positions(*config.positions_csv, config.graph.radius_min,
                                           config.graph.radius_max, config.seeds.graph);
    if (pos.size() != n) {
      throw InvalidInputError("positions file has " + std::to_string(pos.size()) +
                              " devices, game has " + std::to_string(n));
    }
    return build_sequence(n, config.graph, pos, config.seeds.graph, with_diagnostics);
  }
  return build_sequence(n, config.graph, config.seeds.graph, with_diagnostics);
}

void print_summary_line(const RunConfig& config, const RunTrace& trace) {
  if (config.quiet) return;
  std::printf("%-16s iterations=%zu  final_error=%.6g  wall_time_s=%.4g  converged=%s\n",
              trace.algorithm.c_str(), trace.iterations, trace.final_relative_error,
              trace.wall_time_s, trace.converged ? "yes" : "no");
}

SolveResult dispatch_solver(const RunConfig& config, const GameParams& params,
                            const GraphSequence& graphs) {
  switch (config.algorithm) {
    case AlgorithmKind::Centralized: return solve_centralized(params, config.solver);
    case AlgorithmKind::DCrowdCache: return solve_dcrowdcache(params, config.solver, graphs);
    case AlgorithmKind::DCrowdCacheM: return solve_dcrowdcache_m(params, config.solver, graphs);
  }
  throw InvalidInputError("unknown algorithm");
}

void maybe_export_snapshots(const RunConfig& config, const GraphSequence& graphs,
                            const std::filesystem::path& dir) {
  if (!config.export_snapshots) return;
  write_snapshot_edges_csv((dir / "edges.csv").string(), graphs);
  write_snapshot_weights_csv((dir / "weights.csv").string(), graphs);
}

int run_inner(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream out = open_out((dir / "resolved_config.json").string());
    out << resolved_config_json(config);
  }

  switch (config.mode) {
    case RunMode::Solve: {
      const GameParams params = realize_params(config);
      const GraphSequence graphs = realize_sequence(config, params.n_meds, false);
      maybe_export_snapshots(config, graphs, dir);
      const SolveResult result = dispatch_solver(config, params, graphs);
      const std::string label = sanitize(result.trace.algorithm);
      write_trace_csv((dir / ("trace_" + label + ".csv")).string(), result.trace);
      write_summary_json((dir / ("summary_" + label + ".json")).string(), result.trace,
                         params.n_meds, config.solver.alpha, config.solver.beta);
      print_summary_line(config, result.trace);
      break;
    }
    case RunMode::Compare: {
      const GameParams params = realize_params(config);
      const GraphSequence graphs = realize_sequence(config, params.n_meds, false);
      maybe_export_snapshots(config, graphs, dir);
      ComparisonConfig cmp;
      cmp.solver = config.solver;
      cmp.beta1 = config.compare_beta1;
      cmp.beta2 = config.compare_beta2;
      const std::vector<RunTrace> traces = run_convergence_comparison(params, cmp, graphs);
      for (const RunTrace& trace : traces) {
        const std::string label = sanitize(trace.algorithm);
        double beta = 0.0;
        if (trace.algorithm == "dcrowdcache-m1") beta = cmp.beta1;
        if (trace.algorithm == "dcrowdcache-m2") beta = cmp.beta2;
        write_trace_csv((dir / ("trace_" + label + ".csv")).string(), trace);
        write_plot_csv((dir / ("plot_" + label + ".csv")).string(), trace);
        write_summary_json((dir / ("summary_" + label + ".json")).string(), trace,
                           params.n_meds, config.solver.alpha, beta);
        print_summary_line(config, trace);
      }
      break;
    }
    case RunMode::Scale: {
      ScalingConfig scaling;
      scaling.sizes = config.scale_sizes;
      scaling.reps = config.scale_reps;
      scaling.solver = config.solver;
      scaling.beta = config.scale_beta;
      scaling.base = *config.base_case;
      scaling.graph = config.graph;
      const ScalingTable table = run_scaling_study(scaling);
      write_scaling_csv((dir / "scaling.csv").string(), table);
      if (!config.quiet) {
        for (std::size_t n : scaling.sizes) {
          std::printf("n=%-6zu dcrowdcache: %.1f iters (%.4gs)   dcrowdcache-m: %.1f iters (%.4gs)\n",
                      n, table.mean_iterations(n, "dcrowdcache"),
                      table.mean_wall_time(n, "dcrowdcache"),
                      table.mean_iterations(n, "dcrowdcache-m"),
                      table.mean_wall_time(n, "dcrowdcache-m"));
        }
      }
      break;
    }
    case RunMode::Sweep: {
      SweepConfig sweep;
      sweep.factor = config.sweep_factor;
      sweep.levels = config.sweep_levels;
      sweep.reps = config.sweep_reps;
      sweep.resample_per_level = config.sweep_resample;
      sweep.base = *config.base_case;
      sweep.graph = config.graph;
      sweep.solver = config.solver;
      const SweepResult result = run_sensitivity(sweep);
      write_sweep_csv((dir / ("sweep_" + to_string(config.sweep_factor) + ".csv")).string(),
                      result);
      if (!config.quiet) {
        for (double level : sweep.levels) {
          std::printf("%s=%-6g proposed: utility=%.6g resources=%.6g\n",
                      to_string(config.sweep_factor).c_str(), level,
                      result.level_mean_utility(level, "proposed"),
                      result.level_mean_resources(level, "proposed"));
        }
      }
      break;
    }
    case RunMode::Diagnose: {
      const GameParams params = realize_params(config);
      const GraphSequence graphs = realize_sequence(config, params.n_meds, true);
      maybe_export_snapshots(config, graphs, dir);
      const AnalysisConstants constants = analysis_constants(params);
      nlohmann::json j;
      j["n_meds"] = params.n_meds;
      j["mu"] = constants.mu;
      j["l1"] = constants.l1;
      j["l2"] = constants.l2;
      j["l"] = constants.l;
      j["xi"] = constants.xi;
      j["b_connected"] = graphs.b_connected;
      const std::optional<double> c_max = graphs.max_contraction();
      if (c_max) {
        const StepSizeReport report = step_size_report(params, *c_max, config.solver.alpha);
        j["c_max"] = *c_max;
        j["alpha"] = report.alpha_tested;
        j["lambda_max"] = report.lambda_max;
        j["contracts"] = report.contracts;
        j["alpha_upper_simple"] = report.alpha_upper_simple;
        j["max_admissible_step"] = max_admissible_step(params, *c_max);
      }
      {
        std::ofstream out = open_out((dir / "diagnose.json").string());
        out << j.dump(2) << '\n';
      }
      if (!config.quiet) {
        std::printf("mu=%.8g l1=%.8g l2=%.8g l=%.8g xi=%.8g\n", constants.mu, constants.l1,
                    constants.l2, constants.l, constants.xi);
        if (c_max) {
          std::printf("c_max=%.8g alpha=%.8g lambda_max=%.8g contracts=%s alpha_hat=%.8g\n",
                      *c_max, config.solver.alpha, j["lambda_max"].get<double>(),
                      j["contracts"].get<bool>() ? "yes" : "no",
                      j["max_admissible_step"].get<double>());
        } else {
          std::printf("every snapshot disconnected; no contraction diagnostics\n");
        }
      }
      break;
    }
  }
  return 0;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    return run_inner(config);
  } catch (const std::exception& e) {
    std::cerr << "error [" << to_string(config.mode) << "]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace crowdcache
