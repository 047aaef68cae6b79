#include "crowdcache/config.hpp"

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "crowdcache/errors.hpp"

namespace crowdcache {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const char* where,
                         std::initializer_list<const char*> known) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return it.key() == k; }) == known.end()) {
      throw ConfigError(std::string("unknown key \"") + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
T get_or(const json& object, const char* key, T fallback) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key \"") + key + "\" has the wrong type");
  }
}

double positive(double v, const char* key) {
  if (!(v > 0.0)) throw ConfigError(std::string("key \"") + key + "\" must be positive");
  return v;
}

RunMode parse_mode(const std::string& text) {
  if (text == "solve") return RunMode::Solve;
  if (text == "compare") return RunMode::Compare;
  if (text == "scale") return RunMode::Scale;
  if (text == "sweep") return RunMode::Sweep;
  if (text == "diagnose") return RunMode::Diagnose;
  throw ConfigError("key \"mode\" must be one of solve|compare|scale|sweep|diagnose, got \"" +
                    text + "\"");
}

AlgorithmKind parse_algorithm(const std::string& text) {
  if (text == "centralized") return AlgorithmKind::Centralized;
  if (text == "dcrowdcache") return AlgorithmKind::DCrowdCache;
  if (text == "dcrowdcache-m") return AlgorithmKind::DCrowdCacheM;
  throw ConfigError(
      "key \"algorithm\" must be one of centralized|dcrowdcache|dcrowdcache-m, got \"" + text +
      "\"");
}

SweepFactor parse_factor(const std::string& text) {
  if (text == "gamma") return SweepFactor::Gamma;
  if (text == "price") return SweepFactor::Price;
  if (text == "qcost") return SweepFactor::QCost;
  throw ConfigError("key \"factor\" must be one of gamma|price|qcost, got \"" + text + "\"");
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Solve: return "solve";
    case RunMode::Compare: return "compare";
    case RunMode::Scale: return "scale";
    case RunMode::Sweep: return "sweep";
    case RunMode::Diagnose: return "diagnose";
  }
  return "?";
}

std::string to_string(AlgorithmKind algorithm) {
  switch (algorithm) {
    case AlgorithmKind::Centralized: return "centralized";
    case AlgorithmKind::DCrowdCache: return "dcrowdcache";
    case AlgorithmKind::DCrowdCacheM: return "dcrowdcache-m";
  }
  return "?";
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown_keys(root, "the top level",
                      {"description", "mode", "algorithm", "out_dir", "quiet", "params",
                       "base_case", "solver", "graph", "seeds", "sweep", "scale", "compare"});
  if (!root.contains("mode")) throw ConfigError("missing required key \"mode\"");

  RunConfig config;
  config.mode = parse_mode(get_or<std::string>(root, "mode", ""));
  config.description = get_or<std::string>(root, "description", "");
  if (root.contains("algorithm")) {
    config.algorithm = parse_algorithm(root.at("algorithm").get<std::string>());
  }
  config.out_dir = get_or<std::string>(root, "out_dir", "out");
  config.quiet = get_or<bool>(root, "quiet", false);

  if (root.contains("params") && root.contains("base_case")) {
    throw ConfigError("keys \"params\" and \"base_case\" are mutually exclusive");
  }
  if (root.contains("params")) {
    try {
      config.inline_params = game_params_from_json(root.at("params").dump());
    } catch (const InvalidInputError& e) {
      throw ConfigError(std::string("key \"params\": ") + e.what());
    }
  } else if (root.contains("base_case")) {
    const json& bc = root.at("base_case");
    reject_unknown_keys(bc, "\"base_case\"",
                        {"n_meds", "gamma", "p_bar", "q_range", "h_range", "cap_choices"});
    BaseCaseSpec spec;
    spec.n_meds = get_or<std::size_t>(bc, "n_meds", 512);
    if (spec.n_meds == 0) throw ConfigError("key \"n_meds\" must be >= 1");
    spec.gamma = get_or<double>(bc, "gamma", 0.0);  // <= 0 selects 0.02/n_meds
    spec.p_bar = get_or<double>(bc, "p_bar", 1.0);
    const auto q_range = get_or<std::vector<double>>(bc, "q_range", {0.01, 0.1});
    const auto h_range = get_or<std::vector<double>>(bc, "h_range", {0.05, 0.15});
    if (q_range.size() != 2 || h_range.size() != 2) {
      throw ConfigError("keys \"q_range\"/\"h_range\" must be [low, high] pairs");
    }
    spec.q_low = positive(q_range[0], "q_range");
    spec.q_high = q_range[1];
    if (spec.q_high < spec.q_low) throw ConfigError("key \"q_range\" must be ordered");
    spec.h_low = h_range[0];
    spec.h_high = h_range[1];
    if (spec.h_low < 0.0 || spec.h_high < spec.h_low) {
      throw ConfigError("key \"h_range\" must be ordered and nonnegative");
    }
    spec.cap_choices =
        get_or<std::vector<double>>(bc, "cap_choices", {16.0, 32.0, 48.0, 64.0});
    for (double c : spec.cap_choices) positive(c, "cap_choices");
    config.base_case = spec;
  } else {
    throw ConfigError("one of \"params\" or \"base_case\" is required");
  }
  if ((config.mode == RunMode::Scale || config.mode == RunMode::Sweep) && !config.base_case) {
    throw ConfigError("modes scale/sweep require \"base_case\" (parameters are resampled)");
  }

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    reject_unknown_keys(s, "\"solver\"",
                        {"alpha", "beta", "tol", "max_iters", "init", "stopping",
                         "momentum_clamp"});
    config.solver.alpha = positive(get_or<double>(s, "alpha", 0.05), "alpha");
    config.solver.beta = get_or<double>(s, "beta", 0.0);
    if (!(config.solver.beta >= 0.0 && config.solver.beta < 1.0)) {
      throw ConfigError("key \"beta\" must lie in [0, 1)");
    }
    config.solver.tol = positive(get_or<double>(s, "tol", 1e-6), "tol");
    config.solver.max_iters = get_or<std::size_t>(s, "max_iters", 100000);
    if (config.solver.max_iters == 0) throw ConfigError("key \"max_iters\" must be >= 1");
    const std::string init = get_or<std::string>(s, "init", "zeros");
    if (init == "zeros") {
      config.solver.init = InitKind::Zeros;
    } else if (init == "seeded-uniform") {
      config.solver.init = InitKind::SeededUniform;
    } else {
      throw ConfigError("key \"init\" must be zeros|seeded-uniform, got \"" + init + "\"");
    }
    const std::string stopping = get_or<std::string>(s, "stopping", "oracle");
    if (stopping == "oracle") {
      config.solver.stopping = StoppingRule::OracleRelative;
    } else if (stopping == "self") {
      config.solver.stopping = StoppingRule::SelfRelative;
    } else {
      throw ConfigError("key \"stopping\" must be oracle|self, got \"" + stopping + "\"");
    }
    config.solver.momentum_clamp = get_or<bool>(s, "momentum_clamp", false);
  }

  if (root.contains("graph")) {
    const json& g = root.at("graph");
    reject_unknown_keys(g, "\"graph\"",
                        {"radius_min", "radius_max", "max_step", "box", "b", "length",
                         "positions_csv", "export_snapshots"});
    config.graph.radius_min = positive(get_or<double>(g, "radius_min", 150.0), "radius_min");
    config.graph.radius_max = get_or<double>(g, "radius_max", 200.0);
    if (config.graph.radius_max < config.graph.radius_min) {
      throw ConfigError("key \"radius_max\" must be >= radius_min");
    }
    config.graph.max_step = get_or<double>(g, "max_step", 10.0);
    if (config.graph.max_step < 0.0) throw ConfigError("key \"max_step\" must be >= 0");
    const auto box = get_or<std::vector<double>>(g, "box", {0.0, 0.0, 1000.0, 1000.0});
    if (box.size() != 4 || !(box[2] > box[0]) || !(box[3] > box[1])) {
      throw ConfigError("key \"box\" must be [x0, y0, x1, y1] with positive extent");
    }
    config.graph.box = {box[0], box[1], box[2], box[3]};
    const long long b = get_or<long long>(g, "b", 1);
    if (b < 1) throw ConfigError("key \"b\" must be >= 1");
    config.graph.window_b = static_cast<int>(b);
    config.graph.length = get_or<std::size_t>(g, "length", 64);
    if (config.graph.length == 0) throw ConfigError("key \"length\" must be >= 1");
    if (g.contains("positions_csv")) {
      const std::string path = g.at("positions_csv").get<std::string>();
      if (!std::filesystem::exists(path)) {
        throw ConfigError("key \"positions_csv\": file does not exist: " + path);
      }
      config.positions_csv = path;
    }
    config.export_snapshots = get_or<bool>(g, "export_snapshots", false);
  }

  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    reject_unknown_keys(s, "\"seeds\"", {"params", "graph", "init"});
    config.seeds.params = get_or<std::uint64_t>(s, "params", 0);
    config.seeds.graph = get_or<std::uint64_t>(s, "graph", 1);
    config.seeds.init = get_or<std::uint64_t>(s, "init", 2);
  }
  config.solver.init_seed = config.seeds.init;
  if (config.base_case) config.base_case->seed = config.seeds.params;

  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    reject_unknown_keys(s, "\"sweep\"", {"factor", "levels", "reps", "resample_per_level"});
    if (s.contains("factor")) config.sweep_factor = parse_factor(s.at("factor").get<std::string>());
    config.sweep_levels = get_or<std::vector<double>>(s, "levels", config.sweep_levels);
    for (double level : config.sweep_levels) positive(level, "levels");
    config.sweep_reps = get_or<std::size_t>(s, "reps", 20);
    if (config.sweep_reps == 0) throw ConfigError("key \"reps\" must be >= 1");
    config.sweep_resample = get_or<bool>(s, "resample_per_level", false);
  }

  if (root.contains("scale")) {
    const json& s = root.at("scale");
    reject_unknown_keys(s, "\"scale\"", {"sizes", "reps", "beta"});
    config.scale_sizes = get_or<std::vector<std::size_t>>(s, "sizes", config.scale_sizes);
    for (std::size_t n : config.scale_sizes) {
      if (n == 0) throw ConfigError("key \"sizes\" entries must be >= 1");
    }
    config.scale_reps = get_or<std::size_t>(s, "reps", 20);
    if (config.scale_reps == 0) throw ConfigError("key \"reps\" must be >= 1");
    config.scale_beta = get_or<double>(s, "beta", 0.5);
    if (!(config.scale_beta >= 0.0 && config.scale_beta < 1.0)) {
      throw ConfigError("key \"beta\" must lie in [0, 1)");
    }
  }

  if (root.contains("compare")) {
    const json& s = root.at("compare");
    reject_unknown_keys(s, "\"compare\"", {"beta1", "beta2"});
    config.compare_beta1 = get_or<double>(s, "beta1", 0.5);
    config.compare_beta2 = get_or<double>(s, "beta2", 0.8);
    for (double beta : {config.compare_beta1, config.compare_beta2}) {
      if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("keys \"beta1\"/\"beta2\" must lie in [0, 1)");
    }
  }

  return config;
}

std::string resolved_config_json(const RunConfig& config) {
  json root;
  root["mode"] = to_string(config.mode);
  if (!config.description.empty()) root["description"] = config.description;
  root["algorithm"] = to_string(config.algorithm);
  root["out_dir"] = config.out_dir;
  root["quiet"] = config.quiet;

  if (config.inline_params) {
    root["params"] = json::parse(to_json(*config.inline_params));
  } else if (config.base_case) {
    const BaseCaseSpec& spec = *config.base_case;
    root["base_case"] = {
        {"n_meds", spec.n_meds},         {"gamma", spec.gamma},
        {"p_bar", spec.p_bar},           {"q_range", {spec.q_low, spec.q_high}},
        {"h_range", {spec.h_low, spec.h_high}}, {"cap_choices", spec.cap_choices},
    };
  }

  root["solver"] = {
      {"alpha", config.solver.alpha},
      {"beta", config.solver.beta},
      {"tol", config.solver.tol},
      {"max_iters", config.solver.max_iters},
      {"init", config.solver.init == InitKind::Zeros ? "zeros" : "seeded-uniform"},
      {"stopping", config.solver.stopping == StoppingRule::OracleRelative ? "oracle" : "self"},
      {"momentum_clamp", config.solver.momentum_clamp},
  };

  json graph = {
      {"radius_min", config.graph.radius_min},
      {"radius_max", config.graph.radius_max},
      {"max_step", config.graph.max_step},
      {"box",
       {config.graph.box.x0, config.graph.box.y0, config.graph.box.x1, config.graph.box.y1}},
      {"b", config.graph.window_b},
      {"length", config.graph.length},
      {"export_snapshots", config.export_snapshots},
  };
  if (config.positions_csv) graph["positions_csv"] = *config.positions_csv;
  root["graph"] = graph;

  root["seeds"] = {
      {"params", config.seeds.params}, {"graph", config.seeds.graph}, {"init", config.seeds.init}};

  if (config.mode == RunMode::Sweep) {
    root["sweep"] = {
        {"factor", to_string(config.sweep_factor)},
        {"levels", config.sweep_levels},
        {"reps", config.sweep_reps},
        {"resample_per_level", config.sweep_resample},
    };
  }
  if (config.mode == RunMode::Scale) {
    root["scale"] = {
        {"sizes", config.scale_sizes}, {"reps", config.scale_reps}, {"beta", config.scale_beta}};
  }
  if (config.mode == RunMode::Compare) {
    root["compare"] = {{"beta1", config.compare_beta1}, {"beta2", config.compare_beta2}};
  }
  return root.dump(2) + "\n";
}

}  // namespace crowdcache
