// crowdcache: batch simulator for decentralized equilibrium seeking over
// time-varying device-to-device graphs.
//
//   crowdcache <mode> --config <path> [--out <dir>] [--seed <int>] [--quiet]
//
// Modes: solve, compare, scale, sweep, diagnose. The config file is a JSON
// document; every run writes resolved_config.json with all effective values,
// and re-running from that file reproduces the outputs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crowdcache/config.hpp"
#include "crowdcache/errors.hpp"
#include "crowdcache/io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw crowdcache::ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CrowdCache equilibrium simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool quiet = false;

  const std::vector<std::pair<std::string, crowdcache::RunMode>> modes = {
      {"solve", crowdcache::RunMode::Solve},     {"compare", crowdcache::RunMode::Compare},
      {"scale", crowdcache::RunMode::Scale},     {"sweep", crowdcache::RunMode::Sweep},
      {"diagnose", crowdcache::RunMode::Diagnose},
  };
  for (const auto& [name, mode] : modes) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides config out_dir)");
    sub->add_option("--seed", seed, "master seed (overrides all three config seeds)");
    sub->add_flag("--quiet", quiet, "suppress per-run console summaries");
    (void)mode;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    crowdcache::RunConfig config = crowdcache::parse_config(read_file(config_path));

    const std::string mode_name = app.get_subcommands().front()->get_name();
    for (const auto& [name, mode] : modes) {
      if (name == mode_name && config.mode != mode) {
        throw crowdcache::ConfigError("config declares mode \"" +
                                      crowdcache::to_string(config.mode) +
                                      "\" but the CLI was invoked with \"" + name + "\"");
      }
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed >= 0) {
      // One master seed fans out to the three streams.
      const auto base = static_cast<std::uint64_t>(seed);
      config.seeds.params = base;
      config.seeds.graph = base + 1;
      config.seeds.init = base + 2;
      config.solver.init_seed = config.seeds.init;
      if (config.base_case) config.base_case->seed = config.seeds.params;
    }
    if (quiet) config.quiet = true;

    return crowdcache::run(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
