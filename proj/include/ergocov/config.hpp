#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergocov/markov_policy.hpp"
#include "ergocov/swarm.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

struct NamedRoi {
  std::string name;
  RegionSet cells;
};

struct RunOptions {
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "ergocov-out";
  bool trajectory = false;
  int curve_stride = 10;  // row spacing of aggregated curves
  int threads = 0;        // 0: hardware concurrency
};

struct CompareOptions {
  std::vector<int> greedy_tau_gp{100, 50};
  int coverage_deadline = 0;  // success means full coverage before this step; 0: horizon
};

/// A fully parsed and validated experiment. `source` is the JSON document it
/// was built from, kept so artifacts can embed it.
struct ExperimentConfig {
  nlohmann::json source;
  std::string name;
  World world;
  MapSchedule schedule;
  std::vector<NamedRoi> rois;
  SwarmConfig swarm;
  BeliefConfig belief;
  PolicyConfig policy;
  RunOptions run;
  CompareOptions compare;
};

/// Builds and validates a config. Unknown keys, wrong types and out-of-range
/// values throw ConfigError naming the offending field (e.g. "swarm.tau_gp").
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON file and parses it. Syntax errors are ConfigErrors on field
/// "config"; an unreadable file is an Error with code kIo.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ergocov
