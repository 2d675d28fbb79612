#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergocov/config.hpp"
#include "ergocov/metrics.hpp"

namespace ergocov {

inline constexpr int kSummarySchemaVersion = 1;
inline constexpr const char* kOutputRootEnv = "ERGOCOV_OUTPUT_ROOT";

inline constexpr const char* kMetricsHeader = "k,regret_running,empirical_error,belief_error,kl_alignment";
inline constexpr const char* kTrajectoryHeader = "k,agent,region,col,row,empirical_error,belief_error";
inline constexpr const char* kFinalMapsHeader = "region,col,row,accessible,true_target,team_belief,team_empirical";
inline constexpr const char* kCurvesMetrics = "regret_running,empirical_error,belief_error,kl_alignment";

struct SeedResult {
  std::uint64_t seed = 0;
  RunSummary summary;
  std::vector<MetricRow> rows;
};

/// A group of seeds run under one configuration (a sweep value or a compare arm).
struct GroupResult {
  std::string label;
  std::vector<SeedResult> seeds;
};

/// Shortest round-trip-stable text used for every CSV number.
std::string format_number(double v);

/// Relative output dirs are resolved against $ERGOCOV_OUTPUT_ROOT when set.
/// An explicit override wins over both.
std::filesystem::path resolve_output_dir(const RunOptions& run,
                                         const std::optional<std::filesystem::path>& override_dir = {});

std::string metrics_csv(const std::vector<MetricRow>& rows);
nlohmann::json summary_json(const ExperimentConfig& cfg, std::uint64_t seed, const RunSummary& summary);

/// Runs one seed and writes metrics.csv, summary.json, final_maps.csv and
/// (if enabled) trajectory.csv into `dir`.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// All seeds of `cfg` into out/seed-<s>/, plus out/config.json and out/runs.csv.
GroupResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Returns `doc` with the sweep axis set to `value`. Axis names are either
/// dotted paths ("belief.noise_std"), a short swarm/belief/policy key
/// ("comm_radius"), or "tau" for tau_gp and tau_p together.
nlohmann::json with_axis(nlohmann::json doc, const std::string& axis, const nlohmann::json& value);

/// Parses "10,100,500" or "1,5,global" into JSON scalars.
std::vector<nlohmann::json> parse_axis_values(const std::string& text);

/// Cross product of axis values and seeds. Writes out/<axis>=<value>/seed-<s>/,
/// out/aggregate.csv and out/curves.csv. Every config is validated first.
std::vector<GroupResult> run_sweep(const nlohmann::json& doc, const std::string& axis,
                                   const std::vector<nlohmann::json>& values,
                                   const std::filesystem::path& out);

/// Ergodic planner against greedy GP-UCB at each compare.greedy_tau_gp, same
/// worlds and seeds. Writes table1.csv, table2.csv and curves.csv.
std::vector<GroupResult> run_compare(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Mean and sample standard deviation over the present values.
struct Stat {
  int count = 0;
  double mean = 0.0;
  double std = 0.0;
};
Stat stat_of(const std::vector<std::optional<double>>& values);

/// Runs fn(0..n-1) on up to `threads` workers (0: hardware concurrency). The
/// exception of the lowest failing index is rethrown after all jobs finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ergocov
