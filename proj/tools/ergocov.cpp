// ergocov: run, sweep, compare and plot decentralized ergodic coverage
// experiments. Exit codes: 0 ok, 1 config error, 2 runtime error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergocov/config.hpp"
#include "ergocov/error.hpp"
#include "ergocov/experiment.hpp"
#include "ergocov/plot.hpp"

namespace fs = std::filesystem;
using namespace ergocov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// One JSON object per line on stderr so scripts can parse failures.
int report(const std::string& kind, const std::string& code, const std::string& field, const std::string& message,
           int exit_code) {
  nlohmann::json line{{"error", kind}, {"code", code}, {"message", message}};
  if (!field.empty()) line["field"] = field;
  std::cerr << line.dump() << '\n';
  return exit_code;
}

void print_group(const GroupResult& g) {
  std::vector<std::optional<double>> regret, cov;
  for (const auto& s : g.seeds) {
    regret.push_back(s.summary.final_regret);
    cov.push_back(s.summary.coverage_time ? std::optional<double>(*s.summary.coverage_time) : std::nullopt);
  }
  const Stat r = stat_of(regret);
  const Stat c = stat_of(cov);
  std::printf("%-28s seeds=%zu final_regret=%.4f+-%.4f covered=%d/%zu", g.label.c_str(), g.seeds.size(), r.mean,
              r.std, c.count, g.seeds.size());
  if (c.count) std::printf(" coverage_time=%.1f+-%.1f", c.mean, c.std);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized ergodic coverage experiments on grid worlds"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;

  auto* run_cmd = app.add_subcommand("run", "Run every seed of a config");
  run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string axis, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter across values and seeds");
  sweep_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--axis", axis, "Parameter: tau, tau_gp, tau_p, comm_radius, agents, ... or a dotted path")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma separated values, e.g. 1,5,global")->required();

  auto* compare_cmd = app.add_subcommand("compare", "Ergodic planner against greedy GP-UCB");
  compare_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();

  for (auto* cmd : {run_cmd, sweep_cmd, compare_cmd}) {
    cmd->add_option("-o,--output", out_dir,
                    std::string("Output directory (default: run.output_dir under $") + kOutputRootEnv + ")");
    cmd->add_option("-j,--threads", threads, "Worker threads (default: run.threads)");
  }

  std::string plot_dir;
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG charts for an artifact directory");
  plot_cmd->add_option("dir", plot_dir, "Artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }

  try {
    std::optional<fs::path> override_dir;
    if (out_dir) override_dir = fs::path(*out_dir);

    if (*plot_cmd) {
      for (const auto& p : plot_directory(plot_dir)) std::printf("%s\n", p.string().c_str());
      return kExitOk;
    }

    nlohmann::json doc = read_json_file(config_path);
    if (threads) doc["run"]["threads"] = *threads;
    const ExperimentConfig cfg = parse_config(doc);
    const fs::path out = resolve_output_dir(cfg.run, override_dir);

    if (*run_cmd) {
      print_group(run_experiment(cfg, out));
    } else if (*sweep_cmd) {
      for (const auto& g : run_sweep(doc, axis, parse_axis_values(values), out)) print_group(g);
    } else if (*compare_cmd) {
      for (const auto& g : run_compare(cfg, out)) print_group(g);
    }
    std::printf("artifacts: %s\n", out.string().c_str());
    return kExitOk;
  } catch (const ConfigError& e) {
    return report("config", std::string(to_string(e.code())), e.field(), e.what(), kExitConfig);
  } catch (const Error& e) {
    return report("runtime", std::string(to_string(e.code())), "", e.what(), kExitRuntime);
  } catch (const std::exception& e) {
    return report("runtime", "internal", "", e.what(), kExitRuntime);
  }
}
