#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergocov/config.hpp"
#include "ergocov/error.hpp"
#include "ergocov/experiment.hpp"
#include "ergocov/plot.hpp"

using namespace ergocov;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ergocov_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

int line_count(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

json small_doc() {
  return json::parse(R"({
    "name": "small",
    "world": {"width": 4, "height": 4, "weights": {"base": 0.2, "blobs": [
      {"type": "rect", "rect": [2, 2, 3, 3], "value": 1.0}]},
      "rois": [{"name": "corner", "rect": [2, 2, 3, 3]}]},
    "swarm": {"agents": 2, "horizon": 60, "tau_gp": 5, "tau_p": 5, "beta": 2.0, "comm_radius": 1.5},
    "belief": {"lengthscale": 1.0, "noise_std": 0.05},
    "run": {"seeds": [3, 4], "trajectory": true, "curve_stride": 7, "threads": 2}
  })");
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(ERGOCOV_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal 2x2 run writes one record per step") {
  const auto out = fresh_dir("smoke");
  const auto cfg = parse_config(json::parse(R"({
    "world": {"width": 2, "height": 2, "weights": {"base": 1.0}},
    "swarm": {"horizon": 10}
  })"));
  const auto group = run_experiment(cfg, out);
  REQUIRE(group.seeds.size() == 1);
  CHECK(group.seeds[0].rows.size() == 10);
  CHECK(line_count(out / "seed-0" / "metrics.csv") == 11);
  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "runs.csv"));
  CHECK_FALSE(fs::exists(out / "seed-0" / "trajectory.csv"));
}

TEST_CASE("artifact headers and summary schema") {
  const auto out = fresh_dir("schema");
  const auto cfg = parse_config(small_doc());
  run_experiment(cfg, out);
  const auto seed = out / "seed-3";
  CHECK(first_line(seed / "metrics.csv") == "k,regret_running,empirical_error,belief_error,kl_alignment");
  CHECK(first_line(seed / "trajectory.csv") == "k,agent,region,col,row,empirical_error,belief_error");
  CHECK(first_line(seed / "final_maps.csv") ==
        "region,col,row,accessible,true_target,team_belief,team_empirical");
  CHECK(first_line(out / "runs.csv") ==
        "seed,steps,coverage_time,final_regret,final_empirical_error,final_belief_error,mean_kl_alignment,"
        "map_drift,roi_corner");
  CHECK(line_count(seed / "trajectory.csv") == 1 + 60 * 2);
  CHECK(line_count(seed / "final_maps.csv") == 17);

  const json s = json::parse(slurp(seed / "summary.json"));
  CHECK(s["schema_version"] == kSummarySchemaVersion);
  CHECK(s["seed"] == 3);
  CHECK(s["steps"] == 60);
  CHECK(s["planner"] == "ergodic");
  CHECK(s["config"] == small_doc());
  CHECK(s["rois"][0]["name"] == "corner");
  CHECK(s["rois"][0]["regions"] == json::parse("[10, 11, 14, 15]"));
  for (const char* key : {"coverage_time", "map_drift", "final_regret", "final_empirical_error",
                          "final_belief_error", "mean_kl_alignment"}) {
    CHECK(s.contains(key));
  }
  CHECK(json::parse(slurp(out / "config.json")) == small_doc());
}

TEST_CASE("metrics.csv bytes are reproducible") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  const auto cfg = parse_config(small_doc());
  run_experiment(cfg, a);
  auto single = small_doc();
  single["run"]["threads"] = 1;
  run_experiment(parse_config(single), b);
  for (const char* seed : {"seed-3", "seed-4"}) {
    for (const char* file : {"metrics.csv", "trajectory.csv", "final_maps.csv"}) {
      CAPTURE(file);
      CHECK(slurp(a / seed / file) == slurp(b / seed / file));
    }
    // The embedded configs differ in run.threads only.
    auto sa = json::parse(slurp(a / seed / "summary.json"));
    auto sb = json::parse(slurp(b / seed / "summary.json"));
    sa.erase("config");
    sb.erase("config");
    CHECK(sa == sb);
  }
  CHECK(slurp(a / "seed-3" / "metrics.csv") != slurp(a / "seed-4" / "metrics.csv"));
}

TEST_CASE("sweep results do not depend on value order") {
  const auto fwd = fresh_dir("sweep_fwd");
  const auto rev = fresh_dir("sweep_rev");
  const auto doc = small_doc();
  const auto g1 = run_sweep(doc, "comm_radius", parse_axis_values("0,1.5,global"), fwd);
  const auto g2 = run_sweep(doc, "comm_radius", parse_axis_values("global,1.5,0"), rev);
  REQUIRE(g1.size() == 3);
  CHECK(g1[0].label == "0");
  CHECK(g2[0].label == "global");
  for (const char* value : {"comm_radius=0", "comm_radius=1.5", "comm_radius=global"}) {
    for (const char* seed : {"seed-3", "seed-4"}) {
      CHECK(slurp(fwd / value / seed / "metrics.csv") == slurp(rev / value / seed / "metrics.csv"));
    }
  }
  CHECK(first_line(fwd / "aggregate.csv").rfind("axis,value,seeds,final_regret_mean,final_regret_std", 0) == 0);
  CHECK(first_line(fwd / "curves.csv") == "value,k,regret_running,empirical_error,belief_error,kl_alignment");
  CHECK(line_count(fwd / "aggregate.csv") == 4);
  // k = 0, 7, ..., 56 and the last step 59, per value.
  CHECK(line_count(fwd / "curves.csv") == 1 + 3 * 10);

  // A single value and seed degenerates to a plain run.
  auto one = small_doc();
  one["run"]["seeds"] = json::array({3});
  const auto sweep_one = fresh_dir("sweep_one");
  const auto run_one = fresh_dir("run_one");
  run_sweep(one, "tau", parse_axis_values("5"), sweep_one);
  run_experiment(parse_config(one), run_one);
  CHECK(slurp(sweep_one / "tau=5" / "seed-3" / "metrics.csv") == slurp(run_one / "seed-3" / "metrics.csv"));
}

TEST_CASE("sweep validates every value before running") {
  const auto out = fresh_dir("sweep_bad");
  CHECK_THROWS_AS(run_sweep(small_doc(), "tau", parse_axis_values("5,0"), out), ConfigError);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("compare writes table-shaped CSVs") {
  const auto out = fresh_dir("compare");
  auto doc = small_doc();
  doc["compare"] = json::parse(R"({"greedy_tau_gp": [20, 10]})");
  const auto groups = run_compare(parse_config(doc), out);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].label == "ergodic");
  CHECK(groups[1].label == "greedy_ucb tau_gp=20");
  CHECK(first_line(out / "table1.csv") ==
        "group,planner,tau_gp,runs,successes,success_rate,coverage_time_mean,coverage_time_std");
  CHECK(first_line(out / "table2.csv") == "group,roi,runs,hits,hit_rate,time_mean,time_std,censored_time_mean");
  CHECK(first_line(out / "curves.csv") == "group,k,regret_running,empirical_error,belief_error,kl_alignment");
  CHECK(line_count(out / "table1.csv") == 4);
  CHECK(line_count(out / "table2.csv") == 4);
  const json s = json::parse(slurp(out / "greedy_ucb-tau_gp=10" / "seed-3" / "summary.json"));
  CHECK(s["planner"] == "greedy_ucb");
  CHECK(s["config"]["swarm"]["tau_gp"] == 10);
}

TEST_CASE("stat_of skips missing values") {
  const Stat s = stat_of({1.0, std::nullopt, 3.0});
  CHECK(s.count == 2);
  CHECK(s.mean == 2.0);
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(stat_of({std::nullopt}).count == 0);
  CHECK(stat_of({4.0}).std == 0.0);
}

TEST_CASE("output root from the environment") {
  RunOptions r;
  r.output_dir = "exp";
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(resolve_output_dir(r) == fs::path("/tmp/root/exp"));
  CHECK(resolve_output_dir(r, fs::path("/x")) == fs::path("/x"));
  r.output_dir = "/abs/exp";
  CHECK(resolve_output_dir(r) == fs::path("/abs/exp"));
  ::unsetenv(kOutputRootEnv);
  r.output_dir = "exp";
  CHECK(resolve_output_dir(r) == fs::path("exp"));
}

TEST_CASE("plot renders one chart per metric plus heatmaps") {
  const auto out = fresh_dir("plot");
  auto doc = small_doc();
  doc["run"]["seeds"] = json::array({3});
  run_experiment(parse_config(doc), out);
  const auto files = plot_directory(out);
  for (const char* f : {"regret_running.svg", "empirical_error.svg", "belief_error.svg", "kl_alignment.svg",
                        "heatmaps.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / "seed-3" / f));
    CHECK(slurp(out / "seed-3" / f).rfind("<svg", 0) == 0);
  }
  CHECK(files.size() == 5);
}

TEST_CASE("plot of an empty directory fails without writing") {
  const auto out = fresh_dir("plot_empty");
  fs::create_directories(out / "nested");
  write_text_file(out / "notes.txt", "nothing here\n");
  CHECK_THROWS_AS(plot_directory(out), Error);
  int files = 0;
  for (auto it = fs::recursive_directory_iterator(out); it != fs::recursive_directory_iterator(); ++it) {
    files += it->is_regular_file();
  }
  CHECK(files == 1);
  CHECK_THROWS_AS(plot_directory(out / "missing"), Error);
}

TEST_CASE("belief heatmap of a converged static run matches the true map") {
  const auto out = fresh_dir("heatmap");
  auto doc = load_config(ERGOCOV_SOURCE_DIR "/configs/benchmark-5x5.json").source;
  doc["run"]["seeds"] = json::array({0});
  const auto cfg = parse_config(doc);
  run_experiment(cfg, out);

  std::ifstream in(out / "seed-0" / "final_maps.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> truth, belief;
  std::vector<int> mask;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> f;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    mask.push_back(std::stoi(f[3]));
    truth.push_back(std::stod(f[4]));
    belief.push_back(std::stod(f[5]));
  }
  auto a = rasterize(truth, mask, 5, 5, 8);
  auto b = rasterize(belief, mask, 5, 5, 8);
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sa += a[i], sb += b[i];
  double l1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] / sa - b[i] / sb);
  CHECK(l1 < 0.2);
}

TEST_CASE("cli exit codes and error line") {
  const auto dir = fresh_dir("cli");
  fs::create_directories(dir);
  const auto err = dir / "stderr.txt";

  auto bad = small_doc();
  bad["swarm"]["tau_gp"] = 0;
  write_text_file(dir / "bad.json", bad.dump());
  CHECK(run_cli("run " + (dir / "bad.json").string() + " -o " + (dir / "out_bad").string(), err) == 1);
  const json line = json::parse(first_line(err));
  CHECK(line["error"] == "config");
  CHECK(line["field"] == "swarm.tau_gp");
  CHECK_FALSE(fs::exists(dir / "out_bad"));

  CHECK(run_cli("run " + (dir / "missing.json").string(), err) == 2);
  CHECK(json::parse(first_line(err))["code"] == "IoError");

  CHECK(run_cli("plot " + (dir / "nothing").string(), err) == 2);

  auto good = small_doc();
  good["run"]["seeds"] = json::array({1});
  write_text_file(dir / "good.json", good.dump());
  CHECK(run_cli("run " + (dir / "good.json").string() + " -o " + (dir / "o1").string(), err) == 0);
  CHECK(run_cli("run " + (dir / "good.json").string() + " -o " + (dir / "o2").string() + " -j 1", err) == 0);
  CHECK(slurp(dir / "o1" / "seed-1" / "metrics.csv") == slurp(dir / "o2" / "seed-1" / "metrics.csv"));
  CHECK(run_cli("sweep " + (dir / "good.json").string() + " --axis tau --values 5,10 -o " +
                    (dir / "sw").string(),
                err) == 0);
  CHECK(fs::exists(dir / "sw" / "aggregate.csv"));
  CHECK(run_cli("plot " + (dir / "sw").string(), err) == 0);
  CHECK(fs::exists(dir / "sw" / "curves_regret_running.svg"));
  CHECK(run_cli("sweep " + (dir / "good.json").string() + " --axis warp --values 1", err) == 1);
  CHECK(run_cli("frobnicate", err) == 1);
}
