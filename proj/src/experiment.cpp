#include "ergocov/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "ergocov/baselines.hpp"
#include "ergocov/error.hpp"

namespace ergocov {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::optional<double> to_double(const std::optional<int>& v) {
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

json opt_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::string seed_dir_name(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

std::string value_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Seed order in the groups follows the config, regardless of completion order.
std::vector<GroupResult> run_groups(const std::vector<ExperimentConfig>& configs,
                                    const std::vector<std::string>& labels,
                                    const std::vector<fs::path>& dirs, int threads) {
  struct Job {
    std::size_t group;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  std::vector<GroupResult> out(configs.size());
  for (std::size_t g = 0; g < configs.size(); ++g) {
    out[g].label = labels[g];
    out[g].seeds.resize(configs[g].run.seeds.size());
    for (std::size_t s = 0; s < configs[g].run.seeds.size(); ++s) jobs.push_back({g, s});
  }
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const Job job = jobs[i];
    const auto& cfg = configs[job.group];
    const std::uint64_t seed = cfg.run.seeds[job.seed_index];
    out[job.group].seeds[job.seed_index] = run_seed(cfg, seed, dirs[job.group] / seed_dir_name(seed));
  });
  return out;
}

std::vector<std::string> roi_names(const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& r : cfg.rois) names.push_back(csv_field(r.name));
  return names;
}

// Per-metric means over seeds at k = 0, stride, 2*stride, ... and the last k.
std::string curves_rows(const std::string& key, const GroupResult& group, int stride) {
  std::ostringstream os;
  if (group.seeds.empty()) return {};
  std::size_t len = group.seeds.front().rows.size();
  for (const auto& s : group.seeds) len = std::min(len, s.rows.size());
  for (std::size_t k = 0; k < len; ++k) {
    if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != len) continue;
    double sums[4] = {0, 0, 0, 0};
    for (const auto& s : group.seeds) {
      const auto& r = s.rows[k];
      sums[0] += r.regret_running;
      sums[1] += r.empirical_error;
      sums[2] += r.belief_error;
      sums[3] += r.kl_alignment;
    }
    const double n = static_cast<double>(group.seeds.size());
    os << key << ',' << k;
    for (double v : sums) os << ',' << format_number(v / n);
    os << '\n';
  }
  return os.str();
}

void append_stat(std::ostringstream& os, const Stat& s) {
  os << ',' << (s.count ? format_number(s.mean) : "") << ',' << (s.count ? format_number(s.std) : "");
}

std::string aggregate_header(const std::vector<std::string>& rois) {
  std::string h =
      "seeds,final_regret_mean,final_regret_std,final_empirical_error_mean,final_empirical_error_std,"
      "final_belief_error_mean,final_belief_error_std,mean_kl_alignment_mean,mean_kl_alignment_std,"
      "map_drift_mean,coverage_success_rate,coverage_time_mean,coverage_time_std";
  for (const auto& r : rois) h += ",roi_" + r + "_hit_rate,roi_" + r + "_time_mean,roi_" + r + "_time_std";
  return h;
}

std::string aggregate_fields(const GroupResult& group, std::size_t roi_count) {
  std::ostringstream os;
  const auto collect = [&](auto getter) {
    std::vector<std::optional<double>> v;
    for (const auto& s : group.seeds) v.push_back(getter(s.summary));
    return stat_of(v);
  };
  const double n = static_cast<double>(group.seeds.size());
  os << group.seeds.size();
  append_stat(os, collect([](const RunSummary& s) { return std::optional<double>(s.final_regret); }));
  append_stat(os, collect([](const RunSummary& s) { return std::optional<double>(s.final_empirical_error); }));
  append_stat(os, collect([](const RunSummary& s) { return std::optional<double>(s.final_belief_error); }));
  append_stat(os, collect([](const RunSummary& s) { return std::optional<double>(s.mean_kl_alignment); }));
  os << ',' << format_number(collect([](const RunSummary& s) { return std::optional<double>(s.map_drift); }).mean);
  const Stat cov = collect([](const RunSummary& s) { return to_double(s.coverage_time); });
  os << ',' << format_number(cov.count / n);
  append_stat(os, cov);
  for (std::size_t i = 0; i < roi_count; ++i) {
    const Stat t = collect([&](const RunSummary& s) {
      return i < s.roi_times.size() ? to_double(s.roi_times[i]) : std::nullopt;
    });
    os << ',' << format_number(t.count / n);
    append_stat(os, t);
  }
  return os.str();
}

}  // namespace

Stat stat_of(const std::vector<std::optional<double>>& values) {
  Stat s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) continue;
    ++s.count;
    sum += *v;
  }
  if (s.count == 0) return s;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (const auto& v : values) {
      if (v) ss += (*v - s.mean) * (*v - s.mean);
    }
    s.std = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

fs::path resolve_output_dir(const RunOptions& run, const std::optional<fs::path>& override_dir) {
  if (override_dir) return *override_dir;
  fs::path dir(run.output_dir);
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
    return fs::path(root) / dir;
  }
  return dir;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << ',' << format_number(r.regret_running) << ',' << format_number(r.empirical_error) << ','
       << format_number(r.belief_error) << ',' << format_number(r.kl_alignment) << '\n';
  }
  return os.str();
}

json summary_json(const ExperimentConfig& cfg, std::uint64_t seed, const RunSummary& summary) {
  json rois = json::array();
  for (std::size_t i = 0; i < cfg.rois.size(); ++i) {
    json cells = json::array();
    for (RegionId r : cfg.rois[i].cells) cells.push_back(r.value);
    rois.push_back({{"name", cfg.rois[i].name},
                    {"regions", cells},
                    {"discovery_time", i < summary.roi_times.size() ? opt_json(summary.roi_times[i]) : json(nullptr)}});
  }
  return json{{"schema_version", kSummarySchemaVersion},
              {"name", cfg.name},
              {"seed", seed},
              {"planner", std::string(to_string(cfg.swarm.planner))},
              {"steps", summary.steps},
              {"coverage_time", opt_json(summary.coverage_time)},
              {"rois", rois},
              {"map_drift", summary.map_drift},
              {"final_regret", summary.final_regret},
              {"final_empirical_error", summary.final_empirical_error},
              {"final_belief_error", summary.final_belief_error},
              {"mean_kl_alignment", summary.mean_kl_alignment},
              {"config", cfg.source}};
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  ensure_dir(dir);
  SwarmConfig swarm = cfg.swarm;
  swarm.seed = seed;
  std::vector<RegionSet> rois;
  for (const auto& r : cfg.rois) rois.push_back(r.cells);

  const auto& graph = cfg.world.graph;
  std::ostringstream traj;
  RecordSink sink;
  if (cfg.run.trajectory) {
    traj << kTrajectoryHeader << '\n';
    sink = [&](const StepRecord& rec, std::span<const AgentState>) {
      const std::string emp = format_number(empirical_error(rec.team_empirical, rec.true_target));
      const std::string bel = format_number(belief_error(rec.team_belief, rec.true_target));
      for (std::size_t m = 0; m < rec.positions.size(); ++m) {
        const RegionId r = rec.positions[m];
        traj << rec.k << ',' << m << ',' << r.value << ',' << graph.col(r) << ',' << graph.row(r) << ',' << emp
             << ',' << bel << '\n';
      }
    };
  }
  RunResult result = run(cfg.world, cfg.schedule, swarm, cfg.belief, cfg.policy, rois, sink);

  write_text_file(dir / "metrics.csv", metrics_csv(result.rows));
  write_text_file(dir / "summary.json", summary_json(cfg, seed, result.summary).dump(2) + "\n");
  if (cfg.run.trajectory) write_text_file(dir / "trajectory.csv", traj.str());

  std::ostringstream maps;
  maps << kFinalMapsHeader << '\n';
  const auto& rec = result.final_record;
  for (int i = 0; i < graph.size(); ++i) {
    const RegionId r(i);
    maps << i << ',' << graph.col(r) << ',' << graph.row(r) << ',' << (graph.accessible(r) ? 1 : 0) << ','
         << format_number(rec.true_target[i]) << ',' << format_number(rec.team_belief[i]) << ','
         << format_number(rec.team_empirical[i]) << '\n';
  }
  write_text_file(dir / "final_maps.csv", maps.str());
  return SeedResult{seed, std::move(result.summary), std::move(result.rows)};
}

GroupResult run_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  write_text_file(out / "config.json", cfg.source.dump(2) + "\n");
  auto groups = run_groups({cfg}, {cfg.name}, {out}, cfg.run.threads);

  const auto names = roi_names(cfg);
  std::ostringstream os;
  os << "seed,steps,coverage_time,final_regret,final_empirical_error,final_belief_error,mean_kl_alignment,"
        "map_drift";
  for (const auto& n : names) os << ",roi_" << n;
  os << '\n';
  for (const auto& s : groups[0].seeds) {
    const auto& m = s.summary;
    os << s.seed << ',' << m.steps << ',' << opt_number(to_double(m.coverage_time)) << ','
       << format_number(m.final_regret) << ',' << format_number(m.final_empirical_error) << ','
       << format_number(m.final_belief_error) << ',' << format_number(m.mean_kl_alignment) << ','
       << format_number(m.map_drift);
    for (std::size_t i = 0; i < names.size(); ++i) {
      os << ',' << (i < m.roi_times.size() ? opt_number(to_double(m.roi_times[i])) : "");
    }
    os << '\n';
  }
  write_text_file(out / "runs.csv", os.str());
  return std::move(groups[0]);
}

json with_axis(json doc, const std::string& axis, const json& value) {
  static const std::map<std::string, std::string> kAliases = {
      {"agents", "swarm.agents"},
      {"sense_radius", "swarm.sense_radius"},
      {"comm_radius", "swarm.comm_radius"},
      {"tau_gp", "swarm.tau_gp"},
      {"tau_p", "swarm.tau_p"},
      {"horizon", "swarm.horizon"},
      {"beta", "swarm.beta"},
      {"planner", "swarm.planner"},
      {"lengthscale", "belief.lengthscale"},
      {"signal_variance", "belief.signal_variance"},
      {"noise_variance", "belief.noise_variance"},
      {"prior_mean", "belief.prior_mean"},
      {"eps", "belief.eps"},
      {"max_points", "belief.max_points"},
      {"noise_std", "belief.noise_std"},
      {"mode", "policy.mode"},
      {"slem_max_iters", "policy.slem_max_iters"},
  };
  std::vector<std::string> paths;
  if (axis == "tau") {
    paths = {"swarm.tau_gp", "swarm.tau_p"};
  } else if (axis.find('.') != std::string::npos) {
    paths = {axis};
  } else if (auto it = kAliases.find(axis); it != kAliases.end()) {
    paths = {it->second};
  } else {
    throw ConfigError("axis", "unknown sweep axis \"" + axis + "\"");
  }
  for (const auto& p : paths) {
    std::string pointer = "/" + p;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    try {
      doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
      throw ConfigError("axis", "cannot set " + p + ": " + e.what());
    }
  }
  return doc;
}

std::vector<json> parse_axis_values(const std::string& text) {
  std::vector<json> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("values", "empty entry in \"" + text + "\"");
    item = item.substr(b, e - b + 1);
    json v = json::parse(item, nullptr, false);
    if (v.is_discarded() || !(v.is_number() || v.is_boolean() || v.is_string())) v = item;
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("values", "no sweep values given");
  return out;
}

std::vector<GroupResult> run_sweep(const json& doc, const std::string& axis, const std::vector<json>& values,
                                   const fs::path& out) {
  if (values.empty()) throw ConfigError("values", "no sweep values given");
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> labels;
  std::vector<fs::path> dirs;
  for (const auto& v : values) {
    configs.push_back(parse_config(with_axis(doc, axis, v)));
    labels.push_back(value_label(v));
    dirs.push_back(out / (axis + "=" + labels.back()));
  }
  ensure_dir(out);
  write_text_file(out / "config.json", doc.dump(2) + "\n");
  auto groups = run_groups(configs, labels, dirs, configs.front().run.threads);

  const auto names = roi_names(configs.front());
  std::ostringstream agg;
  agg << "axis,value," << aggregate_header(names) << '\n';
  std::ostringstream curves;
  curves << "value,k," << kCurvesMetrics << '\n';
  for (std::size_t g = 0; g < groups.size(); ++g) {
    agg << csv_field(axis) << ',' << csv_field(groups[g].label) << ',' << aggregate_fields(groups[g], names.size())
        << '\n';
    curves << curves_rows(csv_field(groups[g].label), groups[g], configs[g].run.curve_stride);
  }
  write_text_file(out / "aggregate.csv", agg.str());
  write_text_file(out / "curves.csv", curves.str());
  return groups;
}

std::vector<GroupResult> run_compare(const ExperimentConfig& cfg, const fs::path& out) {
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> labels;
  std::vector<fs::path> dirs;
  std::vector<int> taus;

  json ergodic = with_axis(cfg.source, "planner", "ergodic");
  configs.push_back(parse_config(ergodic));
  labels.push_back("ergodic");
  dirs.push_back(out / "ergodic");
  taus.push_back(cfg.swarm.tau_gp);
  for (int tau : cfg.compare.greedy_tau_gp) {
    json greedy = with_axis(with_axis(cfg.source, "planner", "greedy_ucb"), "tau", tau);
    configs.push_back(parse_config(greedy));
    labels.push_back("greedy_ucb tau_gp=" + std::to_string(tau));
    dirs.push_back(out / ("greedy_ucb-tau_gp=" + std::to_string(tau)));
    taus.push_back(tau);
  }
  ensure_dir(out);
  write_text_file(out / "config.json", cfg.source.dump(2) + "\n");
  auto groups = run_groups(configs, labels, dirs, cfg.run.threads);

  const int deadline = cfg.compare.coverage_deadline > 0 ? cfg.compare.coverage_deadline : cfg.swarm.horizon;
  std::ostringstream t1;
  t1 << "group,planner,tau_gp,runs,successes,success_rate,coverage_time_mean,coverage_time_std\n";
  std::ostringstream t2;
  t2 << "group,roi,runs,hits,hit_rate,time_mean,time_std,censored_time_mean\n";
  std::ostringstream curves;
  curves << "group,k," << kCurvesMetrics << '\n';
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& seeds = groups[g].seeds;
    const double n = static_cast<double>(seeds.size());
    std::vector<std::optional<double>> cov;
    for (const auto& s : seeds) {
      const auto& c = s.summary.coverage_time;
      cov.push_back(c && *c < deadline ? std::optional<double>(*c) : std::nullopt);
    }
    const Stat cs = stat_of(cov);
    t1 << csv_field(groups[g].label) << ',' << to_string(configs[g].swarm.planner) << ',' << taus[g] << ','
       << seeds.size() << ',' << cs.count << ',' << format_number(cs.count / n);
    append_stat(t1, cs);
    t1 << '\n';

    for (std::size_t i = 0; i < cfg.rois.size(); ++i) {
      std::vector<std::optional<double>> times;
      double censored = 0.0;
      for (const auto& s : seeds) {
        const auto t = to_double(s.summary.roi_times[i]);
        times.push_back(t);
        censored += t ? *t : static_cast<double>(s.summary.steps);
      }
      const Stat ts = stat_of(times);
      t2 << csv_field(groups[g].label) << ',' << csv_field(cfg.rois[i].name) << ',' << seeds.size() << ','
         << ts.count << ',' << format_number(ts.count / n);
      append_stat(t2, ts);
      t2 << ',' << format_number(censored / n) << '\n';
    }
    curves << curves_rows(csv_field(groups[g].label), groups[g], cfg.run.curve_stride);
  }
  write_text_file(out / "table1.csv", t1.str());
  write_text_file(out / "table2.csv", t2.str());
  write_text_file(out / "curves.csv", curves.str());
  return groups;
}

}  // namespace ergocov
