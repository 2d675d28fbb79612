#include "ergocov/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

#include "ergocov/baselines.hpp"
#include "ergocov/error.hpp"

namespace ergocov {

namespace {

using nlohmann::json;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

long long get_integer(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) return static_cast<long long>(v);
  }
  throw ConfigError(path, "expected an integer");
}

int get_int(const json& j, const std::string& path) {
  const long long v = get_integer(j, path);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(path, "integer out of range");
  }
  return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

const json& require_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  return j;
}

// --- grid cells ------------------------------------------------------------

RegionId parse_cell(const json& j, const std::string& path, int width, int height) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected [col, row]");
  const int c = get_int(j[0], path + "[0]");
  const int r = get_int(j[1], path + "[1]");
  if (c < 0 || c >= width || r < 0 || r >= height) {
    throw ConfigError(path, "cell [" + std::to_string(c) + ", " + std::to_string(r) + "] is outside the grid");
  }
  return RegionId(r * width + c);
}

RegionSet parse_cell_list(const json& j, const std::string& path, int width, int height) {
  require_array(j, path);
  RegionSet out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_cell(j[i], at_index(path, i), width, height));
  return out;
}

RegionSet parse_rect(const json& j, const std::string& path, int width, int height) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(path, "expected [col0, row0, col1, row1]");
  const RegionId a = parse_cell(json::array({j[0], j[1]}), path, width, height);
  const RegionId b = parse_cell(json::array({j[2], j[3]}), path, width, height);
  const int c0 = a.value % width, r0 = a.value / width;
  const int c1 = b.value % width, r1 = b.value / width;
  if (c1 < c0 || r1 < r0) throw ConfigError(path, "rect corners must be ordered");
  RegionSet out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) out.emplace_back(r * width + c);
  return out;
}

// {"cells": [[c, r], ...]} or {"rect": [c0, r0, c1, r1]}; `extra` keys are
// allowed and left to the caller.
RegionSet parse_selector(const json& j, const std::string& path, int width, int height,
                         std::initializer_list<std::string_view> extra = {}) {
  require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = key == "cells" || key == "rect";
    for (auto e : extra) ok = ok || key == e;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
  const bool has_cells = j.contains("cells");
  const bool has_rect = j.contains("rect");
  if (has_cells == has_rect) throw ConfigError(path, "give exactly one of \"cells\" or \"rect\"");
  RegionSet out = has_cells ? parse_cell_list(j["cells"], join(path, "cells"), width, height)
                            : parse_rect(j["rect"], join(path, "rect"), width, height);
  if (out.empty()) throw ConfigError(path, "selects no cells");
  return out;
}

// --- weights ---------------------------------------------------------------

Eigen::VectorXd parse_weights(const json& j, const std::string& path, int width, int height) {
  check_keys(j, path, {"base", "blobs", "values"});
  const int n = width * height;
  if (j.contains("values")) {
    if (j.contains("base") || j.contains("blobs")) {
      throw ConfigError(join(path, "values"), "cannot be combined with base or blobs");
    }
    const auto& v = require_array(j["values"], join(path, "values"));
    if (static_cast<int>(v.size()) != n) {
      throw ConfigError(join(path, "values"), "expected " + std::to_string(n) + " row-major entries");
    }
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      w[i] = get_number(v[static_cast<std::size_t>(i)], at_index(join(path, "values"), i));
      if (w[i] < 0.0) throw ConfigError(at_index(join(path, "values"), i), "must be >= 0");
    }
    return w;
  }
  double base = 0.0;
  if (j.contains("base")) base = get_number(j["base"], join(path, "base"));
  if (base < 0.0) throw ConfigError(join(path, "base"), "must be >= 0");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, base);
  if (!j.contains("blobs")) return w;

  const auto& blobs = require_array(j["blobs"], join(path, "blobs"));
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const std::string bp = at_index(join(path, "blobs"), b);
    const json& blob = blobs[b];
    require_object(blob, bp);
    if (!blob.contains("type")) throw ConfigError(join(bp, "type"), "missing");
    const std::string type = get_string(blob["type"], join(bp, "type"));
    if (type == "rect" || type == "cells") {
      check_keys(blob, bp, {"type", "name", "value", type});
      if (!blob.contains("value")) throw ConfigError(join(bp, "value"), "missing");
      if (!blob.contains(type)) throw ConfigError(join(bp, type), "missing");
      const double value = get_number(blob["value"], join(bp, "value"));
      const json sel = json{{type, blob[type]}};
      for (RegionId r : parse_selector(sel, bp, width, height)) w[r.value] += value;
    } else if (type == "gaussian-blob") {
      check_keys(blob, bp, {"type", "name", "center", "sigma", "amplitude"});
      for (const char* key : {"center", "sigma", "amplitude"}) {
        if (!blob.contains(key)) throw ConfigError(join(bp, key), "missing");
      }
      const auto& c = blob["center"];
      if (!c.is_array() || c.size() != 2) throw ConfigError(join(bp, "center"), "expected [col, row]");
      const double cx = get_number(c[0], join(bp, "center") + "[0]");
      const double cy = get_number(c[1], join(bp, "center") + "[1]");
      const double sigma = get_number(blob["sigma"], join(bp, "sigma"));
      const double amp = get_number(blob["amplitude"], join(bp, "amplitude"));
      if (!(sigma > 0.0)) throw ConfigError(join(bp, "sigma"), "must be > 0");
      for (int r = 0; r < height; ++r) {
        for (int col = 0; col < width; ++col) {
          const double d2 = (col - cx) * (col - cx) + (r - cy) * (r - cy);
          w[r * width + col] += amp * std::exp(-d2 / (2.0 * sigma * sigma));
        }
      }
    } else {
      throw ConfigError(join(bp, "type"), "unknown blob type \"" + type + "\" (rect, cells, gaussian-blob)");
    }
  }
  for (int i = 0; i < n; ++i) {
    if (w[i] < 0.0) throw ConfigError(path, "weights sum to a negative value at region " + std::to_string(i));
  }
  return w;
}

void zero_nofly(Eigen::VectorXd& w, const RegionSet& nofly) {
  for (RegionId r : nofly) w[r.value] = 0.0;
}

MapSchedule parse_schedule(const json& j, const std::string& path, int width, int height,
                           const RegionSet& nofly) {
  const auto& arr = require_array(j, path);
  std::vector<MapEvent> events;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ep = at_index(path, i);
    const json& e = arr[i];
    require_object(e, ep);
    for (const char* key : {"time", "kind"}) {
      if (!e.contains(key)) throw ConfigError(join(ep, key), "missing");
    }
    const int time = get_int(e["time"], join(ep, "time"));
    const std::string kind = get_string(e["kind"], join(ep, "kind"));
    if (kind == "relocate") {
      check_keys(e, ep, {"time", "kind", "from", "to"});
      if (!e.contains("from")) throw ConfigError(join(ep, "from"), "missing");
      if (!e.contains("to")) throw ConfigError(join(ep, "to"), "missing");
      events.push_back(MapEvent::relocate(time, parse_selector(e["from"], join(ep, "from"), width, height),
                                          parse_selector(e["to"], join(ep, "to"), width, height)));
    } else if (kind == "expand") {
      check_keys(e, ep, {"time", "kind", "source", "alpha"});
      if (!e.contains("source")) throw ConfigError(join(ep, "source"), "missing");
      if (!e.contains("alpha")) throw ConfigError(join(ep, "alpha"), "missing");
      events.push_back(MapEvent::expand(time, parse_selector(e["source"], join(ep, "source"), width, height),
                                        get_number(e["alpha"], join(ep, "alpha"))));
    } else if (kind == "replace") {
      check_keys(e, ep, {"time", "kind", "weights"});
      if (!e.contains("weights")) throw ConfigError(join(ep, "weights"), "missing");
      Eigen::VectorXd w = parse_weights(e["weights"], join(ep, "weights"), width, height);
      zero_nofly(w, nofly);
      events.push_back(MapEvent::replace(time, std::move(w)));
    } else {
      throw ConfigError(join(ep, "kind"), "unknown event kind \"" + kind + "\" (relocate, expand, replace)");
    }
  }
  try {
    return MapSchedule(std::move(events));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

struct WorldSection {
  World world;
  MapSchedule schedule;
  std::vector<NamedRoi> rois;
};

WorldSection parse_world(const json& j) {
  const std::string path = "world";
  check_keys(j, path, {"width", "height", "nofly", "weights", "schedule", "rois", "roi_quantile"});
  for (const char* key : {"width", "height", "weights"}) {
    if (!j.contains(key)) throw ConfigError(join(path, key), "missing");
  }
  const int width = get_int(j["width"], "world.width");
  const int height = get_int(j["height"], "world.height");
  if (width < 1 || width > 1000) throw ConfigError("world.width", "must be in [1, 1000]");
  if (height < 1 || height > 1000) throw ConfigError("world.height", "must be in [1, 1000]");

  RegionSet nofly;
  if (j.contains("nofly")) nofly = parse_cell_list(j["nofly"], "world.nofly", width, height);

  std::optional<EnvironmentGraph> graph;
  try {
    graph.emplace(build_grid(width, height, nofly));
  } catch (const Error& e) {
    throw ConfigError("world.nofly", e.what());
  }

  Eigen::VectorXd w = parse_weights(j["weights"], "world.weights", width, height);
  zero_nofly(w, graph->nofly());
  if (w.sum() <= 0.0) throw ConfigError("world.weights", "no information mass on accessible regions");

  WorldSection out{World{*graph, InfoMap(w)}, MapSchedule{}, {}};
  if (j.contains("schedule")) {
    out.schedule = parse_schedule(j["schedule"], "world.schedule", width, height, graph->nofly());
  }

  double quantile = 0.9;
  if (j.contains("roi_quantile")) {
    quantile = get_number(j["roi_quantile"], "world.roi_quantile");
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("world.roi_quantile", "must be in (0, 1)");
  }
  if (j.contains("rois")) {
    const auto& arr = require_array(j["rois"], "world.rois");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string rp = at_index("world.rois", i);
      RegionSet cells = parse_selector(arr[i], rp, width, height, {"name"});
      std::string name = "roi" + std::to_string(i + 1);
      if (arr[i].contains("name")) name = get_string(arr[i]["name"], join(rp, "name"));
      for (RegionId r : cells) {
        if (!out.world.graph.accessible(r)) throw ConfigError(rp, "contains a no-fly cell");
      }
      out.rois.push_back({name, std::move(cells)});
    }
  } else {
    const auto derived = derive_rois(out.world.initial_map, out.world.graph, quantile);
    for (std::size_t i = 0; i < derived.size(); ++i) {
      out.rois.push_back({"roi" + std::to_string(i + 1), derived[i]});
    }
  }
  return out;
}

SwarmConfig parse_swarm(const json& j, const EnvironmentGraph& graph) {
  const std::string path = "swarm";
  check_keys(j, path,
             {"agents", "sense_radius", "comm_radius", "tau_gp", "tau_p", "horizon", "beta", "planner",
              "initial_positions"});
  SwarmConfig s;
  if (j.contains("agents")) s.agents = get_int(j["agents"], "swarm.agents");
  if (j.contains("sense_radius")) s.sense_radius = get_number(j["sense_radius"], "swarm.sense_radius");
  if (j.contains("comm_radius")) {
    const json& c = j["comm_radius"];
    if (c.is_string()) {
      if (c.get<std::string>() != "global") throw ConfigError("swarm.comm_radius", "expected a number or \"global\"");
      s.comm_radius = kGlobalRadius;
    } else {
      s.comm_radius = get_number(c, "swarm.comm_radius");
    }
  }
  if (j.contains("tau_gp")) s.tau_gp = get_int(j["tau_gp"], "swarm.tau_gp");
  if (j.contains("tau_p")) s.tau_p = get_int(j["tau_p"], "swarm.tau_p");
  if (j.contains("horizon")) s.horizon = get_int(j["horizon"], "swarm.horizon");
  if (j.contains("beta")) s.beta = get_number(j["beta"], "swarm.beta");
  if (j.contains("planner")) {
    try {
      s.planner = parse_planner(get_string(j["planner"], "swarm.planner"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("swarm.planner", e.what());
    }
  }
  if (j.contains("initial_positions")) {
    s.initial_positions =
        parse_cell_list(j["initial_positions"], "swarm.initial_positions", graph.width(), graph.height());
  }
  s.validate(graph);
  return s;
}

BeliefConfig parse_belief(const json& j) {
  check_keys(j, "belief",
             {"lengthscale", "signal_variance", "noise_variance", "prior_mean", "eps", "max_points", "noise_std"});
  BeliefConfig b;
  if (j.contains("lengthscale")) b.kernel.lengthscale = get_number(j["lengthscale"], "belief.lengthscale");
  if (j.contains("signal_variance")) {
    b.kernel.signal_variance = get_number(j["signal_variance"], "belief.signal_variance");
  }
  if (j.contains("noise_variance")) {
    b.kernel.noise_variance = get_number(j["noise_variance"], "belief.noise_variance");
  }
  if (j.contains("prior_mean")) b.kernel.prior_mean = get_number(j["prior_mean"], "belief.prior_mean");
  if (j.contains("eps")) b.eps = get_number(j["eps"], "belief.eps");
  if (j.contains("max_points")) {
    const long long m = get_integer(j["max_points"], "belief.max_points");
    if (m < 0) throw ConfigError("belief.max_points", "must be >= 0");
    b.max_points = static_cast<std::size_t>(m);
  }
  if (j.contains("noise_std")) b.noise_std = get_number(j["noise_std"], "belief.noise_std");
  if (!(b.kernel.lengthscale > 0.0)) throw ConfigError("belief.lengthscale", "must be > 0");
  if (!(b.kernel.signal_variance > 0.0)) throw ConfigError("belief.signal_variance", "must be > 0");
  if (!(b.kernel.noise_variance >= 0.0)) throw ConfigError("belief.noise_variance", "must be >= 0");
  b.validate();
  return b;
}

PolicyConfig parse_policy(const json& j) {
  check_keys(j, "policy", {"mode", "slem_tol", "slem_max_iters"});
  PolicyConfig p;
  if (j.contains("mode")) {
    const std::string mode = get_string(j["mode"], "policy.mode");
    if (mode == "metropolis") {
      p.mode = PolicyMode::kMetropolis;
    } else if (mode == "fast-mixing") {
      p.mode = PolicyMode::kFastMixing;
    } else {
      throw ConfigError("policy.mode", "unknown mode \"" + mode + "\" (metropolis, fast-mixing)");
    }
  }
  if (j.contains("slem_tol")) p.slem_tol = get_number(j["slem_tol"], "policy.slem_tol");
  if (j.contains("slem_max_iters")) p.slem_max_iters = get_int(j["slem_max_iters"], "policy.slem_max_iters");
  if (!(p.slem_tol >= 0.0)) throw ConfigError("policy.slem_tol", "must be >= 0");
  if (p.slem_max_iters < 0) throw ConfigError("policy.slem_max_iters", "must be >= 0");
  p.validate();
  return p;
}

RunOptions parse_run(const json& j) {
  check_keys(j, "run", {"seeds", "output_dir", "trajectory", "curve_stride", "threads"});
  RunOptions r;
  if (j.contains("seeds")) {
    const auto& arr = require_array(j["seeds"], "run.seeds");
    if (arr.empty()) throw ConfigError("run.seeds", "must list at least one seed");
    r.seeds.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const long long s = get_integer(arr[i], at_index("run.seeds", i));
      if (s < 0) throw ConfigError(at_index("run.seeds", i), "must be >= 0");
      r.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (j.contains("output_dir")) r.output_dir = get_string(j["output_dir"], "run.output_dir");
  if (j.contains("trajectory")) r.trajectory = get_bool(j["trajectory"], "run.trajectory");
  if (j.contains("curve_stride")) r.curve_stride = get_int(j["curve_stride"], "run.curve_stride");
  if (j.contains("threads")) r.threads = get_int(j["threads"], "run.threads");
  if (r.curve_stride < 1) throw ConfigError("run.curve_stride", "must be >= 1");
  if (r.threads < 0) throw ConfigError("run.threads", "must be >= 0");
  if (r.output_dir.empty()) throw ConfigError("run.output_dir", "must not be empty");
  return r;
}

CompareOptions parse_compare(const json& j) {
  check_keys(j, "compare", {"greedy_tau_gp", "coverage_deadline"});
  CompareOptions c;
  if (j.contains("greedy_tau_gp")) {
    const auto& arr = require_array(j["greedy_tau_gp"], "compare.greedy_tau_gp");
    c.greedy_tau_gp.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const int t = get_int(arr[i], at_index("compare.greedy_tau_gp", i));
      if (t < 1) throw ConfigError(at_index("compare.greedy_tau_gp", i), "must be >= 1");
      c.greedy_tau_gp.push_back(t);
    }
  }
  if (j.contains("coverage_deadline")) {
    c.coverage_deadline = get_int(j["coverage_deadline"], "compare.coverage_deadline");
    if (c.coverage_deadline < 0) throw ConfigError("compare.coverage_deadline", "must be >= 0");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  check_keys(doc, "", {"name", "description", "world", "swarm", "belief", "policy", "run", "compare"});
  if (!doc.contains("world")) throw ConfigError("world", "missing");
  const json empty = json::object();
  auto section = [&](const char* key) -> const json& { return doc.contains(key) ? doc[key] : empty; };

  WorldSection world = parse_world(doc["world"]);
  ExperimentConfig cfg{doc,
                       doc.contains("name") ? get_string(doc["name"], "name") : std::string("experiment"),
                       std::move(world.world),
                       std::move(world.schedule),
                       std::move(world.rois),
                       {},
                       {},
                       {},
                       {},
                       {}};
  if (doc.contains("description")) get_string(doc["description"], "description");
  cfg.swarm = parse_swarm(section("swarm"), cfg.world.graph);
  cfg.belief = parse_belief(section("belief"));
  cfg.policy = parse_policy(section("policy"));
  cfg.run = parse_run(section("run"));
  cfg.compare = parse_compare(section("compare"));
  return cfg;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path));
}

}  // namespace ergocov
