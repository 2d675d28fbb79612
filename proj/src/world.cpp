#include "ergocov/world.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "ergocov/error.hpp"

namespace ergocov {

EnvironmentGraph::EnvironmentGraph(std::vector<Eigen::Vector2d> coords,
                                   const std::vector<std::pair<RegionId, RegionId>>& edges,
                                   const RegionSet& nofly, int width, int height)
    : width_(width), height_(height), coords_(std::move(coords)) {
  const auto n = coords_.size();
  if (n == 0) throw Error(ErrorCode::kAllBlocked, "graph has no regions");
  accessible_.assign(n, 1);
  for (RegionId r : nofly) {
    if (!contains(r)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no-fly region " + std::to_string(r.value) + " out of range");
    }
    accessible_[r.index()] = 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (accessible_[i]) {
      accessible_list_.emplace_back(static_cast<std::int32_t>(i));
    } else {
      nofly_.emplace_back(static_cast<std::int32_t>(i));
    }
  }
  if (accessible_list_.empty()) throw Error(ErrorCode::kAllBlocked, "every region is no-fly");

  adjacency_.assign(n, {});
  for (auto [a, b] : edges) {
    if (!contains(a) || !contains(b)) throw Error(ErrorCode::kInvalidArgument, "edge out of range");
    if (a == b || !accessible(a) || !accessible(b)) continue;
    adjacency_[a.index()].push_back(b);
    adjacency_[b.index()].push_back(a);
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    edge_count_ += adj.size();
    max_degree_ = std::max(max_degree_, static_cast<int>(adj.size()));
  }
  edge_count_ /= 2;

  std::vector<std::uint8_t> seen(n, 0);
  std::queue<RegionId> frontier;
  frontier.push(accessible_list_.front());
  seen[accessible_list_.front().index()] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    RegionId r = frontier.front();
    frontier.pop();
    for (RegionId nb : adjacency_[r.index()]) {
      if (!seen[nb.index()]) {
        seen[nb.index()] = 1;
        ++reached;
        frontier.push(nb);
      }
    }
  }
  if (reached != accessible_list_.size()) {
    throw Error(ErrorCode::kDisconnectedWorld,
                "accessible subgraph is disconnected (" + std::to_string(reached) + " of " +
                    std::to_string(accessible_list_.size()) + " regions reachable)");
  }
}

bool EnvironmentGraph::has_edge(RegionId a, RegionId b) const {
  const auto& adj = adjacency_[a.index()];
  return std::binary_search(adj.begin(), adj.end(), b);
}

EnvironmentGraph build_grid(int width, int height, const RegionSet& nofly) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimensions must be >= 1");
  }
  std::vector<Eigen::Vector2d> coords;
  coords.reserve(static_cast<std::size_t>(width) * height);
  std::vector<std::pair<RegionId, RegionId>> edges;
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      coords.emplace_back(col + 0.5, row + 0.5);
      const RegionId here(row * width + col);
      if (col + 1 < width) edges.emplace_back(here, RegionId(here.value + 1));
      if (row + 1 < height) edges.emplace_back(here, RegionId(here.value + width));
    }
  }
  return EnvironmentGraph(std::move(coords), edges, nofly, width, height);
}

RegionSet ball(const EnvironmentGraph& graph, RegionId center, double delta) {
  RegionSet out;
  const auto& c = graph.coords(center);
  for (RegionId r : graph.accessible_regions()) {
    if (r == center || (graph.coords(r) - c).norm() <= delta) out.push_back(r);
  }
  return out;
}

InfoMap::InfoMap(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "information weight at region " + std::to_string(i) + " must be finite and >= 0");
    }
  }
}

Eigen::VectorXd target_distribution(const InfoMap& map, const EnvironmentGraph& graph) {
  if (map.size() != graph.size()) {
    throw Error(ErrorCode::kInvalidArgument, "map size does not match graph");
  }
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(graph.size());
  double total = 0.0;
  for (RegionId r : graph.accessible_regions()) total += map[r];
  if (!(total > 0.0)) throw Error(ErrorCode::kZeroMass, "accessible information mass is zero");
  for (RegionId r : graph.accessible_regions()) rho[r.value] = map[r] / total;
  return rho;
}

MapEvent MapEvent::relocate(int time, RegionSet from, RegionSet to) {
  MapEvent e;
  e.time = time;
  e.kind = MapEventKind::kRelocate;
  e.source = std::move(from);
  e.destination = std::move(to);
  return e;
}

MapEvent MapEvent::expand(int time, RegionSet cells, double alpha) {
  MapEvent e;
  e.time = time;
  e.kind = MapEventKind::kExpand;
  e.source = std::move(cells);
  e.alpha = alpha;
  return e;
}

MapEvent MapEvent::replace(int time, Eigen::VectorXd weights) {
  MapEvent e;
  e.time = time;
  e.kind = MapEventKind::kReplace;
  e.replacement = std::move(weights);
  return e;
}

MapSchedule::MapSchedule(std::vector<MapEvent> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (e.time < 1) throw Error(ErrorCode::kInvalidEvent, "event time must be >= 1");
    if (i > 0 && e.time <= events_[i - 1].time) {
      throw Error(ErrorCode::kInvalidEvent, "event times must be strictly increasing");
    }
    if (e.kind == MapEventKind::kExpand && !(e.alpha > 0.0 && e.alpha <= 1.0)) {
      throw Error(ErrorCode::kInvalidEvent, "expand alpha must lie in (0, 1]");
    }
  }
}

const MapEvent* MapSchedule::find(int k) const {
  auto it = std::lower_bound(events_.begin(), events_.end(), k,
                             [](const MapEvent& e, int t) { return e.time < t; });
  return (it != events_.end() && it->time == k) ? &*it : nullptr;
}

namespace {

void check_regions(const RegionSet& cells, const EnvironmentGraph& graph, const char* what) {
  for (RegionId r : cells) {
    if (!graph.contains(r)) {
      throw Error(ErrorCode::kInvalidEvent, std::string(what) + " region out of range");
    }
  }
}

}  // namespace

InfoMap apply_event(const InfoMap& map, const MapEvent& event, const EnvironmentGraph& graph) {
  Eigen::VectorXd w = map.weights();
  switch (event.kind) {
    case MapEventKind::kRelocate: {
      check_regions(event.source, graph, "relocate source");
      check_regions(event.destination, graph, "relocate destination");
      if (event.destination.empty()) {
        throw Error(ErrorCode::kInvalidEvent, "relocate needs a destination");
      }
      for (RegionId r : event.destination) {
        if (!graph.accessible(r)) {
          throw Error(ErrorCode::kInvalidEvent,
                      "relocate destination " + std::to_string(r.value) + " is no-fly");
        }
      }
      // Duplicate source entries must not double count.
      RegionSet src = event.source;
      std::sort(src.begin(), src.end());
      src.erase(std::unique(src.begin(), src.end()), src.end());
      double moved = 0.0;
      for (RegionId r : src) {
        moved += w[r.value];
        w[r.value] = 0.0;
      }
      const double share = moved / static_cast<double>(event.destination.size());
      for (RegionId r : event.destination) w[r.value] += share;
      break;
    }
    case MapEventKind::kExpand: {
      check_regions(event.source, graph, "expand");
      if (!(event.alpha > 0.0 && event.alpha <= 1.0)) {
        throw Error(ErrorCode::kInvalidEvent, "expand alpha must lie in (0, 1]");
      }
      const Eigen::VectorXd before = w;
      RegionSet src = event.source;
      std::sort(src.begin(), src.end());
      src.erase(std::unique(src.begin(), src.end()), src.end());
      for (RegionId r : src) {
        for (RegionId nb : graph.neighbors(r)) w[nb.value] += event.alpha * before[r.value];
      }
      break;
    }
    case MapEventKind::kReplace: {
      if (event.replacement.size() != w.size()) {
        throw Error(ErrorCode::kInvalidEvent, "replacement weights have the wrong length");
      }
      if (!event.replacement.allFinite() || event.replacement.minCoeff() < 0.0) {
        throw Error(ErrorCode::kInvalidEvent, "replacement weights must be finite and >= 0");
      }
      w = event.replacement;
      break;
    }
  }
  InfoMap next(std::move(w));
  double accessible_mass = 0.0;
  for (RegionId r : graph.accessible_regions()) accessible_mass += next[r];
  if (!(accessible_mass > 0.0)) {
    throw Error(ErrorCode::kInvalidEvent, "event leaves zero accessible information mass");
  }
  return next;
}

InfoMap step_map(const InfoMap& map, const MapSchedule& schedule, int k,
                 const EnvironmentGraph& graph) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "step_map requires k >= 1");
  const MapEvent* event = schedule.find(k);
  if (event == nullptr) return map;
  return apply_event(map, *event, graph);
}

}  // namespace ergocov
