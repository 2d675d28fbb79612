#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ergocov {

/// Index of a region in [0, R). Grid regions are numbered row-major.
struct RegionId {
  std::int32_t value = 0;

  constexpr RegionId() = default;
  constexpr explicit RegionId(std::int32_t v) : value(v) {}
  constexpr std::size_t index() const { return static_cast<std::size_t>(value); }

  friend constexpr auto operator<=>(RegionId, RegionId) = default;
};

using RegionSet = std::vector<RegionId>;

/// Undirected region graph with 2D region coordinates and no-fly exclusions.
///
/// No-fly regions keep their coordinates but have no incident edges. The
/// accessible subgraph is guaranteed nonempty and connected.
class EnvironmentGraph {
 public:
  /// General constructor. `width`/`height` are informational for non-grid
  /// graphs (pass 0). Throws kAllBlocked / kDisconnectedWorld.
  EnvironmentGraph(std::vector<Eigen::Vector2d> coords,
                   const std::vector<std::pair<RegionId, RegionId>>& edges,
                   const RegionSet& nofly, int width = 0, int height = 0);

  int size() const { return static_cast<int>(coords_.size()); }
  int width() const { return width_; }
  int height() const { return height_; }

  const Eigen::Vector2d& coords(RegionId r) const { return coords_[r.index()]; }
  double distance(RegionId a, RegionId b) const { return (coords(a) - coords(b)).norm(); }

  bool accessible(RegionId r) const { return accessible_[r.index()] != 0; }
  std::span<const RegionId> neighbors(RegionId r) const { return adjacency_[r.index()]; }
  std::span<const RegionId> accessible_regions() const { return accessible_list_; }
  int accessible_count() const { return static_cast<int>(accessible_list_.size()); }
  const RegionSet& nofly() const { return nofly_; }

  bool has_edge(RegionId a, RegionId b) const;
  std::size_t edge_count() const { return edge_count_; }
  int degree(RegionId r) const { return static_cast<int>(adjacency_[r.index()].size()); }
  int max_degree() const { return max_degree_; }

  /// Grid helpers; only meaningful for graphs built by build_grid.
  RegionId at(int col, int row) const { return RegionId(row * width_ + col); }
  int col(RegionId r) const { return width_ > 0 ? r.value % width_ : 0; }
  int row(RegionId r) const { return width_ > 0 ? r.value / width_ : 0; }
  bool contains(RegionId r) const { return r.value >= 0 && r.value < size(); }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Eigen::Vector2d> coords_;
  std::vector<std::uint8_t> accessible_;
  std::vector<RegionSet> adjacency_;
  RegionSet accessible_list_;
  RegionSet nofly_;
  std::size_t edge_count_ = 0;
  int max_degree_ = 0;
};

/// 4-connected width x height grid; coords are cell centers (col + 0.5, row + 0.5).
EnvironmentGraph build_grid(int width, int height, const RegionSet& nofly = {});

/// Accessible regions within Euclidean distance `delta` of `center` (always
/// includes `center`). Sorted by RegionId.
RegionSet ball(const EnvironmentGraph& graph, RegionId center, double delta);

/// Per-region nonnegative information weights. No-fly regions may carry
/// weight; it is ignored by target_distribution.
class InfoMap {
 public:
  InfoMap() = default;
  explicit InfoMap(Eigen::VectorXd weights);

  const Eigen::VectorXd& weights() const { return weights_; }
  double operator[](RegionId r) const { return weights_[r.value]; }
  int size() const { return static_cast<int>(weights_.size()); }

  friend bool operator==(const InfoMap& a, const InfoMap& b) {
    return a.weights_.size() == b.weights_.size() && a.weights_ == b.weights_;
  }

 private:
  Eigen::VectorXd weights_;
};

/// rho*(r) = w(r) / sum of accessible weights; zero on no-fly regions.
/// Throws kZeroMass when the accessible weight sums to zero.
Eigen::VectorXd target_distribution(const InfoMap& map, const EnvironmentGraph& graph);

enum class MapEventKind { kRelocate, kExpand, kReplace };

struct MapEvent {
  int time = 1;
  MapEventKind kind = MapEventKind::kRelocate;
  RegionSet source;        // Relocate, Expand
  RegionSet destination;   // Relocate
  double alpha = 1.0;      // Expand, in (0, 1]
  Eigen::VectorXd replacement;  // Replace

  static MapEvent relocate(int time, RegionSet from, RegionSet to);
  static MapEvent expand(int time, RegionSet cells, double alpha);
  static MapEvent replace(int time, Eigen::VectorXd weights);
};

/// Ordered exogenous change events. Times must be >= 1 and strictly increasing.
class MapSchedule {
 public:
  MapSchedule() = default;
  explicit MapSchedule(std::vector<MapEvent> events);

  const std::vector<MapEvent>& events() const { return events_; }
  const MapEvent* find(int k) const;
  bool empty() const { return events_.empty(); }

 private:
  std::vector<MapEvent> events_;
};

/// Advances the map to step k: unchanged unless an event fires at k.
InfoMap step_map(const InfoMap& map, const MapSchedule& schedule, int k,
                 const EnvironmentGraph& graph);

/// Applies a single event regardless of its time. Throws kInvalidEvent.
InfoMap apply_event(const InfoMap& map, const MapEvent& event, const EnvironmentGraph& graph);

/// The environment at k = 0: graph plus the initial true information map.
struct World {
  EnvironmentGraph graph;
  InfoMap initial_map;
};

}  // namespace ergocov
