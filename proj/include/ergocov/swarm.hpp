#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ergocov/agent.hpp"
#include "ergocov/gp_belief.hpp"
#include "ergocov/markov_policy.hpp"
#include "ergocov/metrics.hpp"
#include "ergocov/step_record.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

inline constexpr double kGlobalRadius = std::numeric_limits<double>::infinity();

struct SwarmConfig {
  int agents = 1;
  double sense_radius = 0.0;
  double comm_radius = 0.0;
  int tau_gp = 10;
  int tau_p = 10;
  int horizon = 100;  // T_final: number of records, including k = 0
  double beta = 1.0;
  PlannerKind planner = PlannerKind::kErgodic;
  std::vector<RegionId> initial_positions;  // empty: distinct random cells
  std::uint64_t seed = 0;

  void validate(const EnvironmentGraph& graph) const;
};

struct BeliefConfig {
  KernelParams kernel;
  double eps = kDefaultBeliefEps;
  std::size_t max_points = 2000;  // 0 disables the recency cap
  double noise_std = 0.0;         // sensor noise of the simulated world

  void validate() const;
};

/// One noisy observation per region in ball(position, sense_radius).
std::vector<Observation> sense(const EnvironmentGraph& graph, const InfoMap& map,
                               const AgentState& agent, int k, double sense_radius,
                               double noise_std, Rng& rng);

/// Indices l != m with ||x_m - x_l|| <= comm_radius.
std::vector<int> comm_neighbors(std::span<const AgentState> agents, int m, double comm_radius,
                                const EnvironmentGraph& graph);

/// Single-hop exchange: each agent appends its own current observations, then
/// those of each neighbor (in neighbor order). Nothing is relayed.
void exchange(std::vector<AgentState>& agents,
              const std::vector<std::vector<Observation>>& current,
              const std::vector<std::vector<int>>& neighbors);

/// Synchronous multi-agent loop. Construction initializes uniform beliefs and
/// their policies and produces the k = 0 record; each step() advances k by one.
class SwarmEngine {
 public:
  SwarmEngine(const World& world, MapSchedule schedule, SwarmConfig swarm, BeliefConfig belief,
              PolicyConfig policy);

  int k() const { return k_; }
  bool done() const { return k_ + 1 >= swarm_.horizon; }
  const StepRecord& record() const { return record_; }
  std::span<const AgentState> agents() const { return agents_; }
  const InfoMap& map() const { return map_; }
  const EnvironmentGraph& graph() const { return graph_; }

  /// Advances one step. Errors from any module are rethrown with the step index.
  const StepRecord& step();

 private:
  void refit_beliefs();
  void rebuild_policies();
  RegionId next_position(AgentState& agent);
  void emit_record();

  EnvironmentGraph graph_;
  MapSchedule schedule_;
  SwarmConfig swarm_;
  BeliefConfig belief_;
  PolicyConfig policy_;
  InfoMap map_;
  Eigen::VectorXd target_;
  std::vector<AgentState> agents_;
  StepRecord record_;
  int k_ = 0;
};

using RecordSink = std::function<void(const StepRecord&, std::span<const AgentState>)>;

struct RunResult {
  std::vector<MetricRow> rows;
  RunSummary summary;
  StepRecord final_record;
};

/// Runs to the horizon, streaming every record to `sink` and to a metrics
/// accumulator. Configs are validated before the first step.
RunResult run(const World& world, const MapSchedule& schedule, const SwarmConfig& swarm,
              const BeliefConfig& belief, const PolicyConfig& policy,
              const std::vector<RegionSet>& rois, const RecordSink& sink = {});

}  // namespace ergocov
