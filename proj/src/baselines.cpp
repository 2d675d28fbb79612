#include "ergocov/baselines.hpp"

#include <string>

#include "ergocov/error.hpp"

namespace ergocov {

std::string_view to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kErgodic: return "ergodic";
    case PlannerKind::kGreedyUcb: return "greedy_ucb";
    case PlannerKind::kUniformWalk: return "uniform_walk";
  }
  return "unknown";
}

PlannerKind parse_planner(std::string_view name) {
  if (name == "ergodic") return PlannerKind::kErgodic;
  if (name == "greedy_ucb" || name == "greedy") return PlannerKind::kGreedyUcb;
  if (name == "uniform_walk" || name == "uniform") return PlannerKind::kUniformWalk;
  throw Error(ErrorCode::kInvalidArgument, "unknown planner '" + std::string(name) + "'");
}

RegionId greedy_step(const AgentState& agent, const EnvironmentGraph& graph) {
  RegionId best = agent.position;
  double best_value = agent.phi_ucb[agent.position.value];
  for (RegionId nb : graph.neighbors(agent.position)) {
    const double v = agent.phi_ucb[nb.value];
    if (v > best_value || (v == best_value && nb < best)) {
      best = nb;
      best_value = v;
    }
  }
  return best;
}

RegionId uniform_step(const AgentState& agent, const EnvironmentGraph& graph, Rng& rng) {
  const auto nbs = graph.neighbors(agent.position);
  const auto choices = nbs.size() + 1;
  auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(choices));
  if (pick >= choices) pick = choices - 1;
  return pick == nbs.size() ? agent.position : nbs[pick];
}

}  // namespace ergocov
