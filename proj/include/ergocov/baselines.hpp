#pragma once

#include <string_view>

#include "ergocov/agent.hpp"
#include "ergocov/rng.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

std::string_view to_string(PlannerKind kind);
PlannerKind parse_planner(std::string_view name);

/// Greedy GP-UCB walker: argmax of the agent's UCB map over the closed
/// neighborhood, ties to the lowest RegionId. A one-step stand-in for a
/// greedy coverage planner, not a reimplementation of any published one.
RegionId greedy_step(const AgentState& agent, const EnvironmentGraph& graph);

/// Uniform over the closed neighborhood (neighbors plus the current cell).
RegionId uniform_step(const AgentState& agent, const EnvironmentGraph& graph, Rng& rng);

}  // namespace ergocov
