#pragma once

#include <vector>

#include <Eigen/Core>

#include "ergocov/gp_belief.hpp"
#include "ergocov/markov_policy.hpp"
#include "ergocov/rng.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

enum class PlannerKind { kErgodic, kGreedyUcb, kUniformWalk };

struct AgentState {
  int id = 0;
  RegionId position;
  Dataset dataset;
  Eigen::VectorXd phi_ucb;  // unclamped UCB map from the last refit
  BeliefMap belief;
  TransitionMatrix policy;
  std::vector<long> visit_counts;
  Rng sense_rng;
  Rng move_rng;

  long visits() const;
  /// count(r) / (k + 1)
  Eigen::VectorXd empirical() const;
};

}  // namespace ergocov
