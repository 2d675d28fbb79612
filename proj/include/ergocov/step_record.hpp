#pragma once

#include <vector>

#include <Eigen/Core>

#include "ergocov/world.hpp"

namespace ergocov {

/// Team-level snapshot after step k (k = 0 is the initial state).
struct StepRecord {
  int k = 0;
  std::vector<RegionId> positions;
  Eigen::VectorXd team_empirical;
  Eigen::VectorXd team_belief;
  Eigen::VectorXd true_target;
  double belief_alignment = 0.0;  // mean KL of agent beliefs to the team mean
};

}  // namespace ergocov
