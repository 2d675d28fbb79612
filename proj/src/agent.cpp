#include "ergocov/agent.hpp"

#include <numeric>

namespace ergocov {

long AgentState::visits() const { return std::accumulate(visit_counts.begin(), visit_counts.end(), 0L); }

Eigen::VectorXd AgentState::empirical() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(visit_counts.size()));
  const double total = static_cast<double>(visits());
  for (std::size_t i = 0; i < visit_counts.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = static_cast<double>(visit_counts[i]) / total;
  }
  return out;
}

}  // namespace ergocov
