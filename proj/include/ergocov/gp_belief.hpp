#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "ergocov/world.hpp"

namespace ergocov {

struct Observation {
  RegionId region;
  double value = 0.0;
  int time = 0;
  int source = 0;  // agent id
};

/// Append-only multiset of observations; duplicates are kept.
class Dataset {
 public:
  void append(const Observation& obs) { items_.push_back(obs); }
  void append(const std::vector<Observation>& batch) {
    items_.insert(items_.end(), batch.begin(), batch.end());
  }

  /// Recency cap: drops the oldest observations until at most `max_points`
  /// remain, never dropping the newest observation of any region. A cap of
  /// zero disables trimming.
  void trim_to(std::size_t max_points);

  const std::vector<Observation>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<Observation> items_;
};

struct KernelParams {
  double lengthscale = 1.5;
  double signal_variance = 1.0;
  double noise_variance = 0.01;
  double prior_mean = 0.0;

  void validate() const;
};

/// Squared-exponential covariance on region coordinates.
double se_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const KernelParams& kernel);

struct GPPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

/// Normalized belief target. `phi` is the UCB map after the eps clamp
/// (>= eps on accessible regions); `rho` is strictly positive there.
struct BeliefMap {
  Eigen::VectorXd phi;
  Eigen::VectorXd rho;
};

struct GpUcbResult {
  Eigen::VectorXd phi_ucb;  // unclamped
  BeliefMap belief;
};

inline constexpr double kDefaultBeliefEps = 1e-6;

/// Exact GP regression evaluated at every region of the graph.
///
/// Repeated observations of one region are folded into their sample mean with
/// noise variance divided by the repeat count. For i.i.d. Gaussian noise this
/// is the same posterior as the raw dataset, and it bounds the Gram size by
/// the number of distinct observed regions. When the noise variance is below
/// 1e-8, a jitter of 1e-8 * signal_variance is used if the noiseless Gram is
/// not comfortably positive definite.
///
/// Throws kSingularGram if the Gram cannot be factorized.
GPPosterior fit_posterior(const Dataset& data, const KernelParams& kernel,
                          const EnvironmentGraph& graph);

/// phi(r) = mean(r) + beta * std(r) on accessible regions, 0 elsewhere.
Eigen::VectorXd ucb_map(const GPPosterior& post, double beta, const EnvironmentGraph& graph);

/// Clamp at eps on accessible regions, then normalize. No-fly entries are 0.
BeliefMap normalize_belief(const Eigen::VectorXd& phi, const EnvironmentGraph& graph,
                           double eps = kDefaultBeliefEps);

/// fit_posterior -> ucb_map -> normalize_belief.
GpUcbResult gp_ucb(const Dataset& data, const KernelParams& kernel, double beta,
                 const EnvironmentGraph& graph, double eps = kDefaultBeliefEps);

}  // namespace ergocov
