#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergocov/step_record.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// ||team belief - true target||_1
double belief_error(const Eigen::VectorXd& team_belief, const Eigen::VectorXd& true_target);

/// ||team empirical - true target||_1
double empirical_error(const Eigen::VectorXd& team_empirical, const Eigen::VectorXd& true_target);

/// KL(p || q) in nats. Entries are floored at 1e-12; zero entries of p contribute nothing.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Mean over agents of KL(belief_m || arithmetic mean belief).
double kl_alignment(std::span<const Eigen::VectorXd> beliefs);

/// (1/K) sum_{k=1..K} empirical_error(record k). Records must be indexed by k.
double regret(std::span<const StepRecord> records, std::size_t horizon);

/// Per ROI, the first k at which some agent occupies one of its cells.
std::vector<std::optional<int>> time_to_roi(std::span<const StepRecord> records,
                                            const std::vector<RegionSet>& rois);

/// First k at which every accessible region has been occupied at least once.
std::optional<int> coverage_time(std::span<const StepRecord> records, const EnvironmentGraph& graph);

struct DriftSummary {
  double v_hat = 0.0;
};

/// (1/K) sum_{k=1..K} ||rho*_k - rho*_{k-1}||_1 with K = targets.size() - 1.
DriftSummary map_drift(std::span<const Eigen::VectorXd> targets);

/// ROIs as 4-connected components of accessible cells whose initial weight
/// reaches the given quantile of accessible weights.
std::vector<RegionSet> derive_rois(const InfoMap& map, const EnvironmentGraph& graph,
                                   double quantile = 0.9);

struct MetricSeries {
  std::string name;
  std::vector<double> values;
};

/// One metrics.csv row. At k = 0 the running regret is the k = 0 empirical error.
struct MetricRow {
  int k = 0;
  double regret_running = 0.0;
  double empirical_error = 0.0;
  double belief_error = 0.0;
  double kl_alignment = 0.0;
};

struct RunSummary {
  int steps = 0;
  std::optional<int> coverage_time;
  std::vector<std::optional<int>> roi_times;
  double map_drift = 0.0;
  double final_regret = 0.0;
  double final_empirical_error = 0.0;
  double final_belief_error = 0.0;
  double mean_kl_alignment = 0.0;
};

/// Streaming evaluation of a run: same definitions as the batch functions
/// above, without retaining the records.
class MetricsAccumulator {
 public:
  MetricsAccumulator(const EnvironmentGraph& graph, std::vector<RegionSet> rois);

  const MetricRow& add(const StepRecord& record);

  const std::vector<MetricRow>& rows() const { return rows_; }
  std::vector<MetricSeries> series() const;
  RunSummary summary() const;

 private:
  const EnvironmentGraph* graph_;
  std::vector<RegionSet> rois_;
  std::vector<MetricRow> rows_;
  std::vector<std::uint8_t> visited_;
  int unvisited_ = 0;
  std::optional<int> coverage_;
  std::vector<std::optional<int>> roi_times_;
  Eigen::VectorXd last_target_;
  double drift_sum_ = 0.0;
  double error_sum_ = 0.0;
  double kl_sum_ = 0.0;
};

}  // namespace ergocov
