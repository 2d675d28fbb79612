#include "ergocov/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ergocov/error.hpp"

namespace ergocov {

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "distribution size mismatch");
  return (a - b).lpNorm<1>();
}

double belief_error(const Eigen::VectorXd& team_belief, const Eigen::VectorXd& true_target) {
  return l1_distance(team_belief, true_target);
}

double empirical_error(const Eigen::VectorXd& team_empirical, const Eigen::VectorXd& true_target) {
  return l1_distance(team_empirical, true_target);
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  constexpr double kFloor = 1e-12;
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double pi = std::max(p[i], kFloor);
    total += pi * std::log(pi / std::max(q[i], kFloor));
  }
  return std::max(total, 0.0);
}

double kl_alignment(std::span<const Eigen::VectorXd> beliefs) {
  if (beliefs.size() < 2) return 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(beliefs.front().size());
  for (const auto& b : beliefs) mean += b;
  mean /= static_cast<double>(beliefs.size());
  double total = 0.0;
  for (const auto& b : beliefs) total += kl_divergence(b, mean);
  return total / static_cast<double>(beliefs.size());
}

double regret(std::span<const StepRecord> records, std::size_t horizon) {
  if (horizon == 0) return 0.0;
  if (horizon >= records.size()) {
    throw Error(ErrorCode::kInvalidArgument, "regret horizon exceeds recorded steps");
  }
  double total = 0.0;
  for (std::size_t k = 1; k <= horizon; ++k) {
    total += empirical_error(records[k].team_empirical, records[k].true_target);
  }
  return total / static_cast<double>(horizon);
}

std::vector<std::optional<int>> time_to_roi(std::span<const StepRecord> records,
                                            const std::vector<RegionSet>& rois) {
  std::vector<std::optional<int>> out(rois.size());
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rois.size(); ++i) {
      if (out[i]) continue;
      for (RegionId pos : rec.positions) {
        if (std::find(rois[i].begin(), rois[i].end(), pos) != rois[i].end()) {
          out[i] = rec.k;
          break;
        }
      }
    }
  }
  return out;
}

std::optional<int> coverage_time(std::span<const StepRecord> records,
                                 const EnvironmentGraph& graph) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(graph.size()), 0);
  int remaining = graph.accessible_count();
  for (const auto& rec : records) {
    for (RegionId pos : rec.positions) {
      if (!seen[pos.index()]) {
        seen[pos.index()] = 1;
        --remaining;
      }
    }
    if (remaining == 0) return rec.k;
  }
  return std::nullopt;
}

DriftSummary map_drift(std::span<const Eigen::VectorXd> targets) {
  if (targets.size() < 2) return {};
  double total = 0.0;
  for (std::size_t k = 1; k < targets.size(); ++k) total += l1_distance(targets[k], targets[k - 1]);
  return {total / static_cast<double>(targets.size() - 1)};
}

std::vector<RegionSet> derive_rois(const InfoMap& map, const EnvironmentGraph& graph,
                                   double quantile) {
  std::vector<double> weights;
  for (RegionId r : graph.accessible_regions()) weights.push_back(map[r]);
  std::sort(weights.begin(), weights.end());
  const auto n = weights.size();
  auto rank = static_cast<std::size_t>(std::ceil(std::clamp(quantile, 0.0, 1.0) * n));
  rank = std::clamp<std::size_t>(rank, 1, n);
  const double threshold = weights[rank - 1];

  std::vector<std::uint8_t> hot(static_cast<std::size_t>(graph.size()), 0);
  for (RegionId r : graph.accessible_regions()) {
    if (map[r] >= threshold && map[r] > 0.0) hot[r.index()] = 1;
  }
  std::vector<RegionSet> rois;
  for (RegionId start : graph.accessible_regions()) {
    if (!hot[start.index()]) continue;
    RegionSet component;
    std::queue<RegionId> frontier;
    frontier.push(start);
    hot[start.index()] = 0;
    while (!frontier.empty()) {
      RegionId r = frontier.front();
      frontier.pop();
      component.push_back(r);
      for (RegionId nb : graph.neighbors(r)) {
        if (hot[nb.index()]) {
          hot[nb.index()] = 0;
          frontier.push(nb);
        }
      }
    }
    std::sort(component.begin(), component.end());
    rois.push_back(std::move(component));
  }
  return rois;
}

MetricsAccumulator::MetricsAccumulator(const EnvironmentGraph& graph, std::vector<RegionSet> rois)
    : graph_(&graph),
      rois_(std::move(rois)),
      visited_(static_cast<std::size_t>(graph.size()), 0),
      unvisited_(graph.accessible_count()),
      roi_times_(rois_.size()) {}

const MetricRow& MetricsAccumulator::add(const StepRecord& record) {
  if (record.k != static_cast<int>(rows_.size())) {
    throw Error(ErrorCode::kInvalidArgument, "metrics records must arrive in step order");
  }
  MetricRow row;
  row.k = record.k;
  row.empirical_error = empirical_error(record.team_empirical, record.true_target);
  row.belief_error = belief_error(record.team_belief, record.true_target);
  row.kl_alignment = record.belief_alignment;
  if (record.k == 0) {
    row.regret_running = row.empirical_error;
  } else {
    error_sum_ += row.empirical_error;
    row.regret_running = error_sum_ / record.k;
    drift_sum_ += l1_distance(record.true_target, last_target_);
  }
  last_target_ = record.true_target;
  kl_sum_ += row.kl_alignment;

  for (RegionId pos : record.positions) {
    if (!visited_[pos.index()]) {
      visited_[pos.index()] = 1;
      --unvisited_;
    }
    for (std::size_t i = 0; i < rois_.size(); ++i) {
      if (!roi_times_[i] && std::find(rois_[i].begin(), rois_[i].end(), pos) != rois_[i].end()) {
        roi_times_[i] = record.k;
      }
    }
  }
  if (!coverage_ && unvisited_ == 0) coverage_ = record.k;
  rows_.push_back(row);
  return rows_.back();
}

std::vector<MetricSeries> MetricsAccumulator::series() const {
  std::vector<MetricSeries> out{{"regret", {}}, {"empirical_error", {}}, {"belief_error", {}},
                                {"kl_alignment", {}}};
  for (const auto& row : rows_) {
    out[0].values.push_back(row.regret_running);
    out[1].values.push_back(row.empirical_error);
    out[2].values.push_back(row.belief_error);
    out[3].values.push_back(row.kl_alignment);
  }
  return out;
}

RunSummary MetricsAccumulator::summary() const {
  RunSummary s;
  s.steps = static_cast<int>(rows_.size());
  s.coverage_time = coverage_;
  s.roi_times = roi_times_;
  const int horizon = s.steps - 1;
  s.map_drift = horizon > 0 ? drift_sum_ / horizon : 0.0;
  if (!rows_.empty()) {
    s.final_regret = rows_.back().regret_running;
    s.final_empirical_error = rows_.back().empirical_error;
    s.final_belief_error = rows_.back().belief_error;
    s.mean_kl_alignment = kl_sum_ / static_cast<double>(rows_.size());
  }
  return s;
}

}  // namespace ergocov
