#include "ergocov/gp_belief.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "ergocov/error.hpp"

namespace ergocov {

void Dataset::trim_to(std::size_t max_points) {
  if (max_points == 0 || items_.size() <= max_points) return;
  std::vector<std::size_t> newest;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto r = items_[i].region.index();
    if (r >= newest.size()) newest.resize(r + 1, SIZE_MAX);
    newest[r] = i;
  }
  std::size_t excess = items_.size() - max_points;
  std::vector<Observation> kept;
  kept.reserve(max_points);
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const bool protected_obs = newest[items_[i].region.index()] == i;
    if (excess > 0 && !protected_obs) {
      --excess;
      continue;
    }
    kept.push_back(items_[i]);
  }
  items_ = std::move(kept);
}

void KernelParams::validate() const {
  if (!(lengthscale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lengthscale must be > 0");
  if (!(signal_variance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "signal_variance must be > 0");
  }
  if (!(noise_variance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_variance must be >= 0");
  }
  if (!std::isfinite(prior_mean)) throw Error(ErrorCode::kInvalidArgument, "prior_mean not finite");
}

double se_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const KernelParams& kernel) {
  const double d2 = (a - b).squaredNorm();
  return kernel.signal_variance * std::exp(-0.5 * d2 / (kernel.lengthscale * kernel.lengthscale));
}

namespace {

constexpr double kJitterThreshold = 1e-8;
constexpr double kJitterScale = 1e-8;

struct Aggregate {
  std::vector<RegionId> regions;
  std::vector<double> mean;
  std::vector<double> count;
};

Aggregate aggregate(const Dataset& data, const EnvironmentGraph& graph) {
  std::vector<int> slot(static_cast<std::size_t>(graph.size()), -1);
  Aggregate agg;
  for (const auto& obs : data.items()) {
    if (!graph.contains(obs.region) || !graph.accessible(obs.region)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "observation references inaccessible region " + std::to_string(obs.region.value));
    }
    int& s = slot[obs.region.index()];
    if (s < 0) {
      s = static_cast<int>(agg.regions.size());
      agg.regions.push_back(obs.region);
      agg.mean.push_back(0.0);
      agg.count.push_back(0.0);
    }
    agg.count[s] += 1.0;
    agg.mean[s] += (obs.value - agg.mean[s]) / agg.count[s];
  }
  return agg;
}

bool well_factored(const Eigen::LLT<Eigen::MatrixXd>& llt, double scale) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite()) return false;
  return diag.minCoeff() * diag.minCoeff() > 1e-12 * scale;
}

}  // namespace

GPPosterior fit_posterior(const Dataset& data, const KernelParams& kernel,
                          const EnvironmentGraph& graph) {
  kernel.validate();
  const int n_regions = graph.size();
  GPPosterior post;
  post.mean = Eigen::VectorXd::Constant(n_regions, kernel.prior_mean);
  post.std = Eigen::VectorXd::Constant(n_regions, std::sqrt(kernel.signal_variance));
  if (data.empty()) return post;

  const Aggregate agg = aggregate(data, graph);
  const auto n = static_cast<Eigen::Index>(agg.regions.size());

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = se_kernel(graph.coords(agg.regions[i]), graph.coords(agg.regions[j]), kernel);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  Eigen::VectorXd residual(n);
  for (Eigen::Index i = 0; i < n; ++i) residual[i] = agg.mean[i] - kernel.prior_mean;

  auto factor = [&](double noise) {
    Eigen::MatrixXd a = gram;
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += noise / agg.count[i];
    return Eigen::LLT<Eigen::MatrixXd>(a);
  };

  Eigen::LLT<Eigen::MatrixXd> llt = factor(kernel.noise_variance);
  if (kernel.noise_variance < kJitterThreshold && !well_factored(llt, kernel.signal_variance)) {
    llt = factor(kernel.noise_variance + kJitterScale * kernel.signal_variance);
  }
  if (llt.info() != Eigen::Success || !llt.matrixLLT().allFinite()) {
    throw Error(ErrorCode::kSingularGram, "GP Gram matrix is numerically singular");
  }

  const Eigen::VectorXd alpha = llt.solve(residual);
  if (!alpha.allFinite()) throw Error(ErrorCode::kSingularGram, "GP solve produced non-finite values");

  Eigen::MatrixXd cross(n, n_regions);  // k(obs_i, region_r)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& xi = graph.coords(agg.regions[i]);
    for (int r = 0; r < n_regions; ++r) cross(i, r) = se_kernel(xi, graph.coords(RegionId(r)), kernel);
  }
  // v = L^{-1} k_r so that k_r^T (K + S)^{-1} k_r = |v|^2.
  const Eigen::MatrixXd v = llt.matrixL().solve(cross);
  post.mean.noalias() += cross.transpose() * alpha;
  for (int r = 0; r < n_regions; ++r) {
    const double var = kernel.signal_variance - v.col(r).squaredNorm();
    post.std[r] = std::sqrt(std::max(var, 0.0));
  }
  return post;
}

Eigen::VectorXd ucb_map(const GPPosterior& post, double beta, const EnvironmentGraph& graph) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(graph.size());
  for (RegionId r : graph.accessible_regions()) {
    phi[r.value] = post.mean[r.value] + beta * post.std[r.value];
  }
  return phi;
}

BeliefMap normalize_belief(const Eigen::VectorXd& phi, const EnvironmentGraph& graph, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "belief eps must be > 0");
  BeliefMap belief;
  belief.phi = Eigen::VectorXd::Zero(graph.size());
  double total = 0.0;
  for (RegionId r : graph.accessible_regions()) {
    const double v = phi[r.value];
    // NaN clamps to eps as well.
    const double clamped = (v > eps) ? v : eps;
    belief.phi[r.value] = clamped;
    total += clamped;
  }
  belief.rho = belief.phi / total;
  return belief;
}

GpUcbResult gp_ucb(const Dataset& data, const KernelParams& kernel, double beta,
                   const EnvironmentGraph& graph, double eps) {
  const GPPosterior post = fit_posterior(data, kernel, graph);
  GpUcbResult out;
  out.phi_ucb = ucb_map(post, beta, graph);
  out.belief = normalize_belief(out.phi_ucb, graph, eps);
  return out;
}

}  // namespace ergocov
