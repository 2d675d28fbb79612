#include "ergocov/markov_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "ergocov/error.hpp"

namespace ergocov {

void PolicyConfig::validate() const {
  if (!(slem_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "slem_tol must be > 0");
  if (slem_max_iters < 0) throw Error(ErrorCode::kInvalidArgument, "slem_max_iters must be >= 0");
}

namespace {

void check_belief(const EnvironmentGraph& graph, const Eigen::VectorXd& rho) {
  if (rho.size() != graph.size()) {
    throw Error(ErrorCode::kInvalidArgument, "belief size does not match graph");
  }
  for (RegionId r : graph.accessible_regions()) {
    if (!(rho[r.value] > 0.0) || !std::isfinite(rho[r.value])) {
      throw Error(ErrorCode::kZeroBeliefMass,
                  "belief has no mass on accessible region " + std::to_string(r.value));
    }
  }
}

// Undirected edge (a < b) among accessible regions.
struct Edge {
  int a;
  int b;
};

std::vector<Edge> edge_list(const EnvironmentGraph& graph) {
  std::vector<Edge> edges;
  for (RegionId r : graph.accessible_regions()) {
    for (RegionId nb : graph.neighbors(r)) {
      if (r < nb) edges.push_back({r.value, nb.value});
    }
  }
  return edges;
}

// A reversible chain on the graph is determined by its symmetric edge flows
// Q_ab = rho_a P(b, a) = rho_b P(a, b), subject to Q >= 0 and, at every node,
// sum of incident flows <= rho.
class FlowChain {
 public:
  FlowChain(const EnvironmentGraph& graph, const Eigen::VectorXd& rho)
      : graph_(graph), rho_(rho), edges_(edge_list(graph)) {
    const auto& acc = graph.accessible_regions();
    local_.assign(static_cast<std::size_t>(graph.size()), -1);
    for (std::size_t i = 0; i < acc.size(); ++i) local_[acc[i].index()] = static_cast<int>(i);
    sqrt_rho_.resize(static_cast<Eigen::Index>(acc.size()));
    for (std::size_t i = 0; i < acc.size(); ++i) sqrt_rho_[i] = std::sqrt(rho[acc[i].value]);
    incident_.assign(acc.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incident_[local_[edges_[e].a]].push_back(e);
      incident_[local_[edges_[e].b]].push_back(e);
    }
  }

  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  Eigen::VectorXd flows_of(const TransitionMatrix& p) const {
    Eigen::VectorXd q(static_cast<Eigen::Index>(edges_.size()));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      q[e] = 0.5 * (rho_[a] * p.matrix()(b, a) + rho_[b] * p.matrix()(a, b));
    }
    return q;
  }

  // Symmetrized, deflated matrix D^{-1/2} P D^{1/2} - sqrt(rho) sqrt(rho)^T.
  Eigen::MatrixXd deflated(const Eigen::VectorXd& q) const {
    const auto n = sqrt_rho_.size();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd out_rate = Eigen::VectorXd::Zero(n);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const int i = local_[edges_[e].a];
      const int j = local_[edges_[e].b];
      const double v = q[e] / (sqrt_rho_[i] * sqrt_rho_[j]);
      s(i, j) = v;
      s(j, i) = v;
      out_rate[i] += q[e] / rho_[edges_[e].a];
      out_rate[j] += q[e] / rho_[edges_[e].b];
    }
    for (Eigen::Index i = 0; i < n; ++i) s(i, i) = 1.0 - out_rate[i];
    s.noalias() -= sqrt_rho_ * sqrt_rho_.transpose();
    return s;
  }

  // Returns SLEM; fills `grad` with a subgradient w.r.t. the flows.
  double slem_and_subgradient(const Eigen::VectorXd& q, Eigen::VectorXd* grad) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(deflated(q));
    const auto& values = eig.eigenvalues();
    Eigen::Index top = 0;
    values.cwiseAbs().maxCoeff(&top);
    const double lambda = values[top];
    if (grad != nullptr) {
      const Eigen::VectorXd u = eig.eigenvectors().col(top);
      grad->resize(q.size());
      const double sign = lambda >= 0.0 ? 1.0 : -1.0;
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto [a, b] = edges_[e];
        const int i = local_[a];
        const int j = local_[b];
        (*grad)[e] = sign * (2.0 * u[i] * u[j] / (sqrt_rho_[i] * sqrt_rho_[j]) -
                             u[i] * u[i] / rho_[a] - u[j] * u[j] / rho_[b]);
      }
    }
    return std::abs(lambda);
  }

  // Alternating projection onto {Q >= 0} and the per-node capacity
  // halfspaces, followed by a scaling pass that makes the result feasible.
  void project(Eigen::VectorXd& q, int rounds) const {
    for (int round = 0; round < rounds; ++round) {
      q = q.cwiseMax(0.0);
      bool violated = false;
      for (std::size_t i = 0; i < incident_.size(); ++i) {
        const RegionId node = graph_.accessible_regions()[i];
        double total = 0.0;
        for (auto e : incident_[i]) total += q[e];
        const double excess = total - rho_[node.value];
        if (excess > 0.0 && !incident_[i].empty()) {
          violated = true;
          const double cut = excess / static_cast<double>(incident_[i].size());
          for (auto e : incident_[i]) q[e] -= cut;
        }
      }
      if (!violated && q.minCoeff() >= 0.0) break;
    }
    q = q.cwiseMax(0.0);
    std::vector<double> factor(incident_.size(), 1.0);
    for (std::size_t i = 0; i < incident_.size(); ++i) {
      const RegionId node = graph_.accessible_regions()[i];
      double total = 0.0;
      for (auto e : incident_[i]) total += q[e];
      if (total > rho_[node.value]) factor[i] = rho_[node.value] / total;
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      q[e] *= std::min(factor[local_[edges_[e].a]], factor[local_[edges_[e].b]]);
    }
  }

  TransitionMatrix to_matrix(const Eigen::VectorXd& q) const {
    const int n = graph_.size();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      p(b, a) = q[e] / rho_[a];
      p(a, b) = q[e] / rho_[b];
    }
    for (RegionId r : graph_.accessible_regions()) {
      const double moving = p.col(r.value).sum();
      p(r.value, r.value) = std::max(0.0, 1.0 - moving);
    }
    return TransitionMatrix(std::move(p));
  }

 private:
  const EnvironmentGraph& graph_;
  const Eigen::VectorXd& rho_;
  std::vector<Edge> edges_;
  std::vector<int> local_;
  Eigen::VectorXd sqrt_rho_;
  std::vector<std::vector<std::size_t>> incident_;
};

constexpr int kProjectionRounds = 50;

}  // namespace

TransitionMatrix metropolis_chain(const EnvironmentGraph& graph, const Eigen::VectorXd& rho) {
  check_belief(graph, rho);
  const int n = graph.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  const double proposal = graph.max_degree() > 0 ? 1.0 / graph.max_degree() : 0.0;
  for (RegionId from : graph.accessible_regions()) {
    const double rho_from = rho[from.value];
    double moving = 0.0;
    for (RegionId to : graph.neighbors(from)) {
      const double rho_to = rho[to.value];
      const double accept = rho_to >= rho_from ? 1.0 : rho_to / rho_from;
      const double prob = proposal * accept;
      p(to.value, from.value) = prob;
      moving += prob;
    }
    p(from.value, from.value) = 1.0 - moving;
  }
  return TransitionMatrix(std::move(p));
}

TransitionMatrix fast_mixing_chain(const EnvironmentGraph& graph, const Eigen::VectorXd& rho,
                                   const PolicyConfig& config) {
  config.validate();
  TransitionMatrix base = metropolis_chain(graph, rho);
  if (config.slem_max_iters == 0) return base;

  const FlowChain chain(graph, rho);
  if (chain.edge_count() == 0) return base;

  Eigen::VectorXd q = chain.flows_of(base);
  Eigen::VectorXd grad;
  const double base_slem = chain.slem_and_subgradient(q, &grad);
  double best_slem = base_slem;
  Eigen::VectorXd best_q = q;

  double scale = 0.0;
  for (const auto& e : chain.edges()) scale += std::min(rho[e.a], rho[e.b]);
  scale /= static_cast<double>(chain.edge_count());

  for (int it = 0; it < config.slem_max_iters; ++it) {
    const double gmax = grad.cwiseAbs().maxCoeff();
    if (!(gmax > 0.0)) break;
    const double step = 0.5 * scale / std::sqrt(static_cast<double>(it) + 1.0);
    q -= (step / gmax) * grad;
    chain.project(q, kProjectionRounds);
    const double value = chain.slem_and_subgradient(q, &grad);
    if (value < best_slem) {
      best_slem = value;
      best_q = q;
    }
  }

  if (!(best_slem < base_slem)) return base;
  TransitionMatrix result = chain.to_matrix(best_q);
  // Final contract check against the input target.
  const Eigen::VectorXd drift = result.matrix() * rho - rho;
  if (!(drift.lpNorm<1>() <= 1e-9)) return base;
  return result;
}

TransitionMatrix build_policy(const EnvironmentGraph& graph, const Eigen::VectorXd& rho,
                              const PolicyConfig& config) {
  return config.mode == PolicyMode::kFastMixing ? fast_mixing_chain(graph, rho, config)
                                                : metropolis_chain(graph, rho);
}

double slem(const TransitionMatrix& p, const Eigen::VectorXd& rho) {
  const auto& m = p.matrix();
  if (rho.size() != m.rows()) throw Error(ErrorCode::kInvalidArgument, "rho size mismatch");
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho[i] > 0.0) support.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(support.size());
  if (n <= 1) return 0.0;
  Eigen::MatrixXd s(n, n);
  Eigen::VectorXd root(n);
  for (Eigen::Index a = 0; a < n; ++a) root[a] = std::sqrt(rho[support[a]]);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto i = support[a];
      const auto j = support[b];
      if (b > a && std::abs(rho[i] * m(j, i) - rho[j] * m(i, j)) > 1e-9) {
        throw Error(ErrorCode::kNotReversible, "detailed balance violated between regions " +
                                                   std::to_string(i) + " and " + std::to_string(j));
      }
      s(b, a) = root[a] * m(j, i) / root[b];
    }
  }
  // Symmetrize away rounding and deflate the Perron direction.
  const double mass = rho.sum();
  Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  sym.noalias() -= (root / std::sqrt(mass)) * (root / std::sqrt(mass)).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double value = eig.eigenvalues().cwiseAbs().maxCoeff();
  return std::clamp(value, 0.0, 1.0);
}

RegionId sample_next(const TransitionMatrix& p, RegionId from, Rng& rng) {
  const auto col = p.matrix().col(from.value);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  Eigen::Index last = from.value;
  for (Eigen::Index j = 0; j < col.size(); ++j) {
    if (col[j] <= 0.0) continue;
    cumulative += col[j];
    last = j;
    if (u < cumulative) return RegionId(static_cast<std::int32_t>(j));
  }
  return RegionId(static_cast<std::int32_t>(last));
}

Eigen::VectorXd stationary(const TransitionMatrix& p, double tol, long max_iters) {
  const auto& m = p.matrix();
  const auto n = m.cols();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  double rank = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m.col(i).sum() > 0.5) pi[i] = (rank += 1.0);
  }
  if (!(pi.sum() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "transition matrix has no mass");
  pi /= pi.sum();
  const Eigen::SparseMatrix<double> sparse = m.sparseView();
  Eigen::VectorXd next(n);
  for (long it = 0; it < max_iters; ++it) {
    next.noalias() = sparse * pi;
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (change < tol) return pi;
  }
  throw Error(ErrorCode::kNoConvergence,
              "power iteration did not converge in " + std::to_string(max_iters) + " iterations");
}

}  // namespace ergocov
