#pragma once

#include <Eigen/Core>

#include "ergocov/rng.hpp"
#include "ergocov/world.hpp"

namespace ergocov {

/// Column-stochastic transition matrix: P(to, from) = Pr(x' = to | x = from).
/// Columns and rows of no-fly regions are zero.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {}

  double operator()(RegionId to, RegionId from) const { return p_(to.value, from.value); }
  const Eigen::MatrixXd& matrix() const { return p_; }
  int size() const { return static_cast<int>(p_.rows()); }

  friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
    return a.p_.rows() == b.p_.rows() && a.p_.cols() == b.p_.cols() && a.p_ == b.p_;
  }

 private:
  Eigen::MatrixXd p_;
};

enum class PolicyMode { kMetropolis, kFastMixing };

struct PolicyConfig {
  PolicyMode mode = PolicyMode::kMetropolis;
  double slem_tol = 1e-9;
  int slem_max_iters = 30;

  void validate() const;
};

/// Metropolis-Hastings chain with symmetric proposal 1/d_max over neighbors,
/// acceptance min(1, rho_to / rho_from) and the remainder on the self-loop.
/// Reversible w.r.t. `rho`. Throws kZeroBeliefMass if rho vanishes on an
/// accessible region.
TransitionMatrix metropolis_chain(const EnvironmentGraph& graph, const Eigen::VectorXd& rho);

/// Starts from the Metropolis chain and runs projected subgradient descent on
/// the SLEM over reversible chains with the graph's sparsity. Returns the best
/// iterate if it strictly improves the SLEM, otherwise the Metropolis chain.
TransitionMatrix fast_mixing_chain(const EnvironmentGraph& graph, const Eigen::VectorXd& rho,
                                   const PolicyConfig& config);

/// Dispatches on config.mode.
TransitionMatrix build_policy(const EnvironmentGraph& graph, const Eigen::VectorXd& rho,
                              const PolicyConfig& config);

/// Second-largest eigenvalue magnitude of D^{-1/2} P D^{1/2}, D = diag(rho)
/// (the symmetric form for column-stochastic P),
/// over the support of rho. Throws kNotReversible when detailed balance is
/// violated by more than 1e-9.
double slem(const TransitionMatrix& p, const Eigen::VectorXd& rho);

/// Draws the next region from column `from`.
RegionId sample_next(const TransitionMatrix& p, RegionId from, Rng& rng);

/// Power iteration on the columns with nonzero mass, started from a fixed
/// non-uniform vector, until the L1 step change drops below `tol`.
/// Throws kNoConvergence after `max_iters` iterations.
Eigen::VectorXd stationary(const TransitionMatrix& p, double tol = 1e-13, long max_iters = 1'000'000);

}  // namespace ergocov
