#include "ergocov/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ergocov/baselines.hpp"
#include "ergocov/error.hpp"

namespace ergocov {

namespace {

enum StreamTag : std::uint64_t { kInitStream = 1, kSenseStream = 2, kMoveStream = 3 };

std::vector<RegionId> default_positions(const EnvironmentGraph& graph, int agents,
                                        std::uint64_t seed) {
  std::vector<RegionId> cells(graph.accessible_regions().begin(), graph.accessible_regions().end());
  Rng rng = derive_stream(seed, kInitStream, 0);
  // Fisher-Yates with our own uniform draw keeps the order platform independent.
  for (std::size_t i = cells.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(cells[i - 1], cells[std::min(j, i - 1)]);
  }
  std::vector<RegionId> out;
  for (int m = 0; m < agents; ++m) out.push_back(cells[static_cast<std::size_t>(m) % cells.size()]);
  return out;
}

}  // namespace

void SwarmConfig::validate(const EnvironmentGraph& graph) const {
  if (agents < 1) throw ConfigError("swarm.agents", "must be >= 1");
  if (!(sense_radius >= 0.0)) throw ConfigError("swarm.sense_radius", "must be >= 0");
  if (!(comm_radius >= 0.0)) throw ConfigError("swarm.comm_radius", "must be >= 0");
  if (tau_gp < 1) throw ConfigError("swarm.tau_gp", "must be >= 1");
  if (tau_p < 1) throw ConfigError("swarm.tau_p", "must be >= 1");
  if (horizon < 1) throw ConfigError("swarm.horizon", "must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("swarm.beta", "must be finite and >= 0");
  if (!initial_positions.empty()) {
    if (static_cast<int>(initial_positions.size()) != agents) {
      throw ConfigError("swarm.initial_positions", "needs exactly one position per agent");
    }
    for (RegionId r : initial_positions) {
      if (!graph.contains(r) || !graph.accessible(r)) {
        throw ConfigError("swarm.initial_positions",
                          "region " + std::to_string(r.value) + " is not accessible");
      }
    }
  }
}

void BeliefConfig::validate() const {
  try {
    kernel.validate();
  } catch (const Error& e) {
    throw ConfigError("belief", e.what());
  }
  if (!(eps > 0.0)) throw ConfigError("belief.eps", "must be > 0");
  if (!(noise_std >= 0.0)) throw ConfigError("belief.noise_std", "must be >= 0");
}

std::vector<Observation> sense(const EnvironmentGraph& graph, const InfoMap& map,
                               const AgentState& agent, int k, double sense_radius,
                               double noise_std, Rng& rng) {
  std::vector<Observation> out;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (RegionId r : ball(graph, agent.position, sense_radius)) {
    double value = map[r];
    if (noise_std > 0.0) value += noise_std * noise(rng);
    out.push_back({r, value, k, agent.id});
  }
  return out;
}

std::vector<int> comm_neighbors(std::span<const AgentState> agents, int m, double comm_radius,
                                const EnvironmentGraph& graph) {
  std::vector<int> out;
  const auto& here = graph.coords(agents[static_cast<std::size_t>(m)].position);
  for (std::size_t l = 0; l < agents.size(); ++l) {
    if (static_cast<int>(l) == m) continue;
    if ((graph.coords(agents[l].position) - here).norm() <= comm_radius) {
      out.push_back(static_cast<int>(l));
    }
  }
  return out;
}

void exchange(std::vector<AgentState>& agents,
              const std::vector<std::vector<Observation>>& current,
              const std::vector<std::vector<int>>& neighbors) {
  for (std::size_t m = 0; m < agents.size(); ++m) {
    agents[m].dataset.append(current[m]);
    for (int l : neighbors[m]) agents[m].dataset.append(current[static_cast<std::size_t>(l)]);
  }
}

SwarmEngine::SwarmEngine(const World& world, MapSchedule schedule, SwarmConfig swarm,
                         BeliefConfig belief, PolicyConfig policy)
    : graph_(world.graph),
      schedule_(std::move(schedule)),
      swarm_(std::move(swarm)),
      belief_(belief),
      policy_(policy),
      map_(world.initial_map) {
  swarm_.validate(graph_);
  belief_.validate();
  policy_.validate();
  target_ = target_distribution(map_, graph_);

  const auto starts = swarm_.initial_positions.empty()
                          ? default_positions(graph_, swarm_.agents, swarm_.seed)
                          : swarm_.initial_positions;
  // Init: uniform belief over reachable regions and its policy.
  const GpUcbResult prior = gp_ucb(Dataset{}, belief_.kernel, swarm_.beta, graph_, belief_.eps);
  Eigen::VectorXd uniform = Eigen::VectorXd::Zero(graph_.size());
  for (RegionId r : graph_.accessible_regions()) uniform[r.value] = 1.0 / graph_.accessible_count();
  TransitionMatrix initial_policy;
  if (swarm_.planner == PlannerKind::kErgodic) initial_policy = build_policy(graph_, uniform, policy_);

  agents_.resize(static_cast<std::size_t>(swarm_.agents));
  for (int m = 0; m < swarm_.agents; ++m) {
    auto& a = agents_[static_cast<std::size_t>(m)];
    a.id = m;
    a.position = starts[static_cast<std::size_t>(m)];
    a.phi_ucb = prior.phi_ucb;
    a.belief = BeliefMap{prior.belief.phi, uniform};
    a.policy = initial_policy;
    a.visit_counts.assign(static_cast<std::size_t>(graph_.size()), 0);
    a.visit_counts[a.position.index()] = 1;
    a.sense_rng = derive_stream(swarm_.seed, kSenseStream, static_cast<std::uint64_t>(m));
    a.move_rng = derive_stream(swarm_.seed, kMoveStream, static_cast<std::uint64_t>(m));
  }
  emit_record();
}

void SwarmEngine::refit_beliefs() {
  for (auto& a : agents_) {
    GpUcbResult fit = gp_ucb(a.dataset, belief_.kernel, swarm_.beta, graph_, belief_.eps);
    a.phi_ucb = std::move(fit.phi_ucb);
    a.belief = std::move(fit.belief);
  }
}

void SwarmEngine::rebuild_policies() {
  if (swarm_.planner != PlannerKind::kErgodic) return;
  for (auto& a : agents_) a.policy = build_policy(graph_, a.belief.rho, policy_);
}

RegionId SwarmEngine::next_position(AgentState& agent) {
  switch (swarm_.planner) {
    case PlannerKind::kErgodic: return sample_next(agent.policy, agent.position, agent.move_rng);
    case PlannerKind::kGreedyUcb: return greedy_step(agent, graph_);
    case PlannerKind::kUniformWalk: return uniform_step(agent, graph_, agent.move_rng);
  }
  return agent.position;
}

const StepRecord& SwarmEngine::step() {
  if (done()) throw Error(ErrorCode::kInvalidArgument, "engine already reached its horizon");
  const int k = k_;
  try {
    const auto m_count = agents_.size();
    std::vector<std::vector<Observation>> current(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      current[m] = sense(graph_, map_, agents_[m], k, swarm_.sense_radius, belief_.noise_std,
                         agents_[m].sense_rng);
    }
    std::vector<std::vector<int>> neighbors(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      neighbors[m] = comm_neighbors(agents_, static_cast<int>(m), swarm_.comm_radius, graph_);
    }
    exchange(agents_, current, neighbors);
    for (auto& a : agents_) a.dataset.trim_to(belief_.max_points);

    if (k >= 1 && k % swarm_.tau_gp == 0) refit_beliefs();
    if (k >= 1 && k % swarm_.tau_p == 0) rebuild_policies();

    for (auto& a : agents_) a.position = next_position(a);

    map_ = step_map(map_, schedule_, k + 1, graph_);
    target_ = target_distribution(map_, graph_);
    ++k_;
    for (auto& a : agents_) ++a.visit_counts[a.position.index()];
  } catch (const Error& e) {
    throw Error(e.code(), "step " + std::to_string(k) + ": " + e.what());
  }
  emit_record();
  return record_;
}

void SwarmEngine::emit_record() {
  record_.k = k_;
  record_.positions.clear();
  std::vector<Eigen::VectorXd> beliefs;
  beliefs.reserve(agents_.size());
  Eigen::VectorXd empirical = Eigen::VectorXd::Zero(graph_.size());
  Eigen::VectorXd belief = Eigen::VectorXd::Zero(graph_.size());
  for (const auto& a : agents_) {
    record_.positions.push_back(a.position);
    empirical += a.empirical();
    belief += a.belief.rho;
    beliefs.push_back(a.belief.rho);
  }
  const double m = static_cast<double>(agents_.size());
  record_.team_empirical = empirical / m;
  record_.team_belief = belief / m;
  record_.true_target = target_;
  record_.belief_alignment = kl_alignment(beliefs);
}

RunResult run(const World& world, const MapSchedule& schedule, const SwarmConfig& swarm,
              const BeliefConfig& belief, const PolicyConfig& policy,
              const std::vector<RegionSet>& rois, const RecordSink& sink) {
  SwarmEngine engine(world, schedule, swarm, belief, policy);
  MetricsAccumulator metrics(world.graph, rois);
  auto consume = [&](const StepRecord& rec) {
    metrics.add(rec);
    if (sink) sink(rec, engine.agents());
  };
  consume(engine.record());
  while (!engine.done()) consume(engine.step());
  RunResult result;
  result.rows = metrics.rows();
  result.summary = metrics.summary();
  result.final_record = engine.record();
  return result;
}

}  // namespace ergocov
