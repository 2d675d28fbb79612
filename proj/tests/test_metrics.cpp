#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ergocov/metrics.hpp"

using namespace ergocov;

namespace {

Eigen::VectorXd point_mass(int n, int at) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[at] = 1.0;
  return v;
}

// Records of a single agent that never leaves `cell`, under a fixed target.
std::vector<StepRecord> pinned_records(int n, int cell, int steps, const Eigen::VectorXd& target) {
  std::vector<StepRecord> out;
  for (int k = 0; k < steps; ++k) {
    StepRecord r;
    r.k = k;
    r.positions = {RegionId(cell)};
    r.team_empirical = point_mass(n, cell);
    r.team_belief = target;
    r.true_target = target;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("belief_error and empirical_error") {
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(belief_error(u, u) == 0.0);
  CHECK(belief_error(u, point_mass(4, 2)) == doctest::Approx(1.5));
  CHECK(empirical_error(u, point_mass(4, 2)) == doctest::Approx(1.5));
  CHECK(empirical_error(point_mass(4, 0), point_mass(4, 3)) == 2.0);

  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = d(rng);
      b[i] = d(rng);
    }
    a /= a.sum();
    b /= b.sum();
    const double e = belief_error(a, b);
    CHECK(e >= 0.0);
    CHECK(e <= 2.0 + 1e-15);
  }
}

TEST_CASE("kl_alignment") {
  const Eigen::Vector2d a(0.9, 0.1);
  const Eigen::Vector2d b(0.1, 0.9);
  std::vector<Eigen::VectorXd> same{a, a, a};
  CHECK(kl_alignment(same) == 0.0);

  std::vector<Eigen::VectorXd> pair{a, b};
  const double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl_alignment(pair) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.368064).epsilon(1e-5));

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(0.01, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<Eigen::VectorXd> beliefs;
    for (int m = 0; m < 4; ++m) {
      Eigen::VectorXd v(5);
      for (int i = 0; i < 5; ++i) v[i] = d(rng);
      beliefs.push_back(v / v.sum());
    }
    CHECK(kl_alignment(beliefs) >= 0.0);
  }
}

TEST_CASE("regret") {
  const int n = 5;
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
  SUBCASE("perfect tracking") {
    std::vector<StepRecord> recs = pinned_records(n, 0, 10, uniform);
    for (auto& r : recs) r.team_empirical = uniform;
    CHECK(regret(recs, 9) == 0.0);
  }
  SUBCASE("pinned agent under a uniform target") {
    const auto recs = pinned_records(n, 2, 50, uniform);
    CHECK(regret(recs, 49) == doctest::Approx(2.0 * (n - 1) / n).epsilon(1e-14));
  }
  SUBCASE("disjoint supports") {
    const auto recs = pinned_records(n, 0, 5, point_mass(n, 4));
    CHECK(regret(recs, 4) == 2.0);
  }
  SUBCASE("K = 1 is the k = 1 empirical error; running regret matches the accumulator") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<StepRecord> recs;
    const auto g = build_grid(n, 1);
    MetricsAccumulator acc(g, {});
    for (int k = 0; k < 30; ++k) {
      StepRecord r;
      r.k = k;
      r.positions = {RegionId(static_cast<int>(rng() % n))};
      Eigen::VectorXd e(n), t(n);
      for (int i = 0; i < n; ++i) {
        e[i] = d(rng);
        t[i] = d(rng);
      }
      r.team_empirical = e / e.sum();
      r.team_belief = r.team_empirical;
      r.true_target = t / t.sum();
      recs.push_back(r);
      acc.add(r);
    }
    CHECK(regret(recs, 1) == empirical_error(recs[1].team_empirical, recs[1].true_target));
    for (int k = 1; k < 30; ++k) {
      CHECK(acc.rows()[k].regret_running == doctest::Approx(regret(recs, k)).epsilon(1e-14));
    }
    CHECK(acc.summary().final_regret == doctest::Approx(regret(recs, 29)).epsilon(1e-14));
  }
}

TEST_CASE("time_to_roi") {
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(4, 0.25);
  auto recs = pinned_records(4, 1, 6, t);
  recs[4].positions = {RegionId(3)};
  const std::vector<RegionSet> rois{{RegionId(1)}, {RegionId(2), RegionId(3)}, {RegionId(0)}};
  const auto times = time_to_roi(recs, rois);
  CHECK(times[0] == 0);
  CHECK(times[1] == 4);
  CHECK_FALSE(times[2].has_value());
}

TEST_CASE("coverage_time") {
  const auto g = build_grid(3, 1);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  StepRecord all;
  all.k = 0;
  all.positions = {RegionId(0), RegionId(1), RegionId(2)};
  std::vector<StepRecord> one{all};
  CHECK(coverage_time(one, g) == 0);

  // Single agent walking the path from an end covers it at k = 2 at the earliest.
  std::vector<StepRecord> walk;
  for (int k = 0; k < 3; ++k) {
    StepRecord r;
    r.k = k;
    r.positions = {RegionId(k)};
    walk.push_back(r);
  }
  CHECK(coverage_time(walk, g) == 2);
  walk.pop_back();
  CHECK_FALSE(coverage_time(walk, g).has_value());

  const auto blocked = build_grid(3, 2, {RegionId(2)});
  std::vector<StepRecord> skip;
  for (int cell : {0, 1, 4, 5, 3}) {
    StepRecord r;
    r.k = static_cast<int>(skip.size());
    r.positions = {RegionId(cell)};
    skip.push_back(r);
  }
  CHECK(coverage_time(skip, blocked) == 4);
}

TEST_CASE("map_drift") {
  const auto g = build_grid(4, 1);
  std::vector<Eigen::VectorXd> stat(20, Eigen::VectorXd::Constant(4, 0.25));
  CHECK(map_drift(stat).v_hat == 0.0);

  // Mass p = 0.3 moves from cell 0 to cell 3 once, K = 19.
  Eigen::Vector4d before(0.4, 0.2, 0.2, 0.2);
  Eigen::Vector4d after(0.1, 0.2, 0.2, 0.5);
  for (int when : {1, 7, 19}) {
    std::vector<Eigen::VectorXd> seq;
    for (int k = 0; k < 20; ++k) seq.push_back(k < when ? before : after);
    CHECK(std::abs(map_drift(seq).v_hat - 2.0 * 0.3 / 19.0) <= 1e-12);
  }
}

TEST_CASE("derive_rois groups top-decile cells into components") {
  const auto g = build_grid(5, 4);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(20, 0.1);
  w[0] = 5.0;
  w[1] = 5.0;
  w[19] = 4.0;
  const auto rois = derive_rois(InfoMap(w), g, 0.9);
  REQUIRE(rois.size() == 2);
  CHECK(rois[0] == RegionSet{RegionId(0), RegionId(1)});
  CHECK(rois[1] == RegionSet{RegionId(19)});
}

TEST_CASE("MetricsAccumulator summary") {
  const auto g = build_grid(3, 1);
  MetricsAccumulator acc(g, {{RegionId(2)}});
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  for (int k = 0; k < 4; ++k) {
    StepRecord r;
    r.k = k;
    r.positions = {RegionId(std::min(k, 2))};
    r.team_empirical = t;
    r.team_belief = t;
    r.true_target = t;
    r.belief_alignment = 0.5;
    acc.add(r);
  }
  const auto s = acc.summary();
  CHECK(s.steps == 4);
  CHECK(s.coverage_time == 2);
  CHECK(s.roi_times[0] == 2);
  CHECK(s.map_drift == 0.0);
  CHECK(s.mean_kl_alignment == 0.5);
  CHECK(acc.series().size() == 4);
}
