#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ergocov/error.hpp"
#include "ergocov/gp_belief.hpp"
#include "oracles.hpp"

using namespace ergocov;

namespace {

oracle::GpResult oracle_fit(const Dataset& data, const KernelParams& k, const EnvironmentGraph& g) {
  std::vector<std::pair<double, double>> xy;
  oracle::Vector y;
  for (const auto& o : data.items()) {
    xy.emplace_back(g.coords(o.region).x(), g.coords(o.region).y());
    y.push_back(o.value);
  }
  std::vector<std::pair<double, double>> query;
  for (int r = 0; r < g.size(); ++r) query.emplace_back(g.coords(RegionId(r)).x(), g.coords(RegionId(r)).y());
  return oracle::gp_posterior(xy, y, query, k.lengthscale, k.signal_variance, k.noise_variance,
                              k.prior_mean);
}

Dataset random_dataset(std::mt19937& rng, const EnvironmentGraph& g, int n) {
  Dataset d;
  std::uniform_real_distribution<double> value(-1.0, 4.0);
  for (int i = 0; i < n; ++i) {
    const auto& acc = g.accessible_regions();
    d.append({acc[rng() % acc.size()], value(rng), i, 0});
  }
  return d;
}

}  // namespace

TEST_CASE("fit_posterior: prior when the dataset is empty") {
  const auto g = build_grid(3, 2);
  const KernelParams k{1.2, 4.0, 0.1, 0.7};
  const auto post = fit_posterior(Dataset{}, k, g);
  for (int r = 0; r < g.size(); ++r) {
    CHECK(post.mean[r] == 0.7);
    CHECK(post.std[r] == 2.0);
  }
}

TEST_CASE("fit_posterior: noiseless single observation interpolates") {
  const auto g = build_grid(4, 4);
  const KernelParams k{1.5, 2.0, 0.0, 0.0};
  Dataset d;
  d.append({RegionId(5), 3.25, 0, 0});
  const auto post = fit_posterior(d, k, g);
  CHECK(post.mean[5] == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(post.std[5] == doctest::Approx(0.0));
  CHECK(post.std[5] <= 1e-7);
  CHECK(post.std[0] > 0.1);
}

TEST_CASE("fit_posterior: matches the explicit-inverse oracle on a 4x4 grid") {
  const auto g = build_grid(4, 4);
  const KernelParams k{1.3, 1.5, 0.05, 0.2};
  Dataset d;
  d.append({RegionId(0), 1.0, 0, 0});
  d.append({RegionId(5), 2.0, 1, 0});
  d.append({RegionId(5), 2.4, 2, 1});
  d.append({RegionId(10), -0.5, 3, 0});
  d.append({RegionId(15), 0.8, 4, 1});
  const auto post = fit_posterior(d, k, g);
  const auto ref = oracle_fit(d, k, g);
  for (int r = 0; r < g.size(); ++r) {
    CHECK(std::abs(post.mean[r] - ref.mean[r]) <= 1e-8);
    CHECK(std::abs(post.std[r] - ref.std[r]) <= 1e-8);
  }
}

TEST_CASE("fit_posterior: noisy duplicates never error") {
  const auto g = build_grid(3, 3);
  const KernelParams k{2.0, 1.0, 1e-4, 0.0};
  Dataset d;
  for (int i = 0; i < 200; ++i) d.append({RegionId(i % 2), 1.0 + 0.001 * i, i, 0});
  CHECK_NOTHROW(fit_posterior(d, k, g));
  // Noiseless duplicates rely on the jitter path.
  const KernelParams noiseless{2.0, 1.0, 0.0, 0.0};
  CHECK_NOTHROW(fit_posterior(d, noiseless, g));
}

TEST_CASE("fit_posterior: non-finite observations are a singular Gram") {
  const auto g = build_grid(2, 2);
  Dataset d;
  d.append({RegionId(0), std::nan(""), 0, 0});
  CHECK_THROWS_AS(fit_posterior(d, KernelParams{}, g), Error);
}

TEST_CASE("posterior variance never increases when data is added") {
  const auto g = build_grid(5, 5, {RegionId(12)});
  const KernelParams k{1.4, 1.0, 0.02, 0.0};
  std::mt19937 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    Dataset d = random_dataset(rng, g, 1 + static_cast<int>(rng() % 12));
    const auto before = fit_posterior(d, k, g);
    d.append({g.accessible_regions()[rng() % g.accessible_count()], 1.0, 99, 0});
    const auto after = fit_posterior(d, k, g);
    for (int r = 0; r < g.size(); ++r) CHECK(after.std[r] <= before.std[r] + 1e-12);
  }
}

TEST_CASE("posterior is symmetric under a grid reflection") {
  const auto g = build_grid(4, 4);
  const KernelParams k{1.1, 1.0, 0.03, 0.5};
  Dataset d;
  auto mirror = [&](RegionId r) { return g.at(3 - g.col(r), g.row(r)); };
  const std::vector<std::pair<int, double>> half{{0, 2.0}, {5, -1.0}, {9, 0.5}, {13, 3.0}};
  for (auto [cell, v] : half) {
    d.append({RegionId(cell), v, 0, 0});
    d.append({mirror(RegionId(cell)), v, 0, 0});
  }
  const auto post = fit_posterior(d, k, g);
  for (int r = 0; r < g.size(); ++r) {
    const auto m = mirror(RegionId(r)).value;
    CHECK(std::abs(post.mean[r] - post.mean[m]) <= 1e-10);
    CHECK(std::abs(post.std[r] - post.std[m]) <= 1e-10);
  }
}

TEST_CASE("ucb_map") {
  const auto g = build_grid(2, 1);
  GPPosterior post{Eigen::Vector2d(1.0, 3.0), Eigen::Vector2d(2.0, 0.0)};
  CHECK(ucb_map(post, 0.0, g) == post.mean);
  CHECK(ucb_map(post, 1.0, g) == Eigen::Vector2d(3.0, 3.0));

  const KernelParams k{1.0, 4.0, 0.1, 0.5};
  const auto prior = fit_posterior(Dataset{}, k, g);
  const auto phi = ucb_map(prior, 2.0, g);
  CHECK(phi[0] == 4.5);
  CHECK(phi[1] == 4.5);
}

TEST_CASE("normalize_belief") {
  const auto g4 = build_grid(2, 2);
  auto b = normalize_belief(Eigen::VectorXd::Ones(4), g4, 1e-6);
  for (int i = 0; i < 4; ++i) CHECK(b.rho[i] == 0.25);

  const auto g2 = build_grid(2, 1);
  b = normalize_belief(Eigen::Vector2d(-5.0, 5.0), g2, 1e-6);
  CHECK(b.rho[0] == doctest::Approx(1e-6 / (5.0 + 1e-6)).epsilon(1e-12));
  CHECK(b.rho[1] == doctest::Approx(5.0 / (5.0 + 1e-6)).epsilon(1e-12));

  b = normalize_belief(Eigen::VectorXd::Constant(4, -3.0), g4, 1e-6);
  for (int i = 0; i < 4; ++i) CHECK(b.rho[i] == doctest::Approx(0.25));

  const auto blocked = build_grid(2, 2, {RegionId(1)});
  b = normalize_belief(Eigen::Vector4d(1.0, 7.0, 3.0, 0.0), blocked, 1e-6);
  CHECK(b.rho[1] == 0.0);
  CHECK(b.rho[0] == doctest::Approx(0.25));
}

TEST_CASE("normalize_belief: strictly positive probability vector for any input") {
  const auto g = build_grid(4, 3, {RegionId(6)});
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd phi(g.size());
    for (int i = 0; i < g.size(); ++i) phi[i] = n(rng);
    const auto b = normalize_belief(phi, g, 1e-6);
    CHECK(std::abs(b.rho.sum() - 1.0) <= 1e-12);
    for (RegionId r : g.accessible_regions()) CHECK(b.rho[r.value] > 0.0);
  }
}

TEST_CASE("gp_ucb") {
  const auto g = build_grid(3, 3);
  SUBCASE("empty dataset gives a uniform belief") {
    const auto out = gp_ucb(Dataset{}, KernelParams{1.0, 1.0, 0.1, 1.0}, 0.0, g);
    for (int i = 0; i < 9; ++i) CHECK(out.belief.rho[i] == doctest::Approx(1.0 / 9.0));
  }
  Eigen::VectorXd truth(9);
  truth << 0.5, 1.0, 0.2, 3.0, 0.1, 0.7, 1.5, 0.4, 2.0;
  const auto rho_star = target_distribution(InfoMap(truth), g);
  const KernelParams k{1.0, 2.0, 1e-9, 0.0};

  SUBCASE("near-noiseless full coverage recovers the target") {
    Dataset d;
    for (int r = 0; r < 9; ++r) d.append({RegionId(r), truth[r], r, 0});
    const auto out = gp_ucb(d, k, 0.0, g);
    CHECK((out.belief.rho - rho_star).lpNorm<1>() <= 1e-3);

    const auto ref = oracle_fit(d, k, g);
    double total = 0.0;
    for (double m : ref.mean) total += std::max(m, 1e-6);
    double l1 = 0.0;
    for (int r = 0; r < 9; ++r) l1 += std::abs(std::max(ref.mean[r], 1e-6) / total - rho_star[r]);
    CHECK(l1 <= 1e-3);
  }

  SUBCASE("larger beta moves mass onto unobserved cells") {
    Dataset d;
    for (int r = 0; r < 8; ++r) d.append({RegionId(r), truth[r], r, 0});
    const auto low = gp_ucb(d, k, 0.0, g);
    const auto high = gp_ucb(d, k, 10.0, g);
    CHECK(high.belief.rho[8] > low.belief.rho[8]);
  }

  SUBCASE("deterministic") {
    std::mt19937 rng(2);
    const Dataset d = random_dataset(rng, g, 25);
    const auto a = gp_ucb(d, KernelParams{}, 1.5, g);
    const auto b = gp_ucb(d, KernelParams{}, 1.5, g);
    CHECK(a.phi_ucb == b.phi_ucb);
    CHECK(a.belief.rho == b.belief.rho);
  }
}

TEST_CASE("Dataset::trim_to keeps the newest observations and one per region") {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.append({RegionId(i < 8 ? 0 : 1), double(i), i, 0});
  d.append({RegionId(2), 42.0, 10, 0});
  d.trim_to(4);
  REQUIRE(d.size() == 4);
  CHECK(d.items()[0].time == 7);
  CHECK(d.items()[3].region == RegionId(2));

  Dataset spread;
  for (int r = 0; r < 6; ++r) spread.append({RegionId(r), 1.0, r, 0});
  spread.trim_to(3);  // every observation is the newest of its region
  CHECK(spread.size() == 6);

  Dataset keep;
  keep.append({RegionId(0), 1.0, 0, 0});
  keep.trim_to(0);
  CHECK(keep.size() == 1);
}
