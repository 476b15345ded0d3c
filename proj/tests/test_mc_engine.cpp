#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "sabrnet/mc_engine.hpp"
#include "sabrnet/rng.hpp"

using namespace sabrnet;
using testutil::mean;
using testutil::sample_var;

namespace {

SurfaceSpec flat_spec(double alpha0, double nu, double rho, std::vector<double> maturities,
                      std::vector<double> strikes_one_row, std::uint64_t id = 0) {
  SurfaceSpec spec;
  spec.params = {alpha0, nu, rho};
  spec.m = static_cast<int>(maturities.size());
  spec.n = static_cast<int>(strikes_one_row.size());
  spec.maturities = std::move(maturities);
  for (int row = 0; row < spec.m; ++row)
    spec.strikes.insert(spec.strikes.end(), strikes_one_row.begin(), strikes_one_row.end());
  spec.surface_id = id;
  return spec;
}

}  // namespace

TEST_CASE("simulate_terminal validates inputs") {
  SimConfig cfg;
  cfg.n_paths = 100;
  cfg.dt = 0.01;
  CHECK_THROWS_AS(simulate_terminal({0.2, 0.0, 0.0}, 0.005, cfg), DomainError);
  cfg.n_paths = 101;  // odd with antithetic on
  CHECK_THROWS_AS(simulate_terminal({0.2, 0.0, 0.0}, 1.0, cfg), DomainError);
  cfg.n_paths = 100;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(simulate_terminal({0.2, 0.0, 0.0}, 1.0, cfg), DomainError);
}

TEST_CASE("terminal forwards form a martingale (driftless SDE)") {
  rng::Xoshiro256pp gen(31);
  SimConfig cfg;
  cfg.n_paths = 20000;
  cfg.dt = 0.02;
  for (int i = 0; i < 12; ++i) {
    SabrParams params{0.05 + 0.45 * gen.uniform(), 0.8 * gen.uniform(),
                      -0.9 + 1.0 * gen.uniform()};
    const double maturity = 0.25 + 1.5 * gen.uniform();
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    const auto terminals = simulate_terminal(params, maturity, cfg);
    REQUIRE(terminals.size() == cfg.n_paths);
    for (const double f : terminals) REQUIRE(f >= 0.0);
    const double mu = mean(terminals);
    const double se = std::sqrt(sample_var(terminals) / static_cast<double>(terminals.size()));
    CHECK(std::abs(mu - 1.0) < 4.0 * se);
  }
}

TEST_CASE("simulation is bit-identical for identical inputs") {
  SimConfig cfg;
  cfg.n_paths = 5000;
  cfg.dt = 0.01;
  cfg.seed = 77;
  SabrParams params{0.3, 0.6, -0.4};
  const auto a = simulate_terminal(params, 0.7, cfg);
  const auto b = simulate_terminal(params, 0.7, cfg);
  CHECK(a == b);
  cfg.seed = 78;
  CHECK(simulate_terminal(params, 0.7, cfg) != a);
}

TEST_CASE("nu=0 collapse: recovered ATM vol within 3 std-errors of alpha0") {
  SimConfig cfg;
  cfg.n_paths = 200000;
  cfg.dt = 0.002;
  cfg.seed = 42;
  const auto terminals = simulate_terminal({0.2, 0.0, 0.0}, 0.5, cfg);
  const auto points = price_row(terminals, {0.9, 1.0, 1.1}, 1.0, 0.5);
  for (const auto& pt : points) {
    REQUIRE_FALSE(pt.excluded);
    const double se = pt.beta / std::sqrt(static_cast<double>(cfg.n_paths));
    CHECK(std::abs(pt.iv - 0.2) < 3.0 * se);
  }
}

TEST_CASE("price_row handles degenerate paths") {
  const std::vector<double> ones(100, 1.0);
  const auto points = price_row(ones, {1.2}, 1.0, 1.0);
  CHECK(points[0].price_mean == 0.0);
  CHECK(points[0].price_std == 0.0);
  CHECK(points[0].excluded);
  CHECK(std::isnan(points[0].iv));
}

TEST_CASE("price_row validates input") {
  CHECK_THROWS_AS(price_row({}, {1.0}, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(price_row({1.0, 1.0}, {1.1, 1.0}, 1.0, 1.0), DomainError);
}

TEST_CASE("exclusion rule threshold is exactly 100x the mean payoff") {
  CHECK(kExclusionStdOverMean == 100.0);

  // One payoff of 1 among n zeros gives std/mean = sqrt(n) exactly:
  // mean = 1/n, sum_sq = 1 => var = (1 - 1/n)/(n-1) = 1/n.
  auto one_spike = [](std::size_t n) {
    std::vector<double> terminals(n, 1.0);  // payoff 0 at K=1.2
    terminals[0] = 2.2;                     // payoff 1
    return terminals;
  };

  // sqrt(22500) = 150 > 100: excluded.
  auto excluded_points = price_row(one_spike(22500), {1.2}, 1.0, 1.0);
  CHECK(excluded_points[0].excluded);
  CHECK(excluded_points[0].price_std ==
        doctest::Approx(150.0 * excluded_points[0].price_mean).epsilon(1e-9));

  // sqrt(9801) = 99 < 100: kept (price inverts fine).
  auto kept_points = price_row(one_spike(9801), {1.2}, 1.0, 1.0);
  CHECK_FALSE(kept_points[0].excluded);
  CHECK(std::isfinite(kept_points[0].iv));
}

TEST_CASE("mc_surface: nu=0 surface recovers alpha0 everywhere") {
  const auto spec = flat_spec(0.25, 0.0, 0.0, {0.5, 1.0}, {0.85, 1.0, 1.2});
  SimConfig cfg;
  cfg.n_paths = 50000;
  cfg.dt = 0.005;
  cfg.seed = 9;
  const auto surface = mc_surface(spec, cfg);
  for (int row = 0; row < spec.m; ++row) {
    for (int col = 0; col < spec.n; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * spec.n + col;
      REQUIRE_FALSE(surface.excluded(row, col));
      const double se = surface.noise[idx] / std::sqrt(static_cast<double>(cfg.n_paths));
      CHECK(std::abs(surface.iv[idx] - 0.25) < 3.0 * se);
    }
  }
}

TEST_CASE("mc_surface output is independent of worker count") {
  auto spec = flat_spec(0.3, 0.8, -0.5, {0.25, 0.5, 0.75, 1.0}, {0.8, 0.9, 1.0, 1.1, 1.25}, 17);
  SimConfig cfg;
  cfg.n_paths = 4000;
  cfg.dt = 0.01;
  cfg.seed = 5;
  const auto one = mc_surface(spec, cfg, 1);
  const auto many = mc_surface(spec, cfg, 8);
  CHECK(one.iv == many.iv);
  CHECK(one.noise == many.noise);
  CHECK(one.mask == many.mask);
}

TEST_CASE("antithetic pairing reduces ATM price variance at production-like rho") {
  // For rho near zero the ATM payoff is nearly symmetric-convex in the
  // driving noise and pairing can mildly hurt; over the production sampling
  // range (rho overwhelmingly negative) it is a consistent win.
  rng::Xoshiro256pp gen(61);
  int reduced = 0;
  double log_ratio_sum = 0.0;
  const int suite = 10, reps = 32;
  for (int i = 0; i < suite; ++i) {
    SabrParams params{0.1 + 0.3 * gen.uniform(), 0.8 * gen.uniform(),
                      -0.9 + 0.7 * gen.uniform()};  // rho in [-0.9, -0.2]
    std::vector<double> anti, plain;
    for (int r = 0; r < reps; ++r) {
      SimConfig cfg;
      cfg.n_paths = 4000;
      cfg.dt = 0.05;
      cfg.seed = rng::mix_seed(100, i, r);
      cfg.antithetic = true;
      anti.push_back(price_row(simulate_terminal(params, 1.0, cfg), {1.0}, 1.0, 1.0)[0].price_mean);
      cfg.antithetic = false;
      plain.push_back(price_row(simulate_terminal(params, 1.0, cfg), {1.0}, 1.0, 1.0)[0].price_mean);
    }
    const double ratio = sample_var(anti) / sample_var(plain);
    log_ratio_sum += std::log(ratio);
    if (ratio <= 1.0) ++reduced;
  }
  CHECK(reduced >= 9);  // >= 90% of the suite
  CHECK(std::exp(log_ratio_sum / suite) < 0.9);  // clear aggregate reduction
}

TEST_CASE("implied-vol noise scales like 1/sqrt(N)") {
  const SabrParams params{0.3, 0.5, -0.3};
  const std::vector<std::uint64_t> path_counts{10000, 40000, 160000};
  std::vector<double> log_n, log_se;
  for (std::size_t k = 0; k < path_counts.size(); ++k) {
    std::vector<double> ivs;
    for (int r = 0; r < 24; ++r) {
      SimConfig cfg;
      cfg.n_paths = path_counts[k];
      cfg.dt = 0.01;
      cfg.seed = rng::mix_seed(7, k, r);
      const auto pts = price_row(simulate_terminal(params, 0.5, cfg), {1.05}, 1.0, 0.5);
      REQUIRE_FALSE(pts[0].excluded);
      ivs.push_back(pts[0].iv);
    }
    log_n.push_back(std::log(static_cast<double>(path_counts[k])));
    log_se.push_back(0.5 * std::log(sample_var(ivs)));
  }
  const double slope = testutil::slope(log_n, log_se);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));  // -0.5 +/- 0.1
}
