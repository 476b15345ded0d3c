#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "helpers.hpp"
#include "sabrnet/surface_gen.hpp"

using namespace sabrnet;

namespace {

GenHyper small_hyper() {
  GenHyper hyper;
  hyper.m = 5;
  hyper.n = 8;
  hyper.t_last = 1.0;
  hyper.dt = 0.02;
  return hyper;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.surfaces.size() != b.surfaces.size() || !(a.hyper == b.hyper) || a.n_paths != b.n_paths ||
      a.dt != b.dt || a.master_seed != b.master_seed || a.role != b.role)
    return false;
  for (std::size_t i = 0; i < a.surfaces.size(); ++i) {
    const auto& x = a.surfaces[i];
    const auto& y = b.surfaces[i];
    if (x.spec.surface_id != y.spec.surface_id || x.spec.params.alpha0 != y.spec.params.alpha0 ||
        x.spec.params.nu != y.spec.params.nu || x.spec.params.rho != y.spec.params.rho ||
        x.spec.eta_f != y.spec.eta_f || x.spec.maturities != y.spec.maturities ||
        x.spec.strikes != y.spec.strikes || x.mask != y.mask || x.noise != y.noise)
      return false;
    // iv can hold NaN at excluded points; compare bit-exactly via masks.
    for (std::size_t p = 0; p < x.iv.size(); ++p) {
      const bool xnan = std::isnan(x.iv[p]), ynan = std::isnan(y.iv[p]);
      if (xnan != ynan || (!xnan && x.iv[p] != y.iv[p])) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("sampled specs obey the maturity and strike grid laws") {
  GenHyper hyper;  // production defaults: m = n = 20, T_last = 2
  rng::Xoshiro256pp gen(1);
  const double delta_t = hyper.t_last / hyper.m;
  for (int i = 0; i < 200; ++i) {
    const auto spec = sample_spec(hyper, gen, static_cast<std::uint64_t>(i));
    REQUIRE(spec.maturities.size() == static_cast<std::size_t>(hyper.m));
    CHECK(spec.maturities[0] >= hyper.dt);
    CHECK(spec.maturities[0] <= delta_t);
    for (int row = 1; row < hyper.m; ++row)
      CHECK(spec.maturities[row] - spec.maturities[row - 1] ==
            doctest::Approx(delta_t).epsilon(1e-12));

    for (int row = 0; row < hyper.m; ++row) {
      const double dk = spec.strike(row, 1) - spec.strike(row, 0);
      for (int col = 1; col < hyper.n; ++col) {
        CHECK(spec.strike(row, col) > spec.strike(row, col - 1));
        CHECK(spec.strike(row, col) - spec.strike(row, col - 1) ==
              doctest::Approx(dk).epsilon(1e-12));
      }
    }

    // Log strike-range width 2 eta_f alpha0 sqrt(r) grows with maturity
    // (r is linear in T under the per-row nu_tilde convention); the absolute
    // width need not, since the exp(-alpha0^2 r / 2) centering can dominate.
    for (int row = 1; row < hyper.m; ++row) {
      const double w_prev =
          std::log(spec.strike(row - 1, hyper.n - 1) / spec.strike(row - 1, 0));
      const double w = std::log(spec.strike(row, hyper.n - 1) / spec.strike(row, 0));
      CHECK(w > w_prev);
    }

    CHECK(spec.params.alpha0 >= hyper.alpha0_min);
    CHECK(spec.params.alpha0 <= hyper.alpha0_max);
    CHECK(spec.params.nu >= hyper.nu_min);
    CHECK(spec.params.nu <= hyper.nu_max);
    CHECK(spec.params.rho >= hyper.rho_min);
    CHECK(spec.params.rho <= hyper.rho_max);
    CHECK(spec.eta_f >= hyper.eta_min);
    CHECK(spec.eta_f <= hyper.eta_max);
  }
}

TEST_CASE("sample_spec is deterministic in the rng state") {
  GenHyper hyper = small_hyper();
  rng::Xoshiro256pp a(99), b(99);
  const auto sa = sample_spec(hyper, a, 3);
  const auto sb = sample_spec(hyper, b, 3);
  CHECK(sa.params.alpha0 == sb.params.alpha0);
  CHECK(sa.maturities == sb.maturities);
  CHECK(sa.strikes == sb.strikes);
}

TEST_CASE("nu -> 0 strike endpoints reduce to the lognormal limit") {
  GenHyper hyper = small_hyper();
  hyper.nu_min = 0.0;
  hyper.nu_max = 0.0;
  rng::Xoshiro256pp gen(5);
  const auto spec = sample_spec(hyper, gen, 0);
  const double alpha0 = spec.params.alpha0;
  for (int row = 0; row < hyper.m; ++row) {
    const double maturity = spec.maturities[static_cast<std::size_t>(row)];
    const double lo = std::exp(-0.5 * alpha0 * alpha0 * maturity -
                               spec.eta_f * alpha0 * std::sqrt(maturity));
    const double hi = std::exp(-0.5 * alpha0 * alpha0 * maturity +
                               spec.eta_f * alpha0 * std::sqrt(maturity));
    CHECK(spec.strike(row, 0) == doctest::Approx(lo).epsilon(1e-12));
    CHECK(spec.strike(row, hyper.n - 1) == doctest::Approx(hi).epsilon(1e-12));
  }
}

TEST_CASE("literal-text strike conventions are switchable") {
  GenHyper corrected = small_hyper();
  GenHyper literal = corrected;
  literal.literal_k1_exponent = true;
  literal.literal_dk_divisor = true;
  rng::Xoshiro256pp a(4), b(4);
  const auto sc = sample_spec(corrected, a, 0);
  const auto sl = sample_spec(literal, b, 0);
  // Same draws, different grid conventions.
  CHECK(sc.params.alpha0 == sl.params.alpha0);
  CHECK(sc.strikes != sl.strikes);
  // Literal dK divisor n undershoots the upper endpoint.
  CHECK(sl.strike(0, literal.n - 1) < sc.strike(0, corrected.n - 1));
}

TEST_CASE("sampler marginals are uniform (Kolmogorov-Smirnov at 1%)") {
  GenHyper hyper = small_hyper();
  rng::Xoshiro256pp gen(77);
  std::vector<double> alpha0s, etas;
  const int count = 10000;
  for (int i = 0; i < count; ++i) {
    const auto spec = sample_spec(hyper, gen, static_cast<std::uint64_t>(i));
    alpha0s.push_back(spec.params.alpha0);
    etas.push_back(spec.eta_f);
  }
  const double critical = 1.63 / std::sqrt(static_cast<double>(count));
  CHECK(testutil::ks_uniform(alpha0s, hyper.alpha0_min, hyper.alpha0_max) < critical);
  CHECK(testutil::ks_uniform(etas, hyper.eta_min, hyper.eta_max) < critical);
}

TEST_CASE("generate_dataset smoke: one surface, mask populated") {
  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 10000;
  cfg.dt = 0.02;
  cfg.seed = 1;
  GenStats stats;
  const auto ds = generate_dataset(hyper, 1, cfg, DatasetRole::train, 1, &stats);
  REQUIRE(ds.surfaces.size() == 1);
  CHECK(ds.surfaces[0].iv.size() == static_cast<std::size_t>(hyper.m) * hyper.n);
  CHECK(stats.total_points == ds.total_points());
  CHECK(ds.n_paths == cfg.n_paths);
  CHECK(ds.dt == hyper.dt);
}

TEST_CASE("desk-scale exclusion fraction stays below 15%") {
  GenHyper hyper;  // production ranges
  hyper.dt = 0.04;
  SimConfig cfg;
  cfg.n_paths = 20000;
  cfg.seed = 3;
  GenStats stats;
  generate_dataset(hyper, 40, cfg, DatasetRole::train, 1, &stats);
  CHECK(stats.exclusion_fraction() >= 0.0);
  CHECK(stats.exclusion_fraction() <= 0.15);
}

TEST_CASE("generation is worker-count independent") {
  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 2000;
  cfg.dt = 0.02;
  cfg.seed = 11;
  const auto one = generate_dataset(hyper, 6, cfg, DatasetRole::test, 1);
  const auto many = generate_dataset(hyper, 6, cfg, DatasetRole::test, 4);
  CHECK(datasets_equal(one, many));

  const auto dir = testutil::scratch_dir("workers");
  write_dataset(one, dir / "a.ds");
  write_dataset(many, dir / "b.ds");
  std::ifstream fa(dir / "a.ds", std::ios::binary), fb(dir / "b.ds", std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  CHECK(bytes_a == bytes_b);
  CHECK_FALSE(bytes_a.empty());
}

TEST_CASE("binary round trip is bit-exact") {
  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 500;  // tiny paths: plenty of excluded points to exercise NaNs
  cfg.dt = 0.02;
  cfg.seed = 21;
  const auto ds = generate_dataset(hyper, 100, cfg, DatasetRole::validate, 2);
  const auto dir = testutil::scratch_dir("roundtrip");
  write_dataset(ds, dir / "ds.bin");
  const auto back = read_dataset(dir / "ds.bin");
  CHECK(datasets_equal(ds, back));
}

TEST_CASE("corrupt dataset files are rejected") {
  const auto dir = testutil::scratch_dir("corrupt");

  {
    std::ofstream out(dir / "bad_magic.ds", std::ios::binary);
    out << "NOTADATASET";
  }
  CHECK_THROWS_AS(read_dataset(dir / "bad_magic.ds"), DataError);

  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 200;
  cfg.dt = 0.02;
  const auto ds = generate_dataset(hyper, 3, cfg, DatasetRole::test, 1);
  write_dataset(ds, dir / "full.ds");
  std::ifstream in(dir / "full.ds", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  {
    std::ofstream out(dir / "truncated.ds", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(read_dataset(dir / "truncated.ds"), DataError);
  {
    std::ofstream out(dir / "trailing.ds", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out << "extra";
  }
  CHECK_THROWS_AS(read_dataset(dir / "trailing.ds"), DataError);
}

TEST_CASE("CSV mirror preserves the grids") {
  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 2000;
  cfg.dt = 0.02;
  cfg.seed = 13;
  const auto ds = generate_dataset(hyper, 5, cfg, DatasetRole::test, 1);
  const auto dir = testutil::scratch_dir("csv");
  write_dataset_csv(ds, dir / "ds.csv");

  {
    std::ifstream in(dir / "ds.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "surface_id,k1,k2,T,K,alpha0,nu,rho,iv,noise,excluded");
  }

  const auto back = read_dataset_csv(dir / "ds.csv");
  REQUIRE(back.surfaces.size() == ds.surfaces.size());
  for (std::size_t i = 0; i < ds.surfaces.size(); ++i) {
    const auto& a = ds.surfaces[i];
    const auto& b = back.surfaces[i];
    REQUIRE(b.iv.size() == a.iv.size());
    CHECK(a.mask == b.mask);
    for (std::size_t p = 0; p < a.iv.size(); ++p) {
      if (a.mask[p] != 0) continue;
      CHECK(std::abs(a.iv[p] - b.iv[p]) <= 1e-15);
      CHECK(std::abs(a.noise[p] - b.noise[p]) <= 1e-15 * std::max(1.0, a.noise[p]));
      CHECK(a.spec.strikes[p] == doctest::Approx(b.spec.strikes[p]).epsilon(1e-15));
    }
  }
}

TEST_CASE("subset selects deterministic nested prefixes") {
  GenHyper hyper = small_hyper();
  SimConfig cfg;
  cfg.n_paths = 100;
  cfg.dt = 0.02;
  const auto ds = generate_dataset(hyper, 100, cfg, DatasetRole::train, 2);

  const auto half = subset(ds, 0.5);
  REQUIRE(half.surfaces.size() == 50);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(half.surfaces[i].spec.surface_id == ds.surfaces[i].spec.surface_id);

  const auto quarter = subset(ds, 0.25);
  REQUIRE(quarter.surfaces.size() == 25);
  for (std::size_t i = 0; i < quarter.surfaces.size(); ++i)
    CHECK(quarter.surfaces[i].spec.surface_id == half.surfaces[i].spec.surface_id);

  CHECK(datasets_equal(subset(ds, 1.0), ds));
  CHECK_THROWS_AS(subset(ds, 1.0 / 3.0), DomainError);
  CHECK_THROWS_AS(subset(ds, std::ldexp(1.0, -8)), DomainError);  // 100 >> 8 == 0
}

TEST_CASE("GenHyper validation") {
  GenHyper hyper = small_hyper();
  hyper.dt = 0.5;  // above the row spacing
  CHECK_THROWS_AS(hyper.validate(), DomainError);
  hyper = small_hyper();
  hyper.alpha0_min = -0.1;
  CHECK_THROWS_AS(hyper.validate(), DomainError);
  hyper = small_hyper();
  hyper.rho_max = 1.0;
  CHECK_THROWS_AS(hyper.validate(), DomainError);
}

TEST_CASE("role names round-trip") {
  for (const auto role : {DatasetRole::train, DatasetRole::validate, DatasetRole::test,
                          DatasetRole::test_accurate})
    CHECK(role_from_string(to_string(role)) == role);
  CHECK_THROWS_AS(role_from_string("bogus"), DomainError);
}
