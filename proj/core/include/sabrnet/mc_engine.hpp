#pragma once

#include <cstdint>
#include <vector>

#include "sabrnet/model_core.hpp"
#include "sabrnet/surface_types.hpp"

// Euler-Maruyama simulation of the beta=1 SABR model with antithetic
// variates, OTM pricing along maturity rows, per-point noise estimation and
// the 100x exclusion rule.

namespace sabrnet {

struct SimConfig {
  std::uint64_t n_paths = 500000;  ///< total paths; counts antithetic pairs x2
  double dt = 0.002;
  std::uint64_t seed = 0;
  bool antithetic = true;
  /// Per maturity row, simulate with nu_tilde = nu / sqrt(T_row). When off,
  /// every row of a surface shares nu_tilde = nu / sqrt(T_last_row).
  bool per_row_nu_tilde = true;

  void validate() const;
};

struct PricedPoint {
  double price_mean = 0.0;
  double price_std = 0.0;  ///< sample std of per-path payoffs
  double iv = 0.0;         ///< NaN when excluded
  double beta = 0.0;       ///< noise scale: sqrt(N) x std-error of iv
  bool excluded = false;
};

/// Simulates n_paths terminal forwards of the beta=1 SABR SDE from f0 = 1.
/// `params.nu` is interpreted as the (already maturity-scaled) nu_tilde.
/// Negative Euler excursions are floored at zero: absorbing for f, vol
/// reflected to zero for alpha. Output is a pure function of
/// (params, maturity, cfg).
std::vector<double> simulate_terminal(const SabrParams& params, double maturity,
                                      const SimConfig& cfg);

/// Prices the OTM option at every strike from one set of terminal forwards
/// and inverts each price to an implied vol. Failures are never thrown; they
/// are recorded per-point via the excluded flag (zero price, inversion
/// failure, or std > 100 x mean).
std::vector<PricedPoint> price_row(const std::vector<double>& terminals,
                                   const std::vector<double>& strikes, double forward0,
                                   double maturity);

/// Exclusion threshold from the generation protocol: a point is dropped when
/// the payoff standard deviation exceeds 100 times the average payoff.
inline constexpr double kExclusionStdOverMean = 100.0;

/// Simulates and prices a full surface. Each maturity row runs an
/// independent simulation from 0 to T_row seeded by
/// mix_seed(cfg.seed, surface_id, row), so the result is independent of
/// worker count and scheduling.
IvSurface mc_surface(const SurfaceSpec& spec, const SimConfig& cfg, int workers = 1);

}  // namespace sabrnet
