#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sabrnet/errors.hpp"
#include "sabrnet/model_core.hpp"

namespace sabrnet {

/// Sampling ranges and grid shape for surface generation. Defaults are the
/// production hyperparameters for the beta=1 SABR experiment.
struct GenHyper {
  int m = 20;  ///< maturity rows
  int n = 20;  ///< strikes per row
  double alpha0_min = 0.01, alpha0_max = 0.5;
  double nu_min = 0.01, nu_max = 2.0;
  double rho_min = -0.99, rho_max = 0.1;
  double t_last = 2.0;
  double eta_min = 0.842, eta_max = 2.576;
  double dt = 0.002;

  // Literal-text switches for the two strike-grid conventions; both default
  // to the corrected reading (see surface_gen.hpp).
  bool literal_k1_exponent = false;
  bool literal_dk_divisor = false;

  void validate() const;
  bool operator==(const GenHyper&) const = default;
};

/// One sampled surface: SABR parameters plus its (m x n) maturity/strike grid.
struct SurfaceSpec {
  SabrParams params;  ///< raw nu (not maturity-scaled)
  std::vector<double> maturities;  ///< size m, equidistant
  std::vector<double> strikes;     ///< m x n, row-major, ascending within a row
  double eta_f = 0.0;
  std::uint64_t surface_id = 0;
  int m = 0, n = 0;

  double strike(int row, int col) const { return strikes[static_cast<std::size_t>(row) * n + col]; }
};

/// Simulated implied-volatility surface. iv is NaN and noise 0 where the
/// exclusion mask is set.
struct IvSurface {
  SurfaceSpec spec;
  std::vector<double> iv;     ///< m x n, row-major
  std::vector<double> noise;  ///< per-point noise scale beta_l proxies
  std::vector<std::uint8_t> mask;  ///< 1 = excluded
  std::uint64_t n_paths = 0;

  bool excluded(int row, int col) const {
    return mask[static_cast<std::size_t>(row) * spec.n + col] != 0;
  }
};

enum class DatasetRole : std::uint8_t { train = 0, validate = 1, test = 2, test_accurate = 3 };

std::string to_string(DatasetRole role);
DatasetRole role_from_string(const std::string& name);

struct Dataset {
  std::vector<IvSurface> surfaces;
  GenHyper hyper;
  std::uint64_t n_paths = 0;
  double dt = 0.002;
  std::uint64_t master_seed = 0;
  DatasetRole role = DatasetRole::train;

  std::size_t total_points() const;
  std::size_t excluded_points() const;
};

}  // namespace sabrnet
