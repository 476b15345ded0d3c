#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sabrnet/mc_engine.hpp"
#include "sabrnet/rng.hpp"
#include "sabrnet/surface_types.hpp"

// Randomized surface-spec sampling, dataset assembly at a chosen simulation
// precision, and a bit-exact versioned persistence format.

namespace sabrnet {

/// Samples one surface spec: uniform (alpha0, nu, rho, eta_f), the maturity
/// ladder, and per-row strike grids.
///
/// The strike endpoints follow the lognormal-proxy formula
///   K_{1,n} = f0 * exp(-0.5 * alpha0^2 * r -/+ eta_f * alpha0 * sqrt(r)),
///   r = expm1(nu_tilde^2 T) / nu_tilde^2,
/// with nu_tilde = nu / sqrt(T_row). hyper.literal_k1_exponent restores the
/// asymmetric alpha0/nu_tilde^2 first term for K_1;
/// hyper.literal_dk_divisor switches the interior spacing from
/// (K_n - K_1)/(n-1) to the overshooting (K_n - K_1)/n.
SurfaceSpec sample_spec(const GenHyper& hyper, rng::Xoshiro256pp& rng,
                        std::uint64_t surface_id = 0);

struct GenStats {
  std::size_t total_points = 0;
  std::size_t excluded_points = 0;
  double exclusion_fraction() const {
    return total_points == 0 ? 0.0
                             : static_cast<double>(excluded_points) / total_points;
  }
};

/// Samples `count` specs (sequentially, from a spec stream derived from
/// cfg.seed) and prices each with mc_engine::mc_surface. Simulation fans out
/// over (surface, row) tasks; the result is worker-count independent.
Dataset generate_dataset(const GenHyper& hyper, std::uint64_t count, const SimConfig& cfg,
                         DatasetRole role, int workers = 1, GenStats* stats = nullptr);

/// Versioned little-endian binary format; read(write(ds)) is bit-exact.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Deterministic prefix-by-id subset; fraction must be 1/2^k, so
/// subset(1/4) is contained in subset(1/2).
Dataset subset(const Dataset& ds, double fraction);

/// CSV mirror, one row per (surface, k1, k2):
/// surface_id,k1,k2,T,K,alpha0,nu,rho,iv,noise,excluded
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
/// Rebuilds surface grids from the CSV mirror (spec metadata that the CSV
/// does not carry — hyper, seeds, eta_f — takes default values).
Dataset read_dataset_csv(const std::filesystem::path& path);

inline constexpr std::uint16_t kDatasetFormatVersion = 1;

}  // namespace sabrnet
