#pragma once

// Shared test utilities: statistics helpers and synthetic dataset builders.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "sabrnet/netfit.hpp"
#include "sabrnet/rng.hpp"
#include "sabrnet/surface_gen.hpp"
#include "sabrnet/surface_types.hpp"

namespace testutil {

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_var(const std::vector<double>& xs) {
  const double mu = mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - mu) * (x - mu);
  return ss / (static_cast<double>(xs.size()) - 1.0);
}

/// Kolmogorov-Smirnov statistic against U[lo, hi].
inline double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

/// Least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Builds a clean synthetic dataset whose targets come from a frozen network
/// ("teacher"), bypassing Monte-Carlo entirely.
template <typename Scalar>
sabrnet::Dataset teacher_dataset(const sabrnet::Network<Scalar>& teacher,
                                 const sabrnet::GenHyper& hyper, std::size_t count,
                                 std::uint64_t seed, sabrnet::DatasetRole role) {
  sabrnet::Dataset ds;
  ds.hyper = hyper;
  ds.n_paths = 1;
  ds.dt = hyper.dt;
  ds.master_seed = seed;
  ds.role = role;
  sabrnet::rng::Xoshiro256pp rng(sabrnet::rng::mix_seed(seed, 0x7e57, static_cast<int>(role)));
  for (std::size_t i = 0; i < count; ++i) {
    sabrnet::IvSurface surface;
    surface.spec = sabrnet::sample_spec(hyper, rng, i);
    const auto pred = teacher.forward(sabrnet::surface_inputs<Scalar>(surface.spec));
    const std::size_t grid = static_cast<std::size_t>(hyper.m) * hyper.n;
    surface.iv.resize(grid);
    for (std::size_t p = 0; p < grid; ++p)
      surface.iv[p] = static_cast<double>(pred(0, static_cast<long>(p)));
    surface.noise.assign(grid, 0.0);
    surface.mask.assign(grid, 0);
    surface.n_paths = 1;
    ds.surfaces.push_back(std::move(surface));
  }
  return ds;
}

/// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sabrnet_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
