#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sabrnet/errors.hpp"
#include "sabrnet/netfit.hpp"
#include "sabrnet/surface_types.hpp"

// Flat key=value run configuration. Unknown keys are rejected so typos fail
// loudly; every output embeds the hash of the resolved (post-override)
// configuration together with the tool version.

namespace sabrnet {

struct RunConfig {
  // Generation.
  GenHyper hyper;
  std::size_t n_surfaces = 4000;
  std::uint64_t n_paths = 20000;
  double accurate_factor = 25.0;  ///< accurate test set uses factor * n_paths
  bool per_row_nu_tilde = true;
  std::uint64_t master_seed = 0;
  int workers = 1;

  // Network / training.
  NetConfig net;
  TrainConfig train;

  // Dataset / artifact paths.
  std::string train_path = "train.sabrds";
  std::string val_path = "val.sabrds";
  std::string test_path = "test.sabrds";
  std::string test_accurate_path = "test_accurate.sabrds";
  std::string checkpoint_path = "net.sabrnn";

  // Subset / data-size study.
  double subset_fraction = 0.5;

  // Synthetic validation harness.
  double synth_delta = 0.01;
  double synth_beta = 0.1;
  std::size_t synth_length = 10000;
  std::uint64_t synth_m1 = 10000;
  std::uint64_t synth_m2 = 1000;
  int synth_replications = 2000;

  // Hagan comparison.
  double hagan_alpha0 = 0.3;
  double hagan_nu = 0.4;
  double hagan_rho = -0.5;
  std::vector<double> hagan_maturities = {0.5, 1.0, 1.5};
  std::uint64_t hagan_n_paths = 500000;

  // Architecture sweep grid.
  std::vector<int> sweep_layers = {1, 2, 4};
  std::vector<int> sweep_nodes = {64, 256};

  // Per-point CSV emission during evaluate: surface ids, empty = first one.
  std::vector<std::uint64_t> fig_surfaces;

  /// Applies one `key=value` assignment; throws ConfigError on unknown keys
  /// or unparseable values.
  void set(const std::string& key, const std::string& value);

  /// Canonical text form (sorted key=value lines) of the resolved config.
  std::string resolved_text() const;

  /// FNV-1a hash of resolved_text().
  std::uint64_t hash() const;

  /// "# config_hash=... / # tool_version=... / # key=value..." block for
  /// embedding into text outputs.
  std::string header_comment() const;

  void validate() const;
};

/// Parses a flat key=value file ('#' comments, blank lines allowed).
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(const std::string& text);

}  // namespace sabrnet
