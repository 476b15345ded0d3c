#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sabrnet/netfit.hpp"
#include "sabrnet/surface_types.hpp"

// Prediction-error machinery: the two-precision unbiased MSPE estimator, its
// variance in the synthetic setting, the equivalent-path-count metric, and
// quintile-restricted reports. All estimators are pure over frozen inputs.

namespace sabrnet {

/// Ê_pred = (M1' E_fit(M1') - M2' E_fit(M2')) / (M1' - M2').
/// May be negative in finite samples; callers report it as-is.
double estimate_pred_error(double msfe1, std::uint64_t m1, double msfe2, std::uint64_t m2);

/// N_pred = M' (E_fit - E_pred) / E_pred, the number of MC paths whose
/// accuracy matches the network's prediction error.
double n_pred(double msfe, std::uint64_t m_prime, double e_pred);

enum class SurfaceInput : int { alpha0 = 0, nu = 1, rho = 2, strike = 3, maturity = 4 };

SurfaceInput surface_input_from_string(const std::string& name);
std::string to_string(SurfaceInput input);

struct QuintileRow {
  double q_lo = 0.0, q_hi = 0.0;  ///< bucket bounds on the selected input
  std::size_t count_lo = 0, count_hi = 0;
  double msfe_lo = 0.0, msfe_hi = 0.0;
  double e_pred = 0.0;
  double n_pred = 0.0;
  bool flagged = false;  ///< bucket smaller than 100 points in either set
};

struct ErrorReport {
  double msfe_lo = 0.0;  ///< E_fit on the M2'-path test set
  double msfe_hi = 0.0;  ///< E_fit on the M1'-path accurate test set
  std::uint64_t m1 = 0, m2 = 0;  ///< path counts, m1 > m2
  double e_pred_hat = 0.0;
  bool e_pred_negative = false;
  double n_pred = 0.0;
  /// Jackknife-over-surfaces std-error of Ê_pred (artifact diagnostic, not
  /// the theoretical variance form).
  double e_pred_jackknife_se = 0.0;
  std::vector<std::vector<QuintileRow>> quintiles;  ///< one table per SurfaceInput
};

/// Per-surface squared fitting errors: (sum of squares, point count).
struct SurfaceSqError {
  double sum_sq = 0.0;
  std::size_t count = 0;
};

template <typename Scalar>
std::vector<SurfaceSqError> surface_sq_errors(const Network<Scalar>& net, const Dataset& ds) {
  std::vector<SurfaceSqError> rows;
  rows.reserve(ds.surfaces.size());
  for (const auto& surface : ds.surfaces) {
    const auto pred = net.forward(surface_inputs<Scalar>(surface.spec));
    SurfaceSqError row;
    for (std::size_t i = 0; i < surface.iv.size(); ++i) {
      if (surface.mask[i] != 0) continue;
      const double diff = static_cast<double>(pred(0, static_cast<long>(i))) - surface.iv[i];
      row.sum_sq += diff * diff;
      ++row.count;
    }
    rows.push_back(row);
  }
  return rows;
}

/// Mean squared fitting error over the non-excluded points of a dataset.
template <typename Scalar>
double msfe(const Network<Scalar>& net, const Dataset& ds) {
  if (ds.surfaces.empty()) throw DomainError("msfe: dataset is empty");
  return detail::dataset_mse(net, ds);
}

/// Full report from the two-precision test pair, quintile tables included.
template <typename Scalar>
ErrorReport evaluate_report(const Network<Scalar>& net, const Dataset& test,
                            const Dataset& test_accurate);

/// Synthetic oracle harness: ground truth is a fixed perturbation grid
/// delta_l with known noise scales beta_l, so every estimator property can
/// be checked against closed forms.
struct SyntheticSpec {
  std::vector<double> delta;  ///< pointwise network-minus-truth
  std::vector<double> beta;   ///< pointwise noise scales, > 0
  std::uint64_t m1 = 10000, m2 = 1000;
  int replications = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exact Var[E_fit(M'; L')] when the prediction residual is the fixed grid
/// delta_l: (1/L'^2) sum_l (4 delta_l^2 beta_l^2 / M' + 2 beta_l^4 / M'^2).
double synthetic_fit_variance(const SyntheticSpec& spec, std::uint64_t m_prime);

struct SyntheticSummary {
  std::vector<double> e_pred_hats;  ///< one per replication
  double mean = 0.0;
  double variance = 0.0;
  double true_mspe = 0.0;       ///< <delta^2>
  double predicted_variance = 0.0;  ///< two-precision combination of closed forms
  double std_error_of_mean = 0.0;
};

/// Replicates the two-test-set estimator with known ground truth and
/// compares against unbiasedness and the variance closed form.
SyntheticSummary run_synthetic_validation(const SyntheticSpec& spec, int workers = 1);

/// Quintile-restricted (Ê_pred, N_pred) for one input, bucket bounds taken
/// from the test set's empirical quintiles.
template <typename Scalar>
std::vector<QuintileRow> quintile_report(const Network<Scalar>& net, const Dataset& test,
                                         const Dataset& test_accurate, SurfaceInput input);

struct DataSizePoint {
  double fraction = 1.0;
  std::size_t n_surfaces = 0;
  std::size_t n_points = 0;
  double msfe_lo = 0.0;
  double msfe_hi = 0.0;
  double e_pred = 0.0;
  double n_pred = 0.0;
};

/// Trains one network per nested training-set fraction and evaluates each
/// against the same two-precision test pair.
template <typename Scalar>
std::vector<DataSizePoint> data_size_study(const Dataset& train_ds, const Dataset& val_ds,
                                           const std::vector<double>& fractions,
                                           const NetConfig& net_cfg, const TrainConfig& train_cfg,
                                           const Dataset& test, const Dataset& test_accurate);

void write_report_text(const ErrorReport& report, const std::filesystem::path& path,
                       const std::string& header_comment = "");
void write_report_csv(const ErrorReport& report, const std::filesystem::path& path,
                      const std::string& header_comment = "");
void write_synthetic_csv(const SyntheticSummary& summary, const std::filesystem::path& path,
                         const std::string& header_comment = "");

}  // namespace sabrnet
