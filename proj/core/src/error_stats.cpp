#include "sabrnet/error_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "sabrnet/parallel.hpp"
#include "sabrnet/rng.hpp"
#include "sabrnet/surface_gen.hpp"

namespace sabrnet {

double estimate_pred_error(double msfe1, std::uint64_t m1, double msfe2, std::uint64_t m2) {
  if (m1 == m2) throw DomainError("estimate_pred_error: path counts must differ");
  if (msfe1 < 0.0 || msfe2 < 0.0) throw DomainError("estimate_pred_error: MSFE must be >= 0");
  const double m1d = static_cast<double>(m1);
  const double m2d = static_cast<double>(m2);
  return (m1d * msfe1 - m2d * msfe2) / (m1d - m2d);
}

double n_pred(double msfe, std::uint64_t m_prime, double e_pred) {
  if (!(e_pred > 0.0)) throw DomainError("n_pred: e_pred must be > 0");
  return static_cast<double>(m_prime) * (msfe - e_pred) / e_pred;
}

SurfaceInput surface_input_from_string(const std::string& name) {
  if (name == "alpha0") return SurfaceInput::alpha0;
  if (name == "nu") return SurfaceInput::nu;
  if (name == "rho") return SurfaceInput::rho;
  if (name == "K") return SurfaceInput::strike;
  if (name == "T") return SurfaceInput::maturity;
  throw DomainError("unknown surface input: " + name);
}

std::string to_string(SurfaceInput input) {
  switch (input) {
    case SurfaceInput::alpha0: return "alpha0";
    case SurfaceInput::nu: return "nu";
    case SurfaceInput::rho: return "rho";
    case SurfaceInput::strike: return "K";
    case SurfaceInput::maturity: return "T";
  }
  throw DomainError("unknown surface input");
}

namespace {

struct Totals {
  double sum_sq = 0.0;
  std::size_t count = 0;
  double mse() const {
    if (count == 0) throw DomainError("no usable points in dataset");
    return sum_sq / static_cast<double>(count);
  }
};

Totals totals_of(const std::vector<SurfaceSqError>& rows) {
  Totals t;
  for (const auto& row : rows) {
    t.sum_sq += row.sum_sq;
    t.count += row.count;
  }
  return t;
}

/// Delete-one-surface jackknife variance of the masked MSE.
double jackknife_variance(const std::vector<SurfaceSqError>& rows, const Totals& totals) {
  std::vector<double> leave_out;
  leave_out.reserve(rows.size());
  for (const auto& row : rows) {
    const std::size_t count = totals.count - row.count;
    if (count == 0) continue;
    leave_out.push_back((totals.sum_sq - row.sum_sq) / static_cast<double>(count));
  }
  const std::size_t n = leave_out.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(leave_out.begin(), leave_out.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (const double v : leave_out) ss += (v - mean) * (v - mean);
  return (static_cast<double>(n) - 1.0) / static_cast<double>(n) * ss;
}

struct PointRecord {
  double value = 0.0;   ///< selected input at this grid point
  double sq_err = 0.0;
};

template <typename Scalar>
std::vector<PointRecord> point_records(const Network<Scalar>& net, const Dataset& ds,
                                       SurfaceInput input) {
  std::vector<PointRecord> records;
  for (const auto& surface : ds.surfaces) {
    const auto& spec = surface.spec;
    const auto pred = net.forward(surface_inputs<Scalar>(spec));
    for (int row = 0; row < spec.m; ++row) {
      for (int col = 0; col < spec.n; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * spec.n + col;
        if (surface.mask[idx] != 0) continue;
        PointRecord rec;
        switch (input) {
          case SurfaceInput::alpha0: rec.value = spec.params.alpha0; break;
          case SurfaceInput::nu: rec.value = spec.params.nu; break;
          case SurfaceInput::rho: rec.value = spec.params.rho; break;
          case SurfaceInput::strike: rec.value = spec.strike(row, col); break;
          case SurfaceInput::maturity:
            rec.value = spec.maturities[static_cast<std::size_t>(row)];
            break;
        }
        const double diff =
            static_cast<double>(pred(0, static_cast<long>(idx))) - surface.iv[idx];
        rec.sq_err = diff * diff;
        records.push_back(rec);
      }
    }
  }
  return records;
}

int bucket_of(double value, const std::array<double, 6>& edges) {
  for (int k = 1; k < 5; ++k)
    if (value < edges[static_cast<std::size_t>(k)]) return k - 1;
  return 4;
}

}  // namespace

template <typename Scalar>
std::vector<QuintileRow> quintile_report(const Network<Scalar>& net, const Dataset& test,
                                         const Dataset& test_accurate, SurfaceInput input) {
  if (test.surfaces.empty() || test_accurate.surfaces.empty())
    throw DomainError("quintile_report: datasets must be nonempty");
  const std::uint64_t m1 = test_accurate.n_paths;
  const std::uint64_t m2 = test.n_paths;

  auto lo = point_records(net, test, input);
  const auto hi = point_records(net, test_accurate, input);
  if (lo.empty() || hi.empty()) throw DomainError("quintile_report: no usable points");

  // Empirical quintile edges from the test data, not the generator's
  // nominal ranges, so the report is valid on any dataset.
  std::vector<double> sorted(lo.size());
  std::transform(lo.begin(), lo.end(), sorted.begin(),
                 [](const PointRecord& rec) { return rec.value; });
  std::sort(sorted.begin(), sorted.end());
  std::array<double, 6> edges{};
  edges[0] = sorted.front();
  edges[5] = sorted.back();
  for (int k = 1; k < 5; ++k)
    edges[static_cast<std::size_t>(k)] =
        sorted[std::min(sorted.size() - 1, sorted.size() * static_cast<std::size_t>(k) / 5)];

  std::array<Totals, 5> lo_buckets{}, hi_buckets{};
  for (const auto& rec : lo) {
    auto& t = lo_buckets[static_cast<std::size_t>(bucket_of(rec.value, edges))];
    t.sum_sq += rec.sq_err;
    ++t.count;
  }
  for (const auto& rec : hi) {
    auto& t = hi_buckets[static_cast<std::size_t>(bucket_of(rec.value, edges))];
    t.sum_sq += rec.sq_err;
    ++t.count;
  }

  std::vector<QuintileRow> rows;
  Totals lo_all, hi_all;
  for (int k = 0; k < 5; ++k) {
    const auto& lo_t = lo_buckets[static_cast<std::size_t>(k)];
    const auto& hi_t = hi_buckets[static_cast<std::size_t>(k)];
    lo_all.sum_sq += lo_t.sum_sq;
    lo_all.count += lo_t.count;
    hi_all.sum_sq += hi_t.sum_sq;
    hi_all.count += hi_t.count;
    QuintileRow row;
    row.q_lo = edges[static_cast<std::size_t>(k)];
    row.q_hi = edges[static_cast<std::size_t>(k) + 1];
    row.count_lo = lo_t.count;
    row.count_hi = hi_t.count;
    row.flagged = lo_t.count < 100 || hi_t.count < 100;
    if (lo_t.count > 0 && hi_t.count > 0) {
      row.msfe_lo = lo_t.mse();
      row.msfe_hi = hi_t.mse();
      row.e_pred = estimate_pred_error(row.msfe_hi, m1, row.msfe_lo, m2);
      row.n_pred = row.e_pred > 0.0 ? n_pred(row.msfe_lo, m2, row.e_pred)
                                    : std::numeric_limits<double>::quiet_NaN();
    } else {
      row.flagged = true;
    }
    rows.push_back(row);
  }

  // Final row is the unrestricted [Q0, Q5] range. Its MSFEs are recomputed
  // through the same per-surface accumulation as the headline report so the
  // row reproduces the unrestricted estimates bit-for-bit.
  const Totals lo_exact = totals_of(surface_sq_errors(net, test));
  const Totals hi_exact = totals_of(surface_sq_errors(net, test_accurate));
  QuintileRow full;
  full.q_lo = edges[0];
  full.q_hi = edges[5];
  full.count_lo = lo_all.count;
  full.count_hi = hi_all.count;
  full.msfe_lo = lo_exact.mse();
  full.msfe_hi = hi_exact.mse();
  full.e_pred = estimate_pred_error(full.msfe_hi, m1, full.msfe_lo, m2);
  full.n_pred = full.e_pred > 0.0 ? n_pred(full.msfe_lo, m2, full.e_pred)
                                  : std::numeric_limits<double>::quiet_NaN();
  rows.push_back(full);
  return rows;
}

template <typename Scalar>
ErrorReport evaluate_report(const Network<Scalar>& net, const Dataset& test,
                            const Dataset& test_accurate) {
  if (test.surfaces.empty() || test_accurate.surfaces.empty())
    throw DomainError("evaluate_report: datasets must be nonempty");
  if (test_accurate.n_paths <= test.n_paths)
    throw DataError("evaluate_report: accurate test set must use more paths than the test set");

  ErrorReport report;
  report.m1 = test_accurate.n_paths;
  report.m2 = test.n_paths;

  const auto lo_rows = surface_sq_errors(net, test);
  const auto hi_rows = surface_sq_errors(net, test_accurate);
  const Totals lo = totals_of(lo_rows);
  const Totals hi = totals_of(hi_rows);
  report.msfe_lo = lo.mse();
  report.msfe_hi = hi.mse();
  report.e_pred_hat = estimate_pred_error(report.msfe_hi, report.m1, report.msfe_lo, report.m2);
  report.e_pred_negative = report.e_pred_hat < 0.0;
  report.n_pred = report.e_pred_hat > 0.0
                      ? n_pred(report.msfe_lo, report.m2, report.e_pred_hat)
                      : std::numeric_limits<double>::quiet_NaN();

  const double m1d = static_cast<double>(report.m1);
  const double m2d = static_cast<double>(report.m2);
  const double a = m1d / (m1d - m2d);
  const double b = m2d / (m1d - m2d);
  report.e_pred_jackknife_se = std::sqrt(a * a * jackknife_variance(hi_rows, hi) +
                                         b * b * jackknife_variance(lo_rows, lo));

  for (const auto input : {SurfaceInput::alpha0, SurfaceInput::nu, SurfaceInput::rho,
                           SurfaceInput::strike, SurfaceInput::maturity})
    report.quintiles.push_back(quintile_report(net, test, test_accurate, input));
  return report;
}

void SyntheticSpec::validate() const {
  if (delta.empty() || delta.size() != beta.size())
    throw DomainError("SyntheticSpec: delta and beta must be nonempty and equal-sized");
  for (const double b : beta)
    if (!(b >= 0.0)) throw DomainError("SyntheticSpec: beta must be >= 0");
  if (m1 == m2) throw DomainError("SyntheticSpec: m1 and m2 must differ");
  if (replications < 2) throw DomainError("SyntheticSpec: need at least 2 replications");
}

double synthetic_fit_variance(const SyntheticSpec& spec, std::uint64_t m_prime) {
  spec.validate();
  const double m = static_cast<double>(m_prime);
  const double length = static_cast<double>(spec.delta.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < spec.delta.size(); ++l) {
    const double d2 = spec.delta[l] * spec.delta[l];
    const double b2 = spec.beta[l] * spec.beta[l];
    sum += 4.0 * d2 * b2 / m + 2.0 * b2 * b2 / (m * m);
  }
  return sum / (length * length);
}

SyntheticSummary run_synthetic_validation(const SyntheticSpec& spec, int workers) {
  spec.validate();
  const std::size_t length = spec.delta.size();
  const double m1 = static_cast<double>(spec.m1);
  const double m2 = static_cast<double>(spec.m2);

  SyntheticSummary summary;
  summary.e_pred_hats.resize(static_cast<std::size_t>(spec.replications));
  parallel_for(summary.e_pred_hats.size(), workers, [&](std::size_t rep) {
    rng::NormalSampler normal(rng::mix_seed(spec.seed, rep, 0x53594e54ULL /* "SYNT" */));
    double fit1 = 0.0, fit2 = 0.0;
    const double scale1 = 1.0 / std::sqrt(m1);
    const double scale2 = 1.0 / std::sqrt(m2);
    for (std::size_t l = 0; l < length; ++l) {
      const double err1 = spec.delta[l] - spec.beta[l] * scale1 * normal();
      fit1 += err1 * err1;
    }
    for (std::size_t l = 0; l < length; ++l) {
      const double err2 = spec.delta[l] - spec.beta[l] * scale2 * normal();
      fit2 += err2 * err2;
    }
    fit1 /= static_cast<double>(length);
    fit2 /= static_cast<double>(length);
    summary.e_pred_hats[rep] = estimate_pred_error(fit1, spec.m1, fit2, spec.m2);
  });

  const double reps = static_cast<double>(spec.replications);
  summary.mean = std::accumulate(summary.e_pred_hats.begin(), summary.e_pred_hats.end(), 0.0) /
                 reps;
  double ss = 0.0;
  for (const double v : summary.e_pred_hats) ss += (v - summary.mean) * (v - summary.mean);
  summary.variance = ss / (reps - 1.0);
  summary.std_error_of_mean = std::sqrt(summary.variance / reps);
  summary.true_mspe = 0.0;
  for (const double d : spec.delta) summary.true_mspe += d * d;
  summary.true_mspe /= static_cast<double>(length);

  const double a = m1 / (m1 - m2);
  const double b = m2 / (m1 - m2);
  summary.predicted_variance = a * a * synthetic_fit_variance(spec, spec.m1) +
                               b * b * synthetic_fit_variance(spec, spec.m2);
  return summary;
}

template <typename Scalar>
std::vector<DataSizePoint> data_size_study(const Dataset& train_ds, const Dataset& val_ds,
                                           const std::vector<double>& fractions,
                                           const NetConfig& net_cfg, const TrainConfig& train_cfg,
                                           const Dataset& test, const Dataset& test_accurate) {
  if (fractions.empty()) throw DomainError("data_size_study: need at least one fraction");
  std::vector<DataSizePoint> curve;
  for (const double fraction : fractions) {
    const Dataset sub = subset(train_ds, fraction);
    const auto net = train(init_network<Scalar>(net_cfg), sub, val_ds, train_cfg);
    DataSizePoint point;
    point.fraction = fraction;
    point.n_surfaces = sub.surfaces.size();
    point.n_points = sub.total_points() - sub.excluded_points();
    point.msfe_lo = msfe(net, test);
    point.msfe_hi = msfe(net, test_accurate);
    point.e_pred = estimate_pred_error(point.msfe_hi, test_accurate.n_paths, point.msfe_lo,
                                       test.n_paths);
    point.n_pred = point.e_pred > 0.0 ? n_pred(point.msfe_lo, test.n_paths, point.e_pred)
                                      : std::numeric_limits<double>::quiet_NaN();
    curve.push_back(point);
  }
  return curve;
}

void write_report_text(const ErrorReport& report, const std::filesystem::path& path,
                       const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open report for writing: " + path.string());
  if (!header_comment.empty()) out << header_comment;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "MSFE (test, M'=%llu paths):          %.6e\n"
                "MSFE (accurate test, M'=%llu paths): %.6e\n"
                "E_pred_hat:                          %.6e%s\n"
                "  jackknife std-error:               %.6e\n"
                "N_pred:                              %.6e\n",
                static_cast<unsigned long long>(report.m2), report.msfe_lo,
                static_cast<unsigned long long>(report.m1), report.msfe_hi, report.e_pred_hat,
                report.e_pred_negative ? "  (negative in finite sample)" : "",
                report.e_pred_jackknife_se, report.n_pred);
  out << buf;
  static const char* kInputs[] = {"alpha0", "nu", "rho", "K", "T"};
  for (std::size_t i = 0; i < report.quintiles.size(); ++i) {
    out << "\nquintiles of " << kInputs[i] << ":\n";
    for (const auto& row : report.quintiles[i]) {
      std::snprintf(buf, sizeof(buf),
                    "  [%.4g, %.4g]  E_pred=%.3e  N_pred=%.3e  (n_lo=%zu n_hi=%zu)%s\n", row.q_lo,
                    row.q_hi, row.e_pred, row.n_pred, row.count_lo, row.count_hi,
                    row.flagged ? "  [small bucket]" : "");
      out << buf;
    }
  }
  if (!out) throw DataError("report write failed: " + path.string());
}

void write_report_csv(const ErrorReport& report, const std::filesystem::path& path,
                      const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open report CSV for writing: " + path.string());
  if (!header_comment.empty()) out << header_comment;
  out << "input,q_lo,q_hi,count_lo,count_hi,msfe_lo,msfe_hi,e_pred,n_pred,flagged\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "all,,,%zu,%zu,%.17g,%.17g,%.17g,%.17g,0\n",
                report.quintiles.empty() ? 0 : report.quintiles[0].back().count_lo,
                report.quintiles.empty() ? 0 : report.quintiles[0].back().count_hi, report.msfe_lo,
                report.msfe_hi, report.e_pred_hat, report.n_pred);
  out << buf;
  static const char* kInputs[] = {"alpha0", "nu", "rho", "K", "T"};
  for (std::size_t i = 0; i < report.quintiles.size(); ++i) {
    for (const auto& row : report.quintiles[i]) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%d\n",
                    kInputs[i], row.q_lo, row.q_hi, row.count_lo, row.count_hi, row.msfe_lo,
                    row.msfe_hi, row.e_pred, row.n_pred, row.flagged ? 1 : 0);
      out << buf;
    }
  }
  if (!out) throw DataError("report CSV write failed: " + path.string());
}

void write_synthetic_csv(const SyntheticSummary& summary, const std::filesystem::path& path,
                         const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open synthetic CSV for writing: " + path.string());
  if (!header_comment.empty()) out << header_comment;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "# mean=%.17g variance=%.17g true_mspe=%.17g predicted_variance=%.17g\n",
                summary.mean, summary.variance, summary.true_mspe, summary.predicted_variance);
  out << buf << "replication,e_pred_hat\n";
  for (std::size_t r = 0; r < summary.e_pred_hats.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", r, summary.e_pred_hats[r]);
    out << buf;
  }
  if (!out) throw DataError("synthetic CSV write failed: " + path.string());
}

template std::vector<QuintileRow> quintile_report<float>(const Network<float>&, const Dataset&,
                                                         const Dataset&, SurfaceInput);
template std::vector<QuintileRow> quintile_report<double>(const Network<double>&, const Dataset&,
                                                          const Dataset&, SurfaceInput);
template ErrorReport evaluate_report<float>(const Network<float>&, const Dataset&, const Dataset&);
template ErrorReport evaluate_report<double>(const Network<double>&, const Dataset&,
                                             const Dataset&);
template std::vector<DataSizePoint> data_size_study<float>(const Dataset&, const Dataset&,
                                                           const std::vector<double>&,
                                                           const NetConfig&, const TrainConfig&,
                                                           const Dataset&, const Dataset&);
template std::vector<DataSizePoint> data_size_study<double>(const Dataset&, const Dataset&,
                                                            const std::vector<double>&,
                                                            const NetConfig&, const TrainConfig&,
                                                            const Dataset&, const Dataset&);

}  // namespace sabrnet
