// Batch CLI for the SABR surface pipeline: dataset generation, network
// training, two-precision error evaluation, synthetic estimator validation,
// Hagan-vs-MC comparison, and architecture sweeps.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sabrnet/error_stats.hpp"
#include "sabrnet/mc_engine.hpp"
#include "sabrnet/model_core.hpp"
#include "sabrnet/netfit.hpp"
#include "sabrnet/run_config.hpp"
#include "sabrnet/surface_gen.hpp"
#include "sabrnet/version.hpp"

namespace {

using namespace sabrnet;

// Desk runs use single precision for the network: the surrogate targets are
// MC vols with noise far above float resolution, and training is ~4x faster.
using NetScalar = float;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required = true) {
  cmd->add_option("--config", opts.config_path, "key=value configuration file");
  cmd->add_option("--seed", opts.seed, "override master_seed from the config");
  cmd->add_option("--workers", opts.workers, "override worker count from the config");
  auto* out = cmd->add_option("--out", opts.out, "output path (or prefix)");
  if (out_required) out->required();
}

RunConfig resolve(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.workers) cfg.workers = *opts.workers;
  cfg.validate();
  return cfg;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_generate(const CommonOpts& opts, const std::string& role_name, std::uint64_t count,
                 std::uint64_t n_paths, const std::string& csv_path) {
  const RunConfig cfg = resolve(opts);
  const DatasetRole role = role_from_string(role_name);
  if (count == 0) count = cfg.n_surfaces;
  if (n_paths == 0) {
    n_paths = cfg.n_paths;
    if (role == DatasetRole::test_accurate)
      n_paths = static_cast<std::uint64_t>(std::llround(cfg.accurate_factor *
                                                        static_cast<double>(cfg.n_paths)));
  }

  SimConfig sim;
  sim.n_paths = n_paths;
  sim.dt = cfg.hyper.dt;
  sim.seed = cfg.master_seed;
  sim.per_row_nu_tilde = cfg.per_row_nu_tilde;

  const auto start = std::chrono::steady_clock::now();
  GenStats stats;
  const Dataset ds = generate_dataset(cfg.hyper, count, sim, role, cfg.workers, &stats);
  const double wall = elapsed_s(start);
  write_dataset(ds, opts.out);
  if (!csv_path.empty()) write_dataset_csv(ds, csv_path);

  const double paths = static_cast<double>(count) * cfg.hyper.m * static_cast<double>(n_paths);
  char log[512];
  std::snprintf(log, sizeof(log),
                "role=%s surfaces=%llu n_paths=%llu points=%zu excluded=%zu "
                "exclusion_rate=%.5f wall_s=%.2f paths_per_s=%.3e\n",
                to_string(role).c_str(), static_cast<unsigned long long>(count),
                static_cast<unsigned long long>(n_paths), stats.total_points,
                stats.excluded_points, stats.exclusion_fraction(), wall, paths / wall);
  std::cout << log;
  std::ofstream log_file(opts.out + ".log");
  log_file << cfg.header_comment() << log;
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& train_override,
              const std::string& val_override) {
  const RunConfig cfg = resolve(opts);
  const Dataset train_ds =
      read_dataset(train_override.empty() ? cfg.train_path : train_override);
  const Dataset val_ds = read_dataset(val_override.empty() ? cfg.val_path : val_override);

  const auto start = std::chrono::steady_clock::now();
  const auto net = train(init_network<NetScalar>(cfg.net), train_ds, val_ds, cfg.train);
  save_network(net, opts.out, cfg.hash());
  write_history_csv(net.history, opts.out + ".history.csv", cfg.header_comment());

  const auto& last = net.history.back();
  double best_val = last.val_loss;
  for (const auto& rec : net.history) best_val = std::min(best_val, rec.val_loss);
  std::printf("epochs=%zu best_val_loss=%.6e final_train_loss=%.6e wall_s=%.1f\n",
              net.history.size(), best_val, last.train_loss, elapsed_s(start));
  return 0;
}

void write_points_csv(const Network<NetScalar>& net, const Dataset& test,
                      const std::vector<std::uint64_t>& ids, const std::string& path,
                      const std::string& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open points CSV for writing: " + path);
  out << header << "surface_id,k1,k2,T,K,iv_net,iv_mc,ci_lo,ci_hi\n";
  const double q99 = 2.576;  // two-sided 99% normal quantile
  char line[320];
  for (const auto& surface : test.surfaces) {
    if (std::find(ids.begin(), ids.end(), surface.spec.surface_id) == ids.end()) continue;
    const auto& spec = surface.spec;
    const auto pred = net.forward(surface_inputs<NetScalar>(spec));
    for (int row = 0; row < spec.m; ++row) {
      for (int col = 0; col < spec.n; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * spec.n + col;
        const double se =
            surface.noise[idx] / std::sqrt(static_cast<double>(surface.n_paths));
        std::snprintf(line, sizeof(line), "%llu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(spec.surface_id), row + 1, col + 1,
                      spec.maturities[static_cast<std::size_t>(row)], spec.strike(row, col),
                      static_cast<double>(pred(0, static_cast<long>(idx))), surface.iv[idx],
                      surface.iv[idx] - q99 * se, surface.iv[idx] + q99 * se);
        out << line;
      }
    }
  }
  if (!out) throw DataError("points CSV write failed: " + path);
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_override) {
  const RunConfig cfg = resolve(opts);
  const auto net = load_network<NetScalar>(
      checkpoint_override.empty() ? cfg.checkpoint_path : checkpoint_override);
  const Dataset test = read_dataset(cfg.test_path);
  const Dataset test_accurate = read_dataset(cfg.test_accurate_path);

  const ErrorReport report = evaluate_report(net, test, test_accurate);
  write_report_text(report, opts.out + ".txt", cfg.header_comment());
  write_report_csv(report, opts.out + ".csv", cfg.header_comment());

  std::vector<std::uint64_t> ids = cfg.fig_surfaces;
  if (ids.empty() && !test.surfaces.empty()) ids.push_back(test.surfaces[0].spec.surface_id);
  write_points_csv(net, test, ids, opts.out + "_points.csv", cfg.header_comment());

  std::printf("msfe_lo=%.6e msfe_hi=%.6e e_pred=%.6e (se %.1e) n_pred=%.6e\n", report.msfe_lo,
              report.msfe_hi, report.e_pred_hat, report.e_pred_jackknife_se, report.n_pred);
  return 0;
}

int cmd_subset(const CommonOpts& opts, const std::string& in_path, double fraction) {
  const RunConfig cfg = resolve(opts);
  if (fraction == 0.0) fraction = cfg.subset_fraction;
  const Dataset ds = read_dataset(in_path);
  const Dataset sub = subset(ds, fraction);
  write_dataset(sub, opts.out);
  std::printf("kept %zu of %zu surfaces (fraction %.17g)\n", sub.surfaces.size(),
              ds.surfaces.size(), fraction);
  return 0;
}

int cmd_synth_validate(const CommonOpts& opts) {
  const RunConfig cfg = resolve(opts);
  SyntheticSpec spec;
  spec.delta.assign(cfg.synth_length, cfg.synth_delta);
  spec.beta.assign(cfg.synth_length, cfg.synth_beta);
  spec.m1 = cfg.synth_m1;
  spec.m2 = cfg.synth_m2;
  spec.replications = cfg.synth_replications;
  spec.seed = cfg.master_seed;

  const SyntheticSummary summary = run_synthetic_validation(spec, cfg.workers);
  write_synthetic_csv(summary, opts.out, cfg.header_comment());
  std::printf("mean=%.6e true=%.6e bias_in_se=%.2f var=%.4e predicted_var=%.4e\n", summary.mean,
              summary.true_mspe, (summary.mean - summary.true_mspe) / summary.std_error_of_mean,
              summary.variance, summary.predicted_variance);
  return 0;
}

int cmd_hagan_compare(const CommonOpts& opts) {
  const RunConfig cfg = resolve(opts);

  SurfaceSpec spec;
  spec.params.alpha0 = cfg.hagan_alpha0;
  spec.params.nu = cfg.hagan_nu;
  spec.params.rho = cfg.hagan_rho;
  spec.params.validate();
  spec.maturities = cfg.hagan_maturities;
  std::sort(spec.maturities.begin(), spec.maturities.end());
  spec.m = static_cast<int>(spec.maturities.size());
  spec.n = cfg.hyper.n;
  spec.eta_f = 2.576;  // cover the 99% strike band
  spec.strikes.resize(static_cast<std::size_t>(spec.m) * spec.n);
  for (int row = 0; row < spec.m; ++row) {
    const double maturity = spec.maturities[static_cast<std::size_t>(row)];
    const double x = spec.params.nu * spec.params.nu;
    const double r = x < 1e-10 ? maturity * (1.0 + 0.5 * x) : std::expm1(x) * maturity / x;
    const double a = spec.params.alpha0;
    const double half_width = spec.eta_f * a * std::sqrt(r);
    const double k_lo = std::exp(-0.5 * a * a * r - half_width);
    const double k_hi = std::exp(-0.5 * a * a * r + half_width);
    const double dk = (k_hi - k_lo) / (spec.n - 1);
    for (int col = 0; col < spec.n; ++col)
      spec.strikes[static_cast<std::size_t>(row) * spec.n + col] = k_lo + col * dk;
  }

  SimConfig sim;
  sim.n_paths = cfg.hagan_n_paths;
  sim.dt = cfg.hyper.dt;
  sim.seed = cfg.master_seed;
  sim.per_row_nu_tilde = cfg.per_row_nu_tilde;
  const IvSurface surface = mc_surface(spec, sim, cfg.workers);

  std::ofstream out(opts.out);
  if (!out) throw DataError("cannot open CSV for writing: " + opts.out);
  out << cfg.header_comment() << "T,K,hagan_iv,mc_iv,ci_lo,ci_hi\n";
  const double q99 = 2.576;
  char line[256];
  for (int row = 0; row < spec.m; ++row) {
    const double maturity = spec.maturities[static_cast<std::size_t>(row)];
    SabrParams row_params = spec.params;
    if (cfg.per_row_nu_tilde) row_params.nu = spec.params.nu / std::sqrt(maturity);
    for (int col = 0; col < spec.n; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * spec.n + col;
      const double strike = spec.strike(row, col);
      const double hagan = hagan_iv(row_params, strike, maturity, 1.0);
      const double se = surface.noise[idx] / std::sqrt(static_cast<double>(sim.n_paths));
      std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", maturity, strike,
                    hagan, surface.iv[idx], surface.iv[idx] - q99 * se,
                    surface.iv[idx] + q99 * se);
      out << line;
    }
  }
  if (!out) throw DataError("CSV write failed: " + opts.out);
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  const RunConfig cfg = resolve(opts);
  const Dataset train_ds = read_dataset(cfg.train_path);
  const Dataset val_ds = read_dataset(cfg.val_path);
  const Dataset test = read_dataset(cfg.test_path);
  const Dataset test_accurate = read_dataset(cfg.test_accurate_path);

  std::ofstream out(opts.out);
  if (!out) throw DataError("cannot open sweep CSV for writing: " + opts.out);
  out << cfg.header_comment()
      << "hidden_layers,nodes_per_layer,parameters,best_val_loss,msfe_lo,msfe_hi,e_pred,n_pred\n";
  char line[320];
  for (const int layers : cfg.sweep_layers) {
    for (const int nodes : cfg.sweep_nodes) {
      NetConfig net_cfg = cfg.net;
      net_cfg.hidden_layers = layers;
      net_cfg.nodes_per_layer = nodes;
      const auto net = train(init_network<NetScalar>(net_cfg), train_ds, val_ds, cfg.train);
      double best_val = std::numeric_limits<double>::infinity();
      for (const auto& rec : net.history) best_val = std::min(best_val, rec.val_loss);
      const double lo = msfe(net, test);
      const double hi = msfe(net, test_accurate);
      const double e_pred = estimate_pred_error(hi, test_accurate.n_paths, lo, test.n_paths);
      const double n_eq = e_pred > 0.0 ? n_pred(lo, test.n_paths, e_pred)
                                       : std::numeric_limits<double>::quiet_NaN();
      std::snprintf(line, sizeof(line), "%d,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", layers,
                    nodes, net.parameter_count(), best_val, lo, hi, e_pred, n_eq);
      out << line;
      std::cout << line;
    }
  }
  if (!out) throw DataError("sweep CSV write failed: " + opts.out);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"SABR implied-volatility surface pipeline"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonOpts gen_opts;
  std::string gen_role = "train";
  std::uint64_t gen_count = 0, gen_paths = 0;
  std::string gen_csv;
  auto* gen = app.add_subcommand("generate", "simulate a dataset of noisy IV surfaces");
  add_common(gen, gen_opts);
  gen->add_option("--role", gen_role, "train | validate | test | test-accurate");
  gen->add_option("--count", gen_count, "surface count (default: config n_surfaces)");
  gen->add_option("--n-paths", gen_paths, "MC paths per row (default from config/role)");
  gen->add_option("--csv", gen_csv, "also write the CSV mirror to this path");

  CommonOpts train_opts;
  std::string train_in, val_in;
  auto* train_cmd = app.add_subcommand("train", "fit the network; writes checkpoint + history");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--train-data", train_in, "training dataset (default from config)");
  train_cmd->add_option("--val-data", val_in, "validation dataset (default from config)");

  CommonOpts eval_opts;
  std::string eval_checkpoint;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "two-precision error report + quintile tables + point CSV");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint (default from config)");

  CommonOpts subset_opts;
  std::string subset_in;
  double subset_fraction = 0.0;
  auto* subset_cmd = app.add_subcommand("subset", "deterministic 1/2^k prefix subset");
  add_common(subset_cmd, subset_opts);
  subset_cmd->add_option("--in", subset_in, "input dataset")->required();
  subset_cmd->add_option("--fraction", subset_fraction, "fraction (default from config)");

  CommonOpts synth_opts;
  auto* synth_cmd =
      app.add_subcommand("synth-validate", "replicate the estimator on synthetic ground truth");
  add_common(synth_cmd, synth_opts);

  CommonOpts hagan_opts;
  auto* hagan_cmd = app.add_subcommand("hagan-compare", "Hagan formula vs MC with 99% CIs");
  add_common(hagan_cmd, hagan_opts);

  CommonOpts sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "architecture grid over layers x nodes");
  add_common(sweep_cmd, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) return cmd_generate(gen_opts, gen_role, gen_count, gen_paths, gen_csv);
  if (train_cmd->parsed()) return cmd_train(train_opts, train_in, val_in);
  if (eval_cmd->parsed()) return cmd_evaluate(eval_opts, eval_checkpoint);
  if (subset_cmd->parsed()) return cmd_subset(subset_opts, subset_in, subset_fraction);
  if (synth_cmd->parsed()) return cmd_synth_validate(synth_opts);
  if (hagan_cmd->parsed()) return cmd_hagan_compare(hagan_opts);
  if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sabrnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sabrnet::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sabrnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const sabrnet::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const sabrnet::NoSolutionError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const sabrnet::ConvergenceError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
