#include "sabrnet/mc_engine.hpp"

#include <cmath>
#include <limits>

#include "sabrnet/parallel.hpp"
#include "sabrnet/rng.hpp"

namespace sabrnet {

void SimConfig::validate() const {
  if (n_paths < 2) throw DomainError("SimConfig: n_paths must be >= 2");
  if (antithetic && n_paths % 2 != 0)
    throw DomainError("SimConfig: n_paths must be even with antithetic variates");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("SimConfig: dt must be finite and > 0");
}

std::vector<double> simulate_terminal(const SabrParams& params, double maturity,
                                      const SimConfig& cfg) {
  params.validate();
  cfg.validate();
  if (!(maturity >= cfg.dt))
    throw DomainError("simulate_terminal: maturity must be >= dt");

  const auto n_steps = static_cast<std::uint64_t>(std::ceil(maturity / cfg.dt - 1e-12));
  const double h = maturity / static_cast<double>(n_steps);
  const double sqrt_h = std::sqrt(h);
  const double nu = params.nu;
  const double rho = params.rho;
  const double orth = std::sqrt(1.0 - rho * rho);

  std::vector<double> terminals(cfg.n_paths);
  rng::NormalSampler normal(cfg.seed);

  if (cfg.antithetic) {
    const std::uint64_t pairs = cfg.n_paths / 2;
    for (std::uint64_t p = 0; p < pairs; ++p) {
      double f_pos = 1.0, a_pos = params.alpha0;
      double f_neg = 1.0, a_neg = params.alpha0;
      for (std::uint64_t s = 0; s < n_steps; ++s) {
        const double e = normal();
        const double e_orth = normal();
        const double w = (rho * e + orth * e_orth) * sqrt_h;
        f_pos += a_pos * f_pos * e * sqrt_h;
        a_pos += nu * a_pos * w;
        f_neg -= a_neg * f_neg * e * sqrt_h;
        a_neg -= nu * a_neg * w;
        if (f_pos < 0.0) f_pos = 0.0;
        if (a_pos < 0.0) a_pos = 0.0;
        if (f_neg < 0.0) f_neg = 0.0;
        if (a_neg < 0.0) a_neg = 0.0;
      }
      terminals[2 * p] = f_pos;
      terminals[2 * p + 1] = f_neg;
    }
  } else {
    for (std::uint64_t p = 0; p < cfg.n_paths; ++p) {
      double f = 1.0, a = params.alpha0;
      for (std::uint64_t s = 0; s < n_steps; ++s) {
        const double e = normal();
        const double e_orth = normal();
        f += a * f * e * sqrt_h;
        a += nu * a * (rho * e + orth * e_orth) * sqrt_h;
        if (f < 0.0) f = 0.0;
        if (a < 0.0) a = 0.0;
      }
      terminals[p] = f;
    }
  }
  return terminals;
}

std::vector<PricedPoint> price_row(const std::vector<double>& terminals,
                                   const std::vector<double>& strikes, double forward0,
                                   double maturity) {
  if (terminals.empty()) throw DomainError("price_row: terminals must be nonempty");
  for (std::size_t i = 1; i < strikes.size(); ++i)
    if (!(strikes[i] > strikes[i - 1]))
      throw DomainError("price_row: strikes must be sorted ascending");

  const double n = static_cast<double>(terminals.size());
  std::vector<PricedPoint> points(strikes.size());
  for (std::size_t k = 0; k < strikes.size(); ++k) {
    const double strike = strikes[k];
    const bool is_call = strike >= forward0;
    double sum = 0.0, sum_sq = 0.0;
    if (is_call) {
      for (const double f_t : terminals) {
        const double q = f_t > strike ? f_t - strike : 0.0;
        sum += q;
        sum_sq += q * q;
      }
    } else {
      for (const double f_t : terminals) {
        const double q = f_t < strike ? strike - f_t : 0.0;
        sum += q;
        sum_sq += q * q;
      }
    }
    PricedPoint& pt = points[k];
    pt.price_mean = sum / n;
    const double var = n > 1.0 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
    pt.price_std = std::sqrt(var);
    pt.iv = std::numeric_limits<double>::quiet_NaN();
    pt.excluded = true;

    if (pt.price_mean <= 0.0 || pt.price_std > kExclusionStdOverMean * pt.price_mean) continue;
    try {
      const double iv = implied_vol(pt.price_mean, forward0, strike, maturity, is_call);
      const double vega = bs_vega(forward0, strike, maturity, iv);
      const double beta = pt.price_std / vega;
      if (!std::isfinite(beta)) continue;
      pt.iv = iv;
      pt.beta = beta;  // sqrt(N) x std-error of the inverted vol
      pt.excluded = false;
    } catch (const NoSolutionError&) {
    } catch (const ConvergenceError&) {
    }
  }
  return points;
}

IvSurface mc_surface(const SurfaceSpec& spec, const SimConfig& cfg, int workers) {
  spec.params.validate();
  cfg.validate();
  if (spec.m <= 0 || spec.n <= 0) throw DomainError("mc_surface: empty surface spec");

  IvSurface surface;
  surface.spec = spec;
  surface.n_paths = cfg.n_paths;
  const std::size_t total = static_cast<std::size_t>(spec.m) * spec.n;
  surface.iv.assign(total, std::numeric_limits<double>::quiet_NaN());
  surface.noise.assign(total, 0.0);
  surface.mask.assign(total, 1);

  const double t_ref = spec.maturities.back();
  parallel_for(static_cast<std::size_t>(spec.m), workers, [&](std::size_t row) {
    const double maturity = spec.maturities[row];
    SabrParams row_params = spec.params;
    const double t_scale = cfg.per_row_nu_tilde ? maturity : t_ref;
    row_params.nu = spec.params.nu / std::sqrt(t_scale);

    SimConfig row_cfg = cfg;
    row_cfg.seed = rng::mix_seed(cfg.seed, spec.surface_id, row);
    const auto terminals = simulate_terminal(row_params, maturity, row_cfg);

    const std::vector<double> row_strikes(spec.strikes.begin() + row * spec.n,
                                          spec.strikes.begin() + (row + 1) * spec.n);
    const auto points = price_row(terminals, row_strikes, 1.0, maturity);

    for (int col = 0; col < spec.n; ++col) {
      const PricedPoint& pt = points[static_cast<std::size_t>(col)];
      const std::size_t idx = row * spec.n + col;
      surface.iv[idx] = pt.iv;
      surface.noise[idx] = pt.beta;
      surface.mask[idx] = pt.excluded ? 1 : 0;
    }
  });
  return surface;
}

}  // namespace sabrnet
