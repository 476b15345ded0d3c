#include "sabrnet/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sabrnet {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void SabrParams::validate() const {
  if (!finite_positive(alpha0)) throw DomainError("SabrParams: alpha0 must be finite and > 0");
  if (!std::isfinite(nu) || nu < 0.0) throw DomainError("SabrParams: nu must be finite and >= 0");
  if (!std::isfinite(rho) || rho <= -1.0 || rho >= 1.0)
    throw DomainError("SabrParams: rho must lie in (-1, 1)");
}

void OptionSpec::validate() const {
  if (!finite_positive(strike)) throw DomainError("OptionSpec: strike must be finite and > 0");
  if (!finite_positive(maturity)) throw DomainError("OptionSpec: maturity must be finite and > 0");
  if (!finite_positive(forward0)) throw DomainError("OptionSpec: forward0 must be finite and > 0");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double bs_price(double forward, double strike, double maturity, double vol, bool is_call) {
  if (!finite_positive(forward) || !finite_positive(strike) || !finite_positive(maturity))
    throw DomainError("bs_price: forward, strike, maturity must be finite and > 0");
  if (!std::isfinite(vol) || vol < 0.0) throw DomainError("bs_price: vol must be finite and >= 0");

  const double stddev = vol * std::sqrt(maturity);
  if (stddev <= 0.0) {
    const double intrinsic = is_call ? forward - strike : strike - forward;
    return std::max(intrinsic, 0.0);
  }
  const double d1 = std::log(forward / strike) / stddev + 0.5 * stddev;
  const double d2 = d1 - stddev;
  if (is_call) return forward * norm_cdf(d1) - strike * norm_cdf(d2);
  return strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
}

double bs_vega(double forward, double strike, double maturity, double vol) {
  if (!finite_positive(forward) || !finite_positive(strike) || !finite_positive(maturity))
    throw DomainError("bs_vega: forward, strike, maturity must be finite and > 0");
  const double stddev = vol * std::sqrt(maturity);
  if (stddev <= 0.0) return 0.0;
  const double d1 = std::log(forward / strike) / stddev + 0.5 * stddev;
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return forward * inv_sqrt_2pi * std::exp(-0.5 * d1 * d1) * std::sqrt(maturity);
}

double implied_vol(double price, double forward, double strike, double maturity, bool is_call,
                   const ImpliedVolSolver& solver) {
  if (!std::isfinite(price)) throw DomainError("implied_vol: price must be finite");
  if (!finite_positive(forward) || !finite_positive(strike) || !finite_positive(maturity))
    throw DomainError("implied_vol: forward, strike, maturity must be finite and > 0");

  const double intrinsic = std::max(is_call ? forward - strike : strike - forward, 0.0);
  const double upper = is_call ? forward : strike;
  if (price < intrinsic)
    throw NoSolutionError("implied_vol: price below intrinsic value");
  if (price >= upper)
    throw NoSolutionError("implied_vol: price at or above no-arbitrage upper bound");

  const double tol = std::max(solver.abs_tol, solver.rel_tol * price);
  auto objective = [&](double vol) {
    return bs_price(forward, strike, maturity, vol, is_call) - price;
  };

  double lo = solver.vol_lo, hi = solver.vol_hi;
  double f_lo = objective(lo);
  if (f_lo >= 0.0) {
    // Root sits below the bracket floor; the floor is the answer iff it
    // already meets tolerance.
    if (std::abs(f_lo) <= tol) return lo;
    throw NoSolutionError("implied_vol: price unattainable above the bracket floor");
  }
  double f_hi = objective(hi);
  if (f_hi <= 0.0) {
    if (std::abs(f_hi) <= tol) return hi;
    throw NoSolutionError("implied_vol: price unattainable below the bracket cap");
  }

  // Bisection safeguarded secant. BS is monotone in vol, so the bracket
  // always contains the root.
  double best = lo, best_resid = std::abs(f_lo);
  if (std::abs(f_hi) < best_resid) {
    best = hi;
    best_resid = std::abs(f_hi);
  }
  for (int iter = 0; iter < solver.max_iter; ++iter) {
    double mid;
    const double denom = f_hi - f_lo;
    if (denom != 0.0) {
      mid = lo - f_lo * (hi - lo) / denom;  // secant step
      const double margin = 0.01 * (hi - lo);
      if (!(mid > lo + margin && mid < hi - margin)) mid = 0.5 * (lo + hi);
    } else {
      mid = 0.5 * (lo + hi);
    }
    const double f_mid = objective(mid);
    if (std::abs(f_mid) < best_resid) {
      best = mid;
      best_resid = std::abs(f_mid);
    }
    if (std::abs(f_mid) <= tol) return mid;
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo < 1e-14 * std::max(1.0, lo)) return best;
  }
  throw ConvergenceError("implied_vol: no convergence within iteration cap", best, best_resid);
}

double hagan_iv(const SabrParams& params, double strike, double maturity, double forward) {
  params.validate();
  if (!finite_positive(strike) || !finite_positive(maturity) || !finite_positive(forward))
    throw DomainError("hagan_iv: strike, maturity, forward must be finite and > 0");

  const double alpha0 = params.alpha0;
  const double nu = params.nu;
  const double rho = params.rho;
  const double z = (nu / alpha0) * std::log(forward / strike);

  double z_over_chi;
  if (std::abs(z) < 1e-6) {
    // chi(z) -> 0/0 at the money; second-order series of z/chi(z),
    // checked against the exact branch at |z| = 1e-4 in the tests.
    z_over_chi = 1.0 - 0.5 * rho * z + (2.0 - 3.0 * rho * rho) / 12.0 * z * z;
  } else {
    const double chi =
        std::log((std::sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho));
    z_over_chi = z / chi;
  }

  const double correction =
      1.0 + (0.25 * rho * alpha0 * nu + (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu) * maturity;
  return alpha0 * z_over_chi * correction;
}

double otm_payoff(double terminal_forward, double strike, double forward0) {
  if (!std::isfinite(terminal_forward) || !std::isfinite(forward0))
    throw DomainError("otm_payoff: inputs must be finite");
  if (!finite_positive(strike)) throw DomainError("otm_payoff: strike must be finite and > 0");
  if (strike >= forward0) return std::max(terminal_forward - strike, 0.0);
  return std::max(strike - terminal_forward, 0.0);
}

}  // namespace sabrnet
