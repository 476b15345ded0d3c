#pragma once

#include "sabrnet/errors.hpp"

// Analytic pricing primitives: undiscounted-forward Black-Scholes, implied
// volatility inversion, the beta=1 SABR asymptotic smile, and the OTM payoff
// convention. All functions are pure and reentrant.

namespace sabrnet {

/// Log-normal SABR state and parameters (beta fixed at 1).
struct SabrParams {
  double alpha0 = 0.2;  ///< initial volatility, > 0
  double nu = 0.5;      ///< vol-of-vol, >= 0
  double rho = -0.3;    ///< correlation, in (-1, 1)

  static constexpr double beta = 1.0;

  void validate() const;
};

struct OptionSpec {
  double strike = 1.0;    ///< K > 0
  double maturity = 1.0;  ///< T in years, > 0
  double forward0 = 1.0;  ///< f0; generated data always uses 1

  void validate() const;
};

/// Undiscounted forward Black-Scholes price. The SDE is driftless, so there
/// is no rate or dividend anywhere in this project.
double bs_price(double forward, double strike, double maturity, double vol, bool is_call);

/// Black-Scholes vega, d price / d vol (same undiscounted convention).
double bs_vega(double forward, double strike, double maturity, double vol);

/// Standard normal CDF.
double norm_cdf(double x);

struct ImpliedVolSolver {
  double vol_lo = 1e-6;
  double vol_hi = 10.0;
  int max_iter = 200;
  /// price tolerance: |BS(vol) - price| <= max(abs_tol, rel_tol * price)
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
};

/// Inverts the Black-Scholes formula with safeguarded 1-D root-finding on the
/// monotone map vol -> BS(vol) - price.
/// Throws NoSolutionError outside the no-arbitrage band and ConvergenceError
/// (carrying the best iterate) past the iteration cap.
double implied_vol(double price, double forward, double strike, double maturity, bool is_call,
                   const ImpliedVolSolver& solver = {});

/// Asymptotic implied-volatility approximation for the beta=1 SABR smile.
/// Continuous across K = f0 via a series branch for small z.
double hagan_iv(const SabrParams& params, double strike, double maturity, double forward);

/// OTM payoff convention: put when K < f0, call when K >= f0.
double otm_payoff(double terminal_forward, double strike, double forward0);

}  // namespace sabrnet
