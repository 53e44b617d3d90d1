#pragma once

// Closed-form Black-Scholes analytics for European calls.
//
// Conventions: times are in years, vols and rates per year. The default day
// count is 365 calendar days per year; callers that build maturities from day
// counts should go through `years_from_days`.

namespace hedgekit {

inline constexpr double kDefaultDaysPerYear = 365.0;

inline double years_from_days(double days, double days_per_year = kDefaultDaysPerYear) {
  return days / days_per_year;
}

struct OptionSpec {
  double strike = 100.0;
  double time_to_maturity = 0.0;  // years
  double rate = 0.0;
  bool is_call = true;

  /// Throws DomainError when strike <= 0, maturity < 0 or the option is not a call.
  void validate() const;
};

struct Greeks {
  double delta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;  // dC/dt per year (negative for a call at r = 0)
  double vega = 0.0;   // dC/dsigma
};

double std_normal_pdf(double x);

/// Standard normal CDF. Throws DomainError on non-finite input.
double std_normal_cdf(double x);

/// Black-Scholes call value. Expiry (tau = 0) and zero vol return the
/// intrinsic value max(S - K e^{-r tau}, 0) without evaluating d1/d2.
double bs_call_price(double spot, const OptionSpec& spec, double vol);

/// Phi(d1). At expiry this is the step 1{S > K} with 0.5 at the strike.
double bs_delta(double spot, const OptionSpec& spec, double vol);

/// All first-order sensitivities plus gamma. Requires tau > 0 and vol > 0;
/// throws DegenerateInputError otherwise, callers special-case expiry.
Greeks bs_greeks(double spot, const OptionSpec& spec, double vol);

struct ImpliedVolOptions {
  /// Relative to the time value, so far out-of-the-money and deep
  /// in-the-money marks still pin the vol down.
  double price_tolerance = 1e-10;
  double vol_tolerance = 1e-12;  // stop once the bracket is this narrow
  int max_iterations = 100;
  double min_vol = 1e-4;
  double max_vol = 5.0;
};

/// Safeguarded Newton on vega with a bisection fallback whenever the Newton
/// step leaves the bracket. Throws BoundsError for prices outside
/// (intrinsic, spot), DegenerateInputError when an in-the-money time value is
/// below 1e-9 * spot, and ConvergenceError when the iteration budget runs out.
double implied_vol(double market_price, double spot, const OptionSpec& spec,
                   const ImpliedVolOptions& options = {});

}  // namespace hedgekit
