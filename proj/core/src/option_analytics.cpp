#include "hedgekit/option_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hedgekit/errors.hpp"

namespace hedgekit {

namespace {

struct D1D2 {
  double d1;
  double d2;
};

D1D2 d1_d2(double spot, const OptionSpec& spec, double vol) {
  const double sqrt_tau = std::sqrt(spec.time_to_maturity);
  const double vol_sqrt_tau = vol * sqrt_tau;
  const double d1 =
      (std::log(spot / spec.strike) + (spec.rate + 0.5 * vol * vol) * spec.time_to_maturity) /
      vol_sqrt_tau;
  return {d1, d1 - vol_sqrt_tau};
}

void check_inputs(double spot, const OptionSpec& spec, double vol) {
  spec.validate();
  if (!(spot > 0.0) || !std::isfinite(spot)) {
    throw DomainError("spot must be positive and finite, got " + std::to_string(spot));
  }
  if (!(vol >= 0.0) || !std::isfinite(vol)) {
    throw DomainError("vol must be non-negative and finite, got " + std::to_string(vol));
  }
}

double discounted_strike(const OptionSpec& spec) {
  return spec.strike * std::exp(-spec.rate * spec.time_to_maturity);
}

}  // namespace

void OptionSpec::validate() const {
  if (!(strike > 0.0) || !std::isfinite(strike)) {
    throw DomainError("strike must be positive, got " + std::to_string(strike));
  }
  if (!(time_to_maturity >= 0.0) || !std::isfinite(time_to_maturity)) {
    throw DomainError("time to maturity must be non-negative, got " +
                      std::to_string(time_to_maturity));
  }
  if (!is_call) {
    throw DomainError("only call options are supported");
  }
}

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) {
    throw DomainError("std_normal_cdf: non-finite argument");
  }
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double bs_call_price(double spot, const OptionSpec& spec, double vol) {
  check_inputs(spot, spec, vol);
  const double k_disc = discounted_strike(spec);
  if (spec.time_to_maturity == 0.0 || vol == 0.0) {
    return std::max(spot - k_disc, 0.0);
  }
  const auto [d1, d2] = d1_d2(spot, spec, vol);
  const double price = spot * std_normal_cdf(d1) - k_disc * std_normal_cdf(d2);
  // Rounding can push deep-OTM or deep-ITM prices a few ulps outside the
  // no-arbitrage band.
  return std::clamp(price, std::max(spot - k_disc, 0.0), spot);
}

double bs_delta(double spot, const OptionSpec& spec, double vol) {
  check_inputs(spot, spec, vol);
  if (spec.time_to_maturity == 0.0 || vol == 0.0) {
    const double k_disc = discounted_strike(spec);
    if (spot > k_disc) return 1.0;
    if (spot < k_disc) return 0.0;
    return 0.5;
  }
  return std_normal_cdf(d1_d2(spot, spec, vol).d1);
}

Greeks bs_greeks(double spot, const OptionSpec& spec, double vol) {
  check_inputs(spot, spec, vol);
  if (spec.time_to_maturity == 0.0 || vol == 0.0) {
    throw DegenerateInputError("bs_greeks requires tau > 0 and vol > 0");
  }
  const double tau = spec.time_to_maturity;
  const double sqrt_tau = std::sqrt(tau);
  const auto [d1, d2] = d1_d2(spot, spec, vol);
  const double pdf_d1 = std_normal_pdf(d1);

  Greeks g;
  g.delta = std_normal_cdf(d1);
  g.gamma = pdf_d1 / (spot * vol * sqrt_tau);
  g.vega = spot * pdf_d1 * sqrt_tau;
  g.theta = -spot * pdf_d1 * vol / (2.0 * sqrt_tau) -
            spec.rate * discounted_strike(spec) * std_normal_cdf(d2);
  return g;
}

namespace {
constexpr double kMinTimeValue = 1e-9;
}  // namespace

double implied_vol(double market_price, double spot, const OptionSpec& spec,
                   const ImpliedVolOptions& options) {
  check_inputs(spot, spec, 0.0);
  if (spec.time_to_maturity == 0.0) {
    throw DegenerateInputError("implied_vol requires tau > 0");
  }
  const double intrinsic = std::max(spot - discounted_strike(spec), 0.0);
  if (!std::isfinite(market_price) || market_price <= intrinsic || market_price >= spot) {
    throw BoundsError("price " + std::to_string(market_price) +
                      " outside no-arbitrage bounds (" + std::to_string(intrinsic) + ", " +
                      std::to_string(spot) + ")");
  }

  // In the money the call is computed as a difference of two large terms, so
  // a time value near rounding level carries no vol information.
  const double time_value = market_price - intrinsic;
  if (intrinsic > 0.0 && time_value <= kMinTimeValue * spot) {
    throw DegenerateInputError("price " + std::to_string(market_price) +
                               " is indistinguishable from intrinsic value");
  }

  double lo = options.min_vol;
  double hi = options.max_vol;
  const double tol = options.price_tolerance * time_value;
  const double f_lo = bs_call_price(spot, spec, lo) - market_price;
  const double f_hi = bs_call_price(spot, spec, hi) - market_price;
  if (std::abs(f_lo) <= tol) return lo;
  if (std::abs(f_hi) <= tol) return hi;
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw BoundsError("price " + std::to_string(market_price) +
                      " implies a vol outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }

  // Brenner-Subrahmanyam start, clamped into the bracket.
  double vol = std::sqrt(2.0 * std::numbers::pi / spec.time_to_maturity) * market_price / spot;
  if (!(vol > lo && vol < hi)) vol = 0.5 * (lo + hi);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double diff = bs_call_price(spot, spec, vol) - market_price;
    if (std::abs(diff) <= tol) return vol;
    if (diff > 0.0) {
      hi = vol;
    } else {
      lo = vol;
    }
    if (hi - lo <= options.vol_tolerance) return 0.5 * (lo + hi);
    const double vega = bs_greeks(spot, spec, vol).vega;
    double next = vega > 0.0 ? vol - diff / vega : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    vol = next;
  }
  throw ConvergenceError("implied_vol did not converge within " +
                         std::to_string(options.max_iterations) + " iterations");
}

}  // namespace hedgekit
