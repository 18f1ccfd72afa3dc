#pragma once

// Scalar special functions and 1-Frechet law utilities.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "maxcrps/error.hpp"

namespace maxcrps {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrtHalfPi = 1.2533141373155002512;  // sqrt(pi/2)
inline constexpr double kSqrtTwoPi = 2.5066282746310005024;

/// Error function. Total on finite reals; erf(+-inf) = +-1.
[[nodiscard]] inline double erf(double x) {
  if (std::isnan(x)) throw DomainError("erf: NaN argument");
  return std::erf(x);
}

namespace detail {

/// gamma_{1/2}(z) without argument checks; hot path of the CRPS objective.
[[nodiscard]] inline double gamma_half_unchecked(double z) noexcept {
  if (z >= 700.0) return kSqrtPi;
  return kSqrtPi * std::erf(std::sqrt(z));
}

}  // namespace detail

/// Lower incomplete gamma function of order 1/2,
///   gamma_{1/2}(z) = int_0^z t^{-1/2} e^{-t} dt = sqrt(pi) * erf(sqrt(z)).
/// Saturates to sqrt(pi) for z >= 700 (and at +inf).
[[nodiscard]] inline double lower_incomplete_gamma_half(double z) {
  if (std::isnan(z) || z < 0.0) {
    throw DomainError("lower_incomplete_gamma_half: argument must be >= 0, got " +
                      std::to_string(z));
  }
  return detail::gamma_half_unchecked(z);
}

/// Natural log of the modified Bessel function of the second kind K_nu(x).
///
/// Uses K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt. The integrand is an
/// even analytic function of t, so the trapezoidal rule converges
/// geometrically; the step is halved until successive sums agree to 1e-15.
/// Working in log space keeps large orders and small/large x representable.
[[nodiscard]] inline double log_bessel_k(double nu, double x) {
  if (!(nu > 0.0) || !std::isfinite(nu) || !(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_k: order and argument must be positive and finite (nu=" +
                      std::to_string(nu) + ", x=" + std::to_string(x) + ")");
  }
  const auto log_integrand = [nu, x](double t) {
    const double y = nu * t;  // t >= 0
    const double log_cosh = y + std::log1p(std::exp(-2.0 * y)) - std::numbers::ln2;
    return -x * std::cosh(t) + log_cosh;
  };

  // Locate the mode and a truncation point 60 e-folds below it.
  constexpr double scan_step = 0.05;
  double peak = log_integrand(0.0);
  double upper = 0.0;
  for (double t = scan_step;; t += scan_step) {
    const double value = log_integrand(t);
    if (value > peak) peak = value;
    upper = t;
    if (value < peak - 60.0) break;
  }

  const auto trapezoid = [&](int intervals) {
    const double h = upper / intervals;
    double sum = 0.5 * std::exp(log_integrand(0.0) - peak);
    for (int k = 1; k < intervals; ++k) sum += std::exp(log_integrand(k * h) - peak);
    sum += 0.5 * std::exp(log_integrand(upper) - peak);
    return sum * h;
  };

  int intervals = 64;
  double previous = trapezoid(intervals);
  for (int level = 0; level < 14; ++level) {
    intervals *= 2;
    const double current = trapezoid(intervals);
    if (std::abs(current - previous) <= 1e-15 * current) {
      previous = current;
      break;
    }
    previous = current;
  }
  return peak + std::log(previous);
}

/// Modified Bessel function of the second kind. Underflows to zero for
/// x beyond roughly 700.
[[nodiscard]] inline double bessel_k(double nu, double x) { return std::exp(log_bessel_k(nu, x)); }

/// 1-Frechet law P(X <= x) = exp(-scale / x), x > 0.
class FrechetLaw {
 public:
  explicit FrechetLaw(double scale = 1.0) : scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw DomainError("FrechetLaw: scale must be positive and finite, got " +
                        std::to_string(scale));
    }
  }

  [[nodiscard]] double scale() const noexcept { return scale_; }

  [[nodiscard]] double cdf(double x) const noexcept {
    if (!(x > 0.0)) return 0.0;
    return std::exp(-scale_ / x);
  }

  [[nodiscard]] double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("FrechetLaw::quantile: probability must lie in (0,1), got " +
                        std::to_string(p));
    }
    return -scale_ / std::log(p);
  }

 private:
  double scale_;
};

[[nodiscard]] inline double frechet_cdf(const FrechetLaw& law, double x) noexcept { return law.cdf(x); }

[[nodiscard]] inline double frechet_quantile(const FrechetLaw& law, double p) { return law.quantile(p); }

}  // namespace maxcrps
