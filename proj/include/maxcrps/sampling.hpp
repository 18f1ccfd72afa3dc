#pragma once

// Reproducible samplers: Frechet and positive stable variates, and exact or
// series-truncated generators for the three max-stable families.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "maxcrps/correlation.hpp"
#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/models.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/rng.hpp"
#include "maxcrps/special_fn.hpp"

namespace maxcrps {

/// iid Frechet(scale) draws by inversion, -scale / log(U).
[[nodiscard]] inline std::vector<double> sample_frechet(RngStream& stream, double scale, std::size_t n) {
  const FrechetLaw law(scale);
  std::vector<double> out(n);
  for (auto& x : out) x = -law.scale() / std::log(stream.uniform());
  return out;
}

namespace detail {

/// Kanter's representation: S = [sin(aU) / sin(U)^{1/a}] [sin((1-a)U) / E]^{(1-a)/a}
/// with U ~ Uniform(0, pi), E ~ Exp(1), has E exp(-tS) = exp(-t^a).
[[nodiscard]] inline double positive_stable_draw(RngStream& stream, double alpha) noexcept {
  const double u = std::numbers::pi * stream.uniform();
  const double e = stream.exponential();
  const double log_s = std::log(std::sin(alpha * u)) - std::log(std::sin(u)) / alpha +
                       (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * u)) - std::log(e));
  return std::exp(log_s);
}

inline void require_finite_positive(const RowMatrix& data, const char* who) {
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double x = data.data()[i];
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw NumericalError(std::string(who) + ": generated a non-positive or non-finite value");
    }
  }
}

}  // namespace detail

/// Positive stable variates with Laplace transform exp(-t^alpha), 0 < alpha < 1.
[[nodiscard]] inline std::vector<double> sample_positive_stable(RngStream& stream, double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("sample_positive_stable: alpha must lie in (0,1), got " + std::to_string(alpha));
  }
  std::vector<double> out(n);
  for (auto& s : out) s = detail::positive_stable_draw(stream, alpha);
  return out;
}

/// Exact logistic sampler: X_i = sigma (S / E_i)^alpha with S positive
/// alpha-stable and E_i iid unit exponential.
[[nodiscard]] inline ObservationSet sample_logistic(RngStream& stream, const LogisticParams& params, std::size_t d,
                                                    std::size_t n) {
  params.validate();
  if (!(params.alpha < 1.0)) throw DomainError("sample_logistic: alpha must be < 1");
  if (d < 1 || n < 1) throw ContractError("sample_logistic: d and n must be >= 1");
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const double log_s = std::log(detail::positive_stable_draw(stream, params.alpha));
    for (Eigen::Index i = 0; i < data.cols(); ++i) {
      data(r, i) = params.sigma * std::exp(params.alpha * (log_s - std::log(stream.exponential())));
    }
  }
  detail::require_finite_positive(data, "sample_logistic");
  return ObservationSet(std::move(data), {}, {"logistic", {params.sigma, params.alpha}, stream.seed(), stream.stream_id()});
}

/// X_i = max_j a_ij Z_j with Z_j iid standard 1-Frechet.
[[nodiscard]] inline ObservationSet sample_max_linear(RngStream& stream, const MaxLinearSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw ContractError("sample_max_linear: n must be >= 1");
  const Matrix& a = spec.active();
  RowMatrix data(static_cast<Eigen::Index>(n), a.rows());
  std::vector<double> z(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (auto& zj : z) zj = -1.0 / std::log(stream.uniform());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double best = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) best = std::max(best, a(i, j) * z[static_cast<std::size_t>(j)]);
      data(r, i) = best;
    }
  }
  detail::require_finite_positive(data, "sample_max_linear");
  return ObservationSet(std::move(data), {},
                        {"max_linear", {static_cast<double>(spec.theta)}, stream.seed(), stream.stream_id()});
}

/// Rows iid N(0, R) with R_ij = rho(|t_i - t_j|), via the Cholesky factor.
[[nodiscard]] inline RowMatrix sample_gaussian_field(RngStream& stream, const CorrelationFn& fn, const SiteSet& sites,
                                                     std::size_t n) {
  const Matrix lower = cholesky_with_jitter(correlation_matrix(fn, sites));
  const auto d = lower.rows();
  RowMatrix out(static_cast<Eigen::Index>(n), d);
  Vector z(d);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = stream.normal();
    out.row(r) = (lower * z).transpose();
  }
  return out;
}

/// Upper 1e-6 quantile of the standard normal; sets the series envelope.
inline constexpr double kSchlatherEnvelopeQuantile = 4.753424308822899;
inline constexpr std::size_t kSchlatherMaxPoints = 1'000'000;

/// Schlather fields by the spectral series X_t = max_i sqrt(2 pi) [w_i(t)]_+ / Gamma_i,
/// Gamma_i the arrivals of a unit-rate Poisson process. A replicate stops once
/// C / Gamma_i falls below the smallest running maximum, with
/// C = sqrt(2 pi) z_q and z_q the 1 - 1e-6 normal quantile.
[[nodiscard]] inline ObservationSet sample_schlather(RngStream& stream, const SchlatherModel& model,
                                                     std::span<const double> theta, std::size_t n) {
  if (n < 1) throw ContractError("sample_schlather: n must be >= 1");
  model.param_space().require(theta, "sample_schlather");
  const Matrix lower = model.factor(theta);
  const auto d = lower.rows();
  constexpr double envelope = kSqrtTwoPi * kSchlatherEnvelopeQuantile;
  RowMatrix data(static_cast<Eigen::Index>(n), d);
  std::vector<double> z(static_cast<std::size_t>(d));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    row.setZero();
    double arrival = 0.0;
    double running_min = 0.0;
    std::size_t points = 0;
    while (true) {
      if (++points > kSchlatherMaxPoints) {
        throw NumericalError("sample_schlather: stopping rule not met within 1e6 points (" +
                             std::string(to_string(model.kind())) + " range=" + std::to_string(theta[0]) +
                             ", shape=" + std::to_string(theta[1]) + ")");
      }
      arrival += stream.exponential();
      const double inv_arrival = 1.0 / arrival;
      if (envelope * inv_arrival < running_min) break;
      for (auto& zi : z) zi = stream.normal();
      running_min = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < d; ++i) {
        double w = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) w += lower(i, j) * z[static_cast<std::size_t>(j)];
        if (w > 0.0) row(i) = std::max(row(i), kSqrtTwoPi * w * inv_arrival);
        running_min = std::min(running_min, row(i));
      }
    }
  }
  detail::require_finite_positive(data, "sample_schlather");
  return ObservationSet(std::move(data), model.sites().labels(),
                        {"schlather", {theta.begin(), theta.end()}, stream.seed(), stream.stream_id()});
}

// Uniform entry points used by the estimator and the harness.

[[nodiscard]] inline ObservationSet sample(RngStream& stream, const LogisticModel& model, std::span<const double> theta,
                                           std::size_t n) {
  model.param_space().require(theta, "sample");
  return sample_logistic(stream, LogisticModel::params(theta), model.dimension(), n);
}

[[nodiscard]] inline ObservationSet sample(RngStream& stream, const MaxLinearModel& model, std::size_t index,
                                           std::size_t n) {
  MaxLinearSpec spec = model.spec();
  spec.theta = index;
  return sample_max_linear(stream, spec, n);
}

[[nodiscard]] inline ObservationSet sample(RngStream& stream, const SchlatherModel& model,
                                           std::span<const double> theta, std::size_t n) {
  return sample_schlather(stream, model, theta, n);
}

}  // namespace maxcrps
