#pragma once

// Closed-form 1-Frechet CRPS under mu(dr) = r^{-1/2} dr, its derivative in
// the scale, its expectation, and the multivariate objective assembled from
// max-linear projections.

#include <cmath>
#include <span>
#include <string>

#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/special_fn.hpp"

namespace maxcrps {

/// One (observation projection, model scale) pair entering the score.
struct CrpsTerm {
  double m;
  double v;
};

namespace detail {

/// CRPS with sqrt(m) and sqrt(v) precomputed; no argument checks.
[[nodiscard]] inline double crps_frechet_unchecked(double m, double sqrt_m, double v, double sqrt_v) noexcept {
  const double ratio = v / m;
  return 4.0 * (sqrt_m * (std::exp(-ratio) - 0.5) + sqrt_v * (gamma_half_unchecked(ratio) - kSqrtHalfPi));
}

inline void check_crps_arguments(const char* where, double m, double v) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw DomainError(std::string(where) + ": m must be positive and finite, got " + std::to_string(m));
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(where) + ": v must be non-negative and finite, got " + std::to_string(v));
  }
}

}  // namespace detail

/// int_0^inf (exp(-v/r) - 1{m <= r})^2 r^{-1/2} dr
///   = 4 [ sqrt(m) (e^{-v/m} - 1/2) + sqrt(v) (gamma_{1/2}(v/m) - sqrt(pi/2)) ].
/// v = 0 is admitted and gives the limit 2 sqrt(m).
[[nodiscard]] inline double crps_frechet(double m, double v) {
  detail::check_crps_arguments("crps_frechet", m, v);
  return detail::crps_frechet_unchecked(m, std::sqrt(m), v, std::sqrt(v));
}

[[nodiscard]] inline double crps_frechet(const CrpsTerm& term) { return crps_frechet(term.m, term.v); }

/// d/dv of crps_frechet: 2 (gamma_{1/2}(v/m) - sqrt(pi/2)) / sqrt(v).
[[nodiscard]] inline double crps_frechet_dv(double m, double v) {
  detail::check_crps_arguments("crps_frechet_dv", m, v);
  if (!(v > 0.0)) throw DomainError("crps_frechet_dv: v must be positive");
  return 2.0 * (detail::gamma_half_unchecked(v / m) - kSqrtHalfPi) / std::sqrt(v);
}

/// E crps_frechet(X, v) for X 1-Frechet with scale v0:
///   2 sqrt(pi) (2 sqrt(v0 + v) - sqrt(v0) - sqrt(2 v)).
/// Minimized over v at v = v0.
[[nodiscard]] inline double expected_crps(double v0, double v) {
  if (!(v0 > 0.0) || !std::isfinite(v0)) {
    throw DomainError("expected_crps: v0 must be positive and finite, got " + std::to_string(v0));
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("expected_crps: v must be non-negative and finite, got " + std::to_string(v));
  }
  return 2.0 * kSqrtPi * (2.0 * std::sqrt(v0 + v) - std::sqrt(v0) - std::sqrt(2.0 * v));
}

/// sum_i sum_u crps_frechet(M_u^(i), V(u)), observation-major, compensated,
/// directions visited in the projection's canonical column order.
[[nodiscard]] inline double crps_objective(const ProjectionMatrix& projections, std::span<const double> v_values) {
  if (static_cast<Eigen::Index>(v_values.size()) != projections.cols()) {
    throw ContractError("crps_objective: " + std::to_string(v_values.size()) + " tail values for " +
                        std::to_string(projections.cols()) + " directions");
  }
  std::vector<double> sqrt_v(v_values.size());
  for (std::size_t c = 0; c < v_values.size(); ++c) {
    if (!(v_values[c] >= 0.0) || !std::isfinite(v_values[c])) {
      throw DomainError("crps_objective: tail value at direction " + std::to_string(c) +
                        " is not non-negative and finite");
    }
    sqrt_v[c] = std::sqrt(v_values[c]);
  }

  const auto& order = projections.column_order();
  const RowMatrix& m = projections.values();
  const RowMatrix& sqrt_m = projections.sqrt_values();
  CompensatedSum total;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (const Eigen::Index c : order) {
      total.add(detail::crps_frechet_unchecked(m(i, c), sqrt_m(i, c), v_values[static_cast<std::size_t>(c)],
                                               sqrt_v[static_cast<std::size_t>(c)]));
    }
  }
  return total.value();
}

}  // namespace maxcrps
