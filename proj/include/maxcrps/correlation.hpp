#pragma once

// Isotropic correlation functions for the Gaussian fields behind the
// Schlather model, and the planar site sets they are evaluated on.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maxcrps/error.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/special_fn.hpp"

namespace maxcrps {

enum class CorrelationKind { stable, matern, cauchy };

[[nodiscard]] inline std::string_view to_string(CorrelationKind kind) noexcept {
  switch (kind) {
    case CorrelationKind::stable: return "stable";
    case CorrelationKind::matern: return "matern";
    case CorrelationKind::cauchy: return "cauchy";
  }
  return "unknown";
}

[[nodiscard]] inline std::optional<CorrelationKind> parse_correlation_kind(std::string_view name) noexcept {
  if (name == "stable") return CorrelationKind::stable;
  if (name == "matern") return CorrelationKind::matern;
  if (name == "cauchy") return CorrelationKind::cauchy;
  return std::nullopt;
}

/// theta1 is the range, theta2 the shape. Stable needs theta2 in (0, 2];
/// Matern and Cauchy need theta2 > 0.
struct CorrelationFn {
  CorrelationKind kind = CorrelationKind::stable;
  double theta1 = 1.0;
  double theta2 = 1.0;

  void validate() const {
    if (!(theta1 > 0.0) || !std::isfinite(theta1)) {
      throw DomainError(std::string(to_string(kind)) + " correlation: range theta1 must be positive, got " +
                        std::to_string(theta1));
    }
    const bool shape_ok = kind == CorrelationKind::stable ? (theta2 > 0.0 && theta2 <= 2.0)
                                                          : (theta2 > 0.0 && std::isfinite(theta2));
    if (!shape_ok) {
      throw DomainError(std::string(to_string(kind)) + " correlation: shape theta2 out of domain, got " +
                        std::to_string(theta2));
    }
  }
};

[[nodiscard]] inline double correlation(const CorrelationFn& fn, double h) {
  fn.validate();
  if (!(h >= 0.0) || std::isnan(h)) throw DomainError("correlation: distance must be >= 0");
  if (h == 0.0) return 1.0;
  switch (fn.kind) {
    case CorrelationKind::stable:
      return std::exp(-std::pow(h / fn.theta1, fn.theta2));
    case CorrelationKind::cauchy:
      return std::pow(1.0 + (h / fn.theta1) * (h / fn.theta1), -fn.theta2);
    case CorrelationKind::matern: {
      const double nu = fn.theta2;
      const double z = std::sqrt(2.0 * nu) * h / fn.theta1;
      const double log_rho = nu * std::log(z) - std::lgamma(nu) - (nu - 1.0) * std::numbers::ln2 + log_bessel_k(nu, z);
      return std::min(1.0, std::exp(log_rho));
    }
  }
  return 0.0;
}

/// Labelled, pairwise-distinct points in the plane.
class SiteSet {
 public:
  using Point = std::array<double, 2>;

  SiteSet() = default;
  explicit SiteSet(std::vector<Point> coordinates, std::vector<std::string> labels = {})
      : coordinates_(std::move(coordinates)), labels_(std::move(labels)) {
    if (coordinates_.empty()) throw ContractError("SiteSet: need at least one site");
    if (labels_.empty()) {
      for (std::size_t i = 1; i <= coordinates_.size(); ++i) labels_.push_back("site_" + std::to_string(i));
    }
    if (labels_.size() != coordinates_.size()) throw ContractError("SiteSet: label count mismatch");
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (coordinates_[i] == coordinates_[j]) {
          throw ContractError("SiteSet: sites " + labels_[j] + " and " + labels_[i] + " coincide");
        }
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return coordinates_.size(); }
  [[nodiscard]] const std::vector<Point>& coordinates() const noexcept { return coordinates_; }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

  [[nodiscard]] double distance(std::size_t i, std::size_t j) const {
    return std::hypot(coordinates_[i][0] - coordinates_[j][0], coordinates_[i][1] - coordinates_[j][1]);
  }

  [[nodiscard]] double max_distance() const {
    double best = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) best = std::max(best, distance(i, j));
    }
    return best;
  }

 private:
  std::vector<Point> coordinates_;
  std::vector<std::string> labels_;
};

/// R_ij = rho(|t_i - t_j|).
[[nodiscard]] inline SymmetricMatrix correlation_matrix(const CorrelationFn& fn, const SiteSet& sites) {
  const auto d = static_cast<Eigen::Index>(sites.size());
  Matrix r = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      r(i, j) = correlation(fn, sites.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
  return SymmetricMatrix(r);
}

}  // namespace maxcrps
