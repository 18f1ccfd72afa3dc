#pragma once

// Tail dependence functions V_theta for the logistic, max-linear and
// Schlather families, their parameter gradients, and the dependence
// summaries derived from them.
//
// Every model evaluates V at arbitrary positive x (coordinates may be +inf,
// which drops the site) and, in bulk, at all directions of a DirectionSet.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maxcrps/correlation.hpp"
#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/rng.hpp"
#include "maxcrps/special_fn.hpp"

namespace maxcrps {

enum class Family { logistic, max_linear, schlather };

[[nodiscard]] inline std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::logistic: return "logistic";
    case Family::max_linear: return "max_linear";
    case Family::schlather: return "schlather";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Parameter spaces

/// One coordinate of a box parameter space. Lower bounds are open; the upper
/// bound is open unless `upper_closed` (the stable shape's 2 is attainable).
struct ParamBound {
  std::string name;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool upper_closed = false;

  [[nodiscard]] bool contains(double value) const noexcept {
    if (!std::isfinite(value) || !(value > lower)) return false;
    return upper_closed ? value <= upper : value < upper;
  }
  [[nodiscard]] bool bounded() const noexcept { return std::isfinite(upper); }
};

class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(std::vector<ParamBound> bounds) : bounds_(std::move(bounds)) {}

  [[nodiscard]] std::size_t size() const noexcept { return bounds_.size(); }
  [[nodiscard]] const ParamBound& operator[](std::size_t k) const { return bounds_[k]; }
  [[nodiscard]] const std::vector<ParamBound>& bounds() const noexcept { return bounds_; }

  [[nodiscard]] bool contains(std::span<const double> theta) const noexcept {
    if (theta.size() != bounds_.size()) return false;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      if (!bounds_[k].contains(theta[k])) return false;
    }
    return true;
  }

  void require(std::span<const double> theta, std::string_view who) const {
    if (theta.size() != bounds_.size()) {
      throw ContractError(std::string(who) + ": expected " + std::to_string(bounds_.size()) + " parameters, got " +
                          std::to_string(theta.size()));
    }
    for (std::size_t k = 0; k < theta.size(); ++k) {
      if (!bounds_[k].contains(theta[k])) {
        throw DomainError(std::string(who) + ": parameter " + bounds_[k].name + " = " + std::to_string(theta[k]) +
                          " is outside its domain");
      }
    }
  }

  /// Log for half-lines, scaled logit for intervals.
  [[nodiscard]] std::vector<double> to_unconstrained(std::span<const double> theta) const {
    std::vector<double> z(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const auto& b = bounds_[k];
      if (b.bounded()) {
        const double p = (theta[k] - b.lower) / (b.upper - b.lower);
        z[k] = std::log(p) - std::log1p(-p);
      } else {
        z[k] = std::log(theta[k] - b.lower);
      }
    }
    return z;
  }

  [[nodiscard]] std::vector<double> from_unconstrained(std::span<const double> z) const {
    std::vector<double> theta(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      const auto& b = bounds_[k];
      if (b.bounded()) {
        theta[k] = b.lower + (b.upper - b.lower) / (1.0 + std::exp(-z[k]));
      } else {
        theta[k] = b.lower + std::exp(z[k]);
      }
    }
    return theta;
  }

 private:
  std::vector<ParamBound> bounds_;
};

/// Rectangle of starting values for multistart search, natural scale.
using StartRegion = std::vector<std::pair<double, double>>;

namespace detail {

inline void require_positive(std::span<const double> x, std::string_view who) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) {
      throw DomainError(std::string(who) + ": coordinate " + std::to_string(i) +
                        " must be strictly positive, got " + std::to_string(x[i]));
    }
  }
}

[[nodiscard]] inline std::vector<double> ones(std::size_t d) { return std::vector<double>(d, 1.0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Multivariate logistic

struct LogisticParams {
  double sigma = 1.0;
  double alpha = 0.5;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("logistic: sigma must be positive, got " + std::to_string(sigma));
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw DomainError("logistic: alpha must lie in (0,1), got " + std::to_string(alpha));
    }
  }
};

namespace detail {

/// log sum_i x_i^{-1/alpha} via log-sum-exp; infinite x_i contribute nothing.
[[nodiscard]] inline double logistic_log_sum(double alpha, std::span<const double> x) noexcept {
  double peak = -std::numeric_limits<double>::infinity();
  for (const double xi : x) {
    if (std::isfinite(xi)) peak = std::max(peak, -std::log(xi) / alpha);
  }
  if (!std::isfinite(peak)) return peak;
  double total = 0.0;
  for (const double xi : x) {
    if (std::isfinite(xi)) total += std::exp(-std::log(xi) / alpha - peak);
  }
  return peak + std::log(total);
}

}  // namespace detail

/// V(x) = sigma (sum_i x_i^{-1/alpha})^alpha. alpha = 1 is accepted here
/// (independence) although it is excluded from the estimation space.
[[nodiscard]] inline double v_logistic(const LogisticParams& params, std::span<const double> x) {
  params.validate();
  detail::require_positive(x, "v_logistic");
  return params.sigma * std::exp(params.alpha * detail::logistic_log_sum(params.alpha, x));
}

/// (dV/dsigma, dV/dalpha).
[[nodiscard]] inline std::array<double, 2> v_logistic_grad(const LogisticParams& params, std::span<const double> x) {
  params.validate();
  detail::require_positive(x, "v_logistic_grad");
  const double alpha = params.alpha;
  const double log_sum = detail::logistic_log_sum(alpha, x);
  const double v = params.sigma * std::exp(alpha * log_sum);
  // dV/dalpha = V [log S + (1/alpha) sum_i w_i log x_i],  w_i = x_i^{-1/alpha} / S.
  double weighted_log = 0.0;
  for (const double xi : x) {
    if (!std::isfinite(xi)) continue;
    const double lx = std::log(xi);
    weighted_log += std::exp(-lx / alpha - log_sum) * lx;
  }
  return {v / params.sigma, v * (log_sum + weighted_log / alpha)};
}

class LogisticModel {
 public:
  static constexpr Family family = Family::logistic;

  explicit LogisticModel(std::size_t dimension) : dimension_(dimension) {
    if (dimension < 1) throw ContractError("LogisticModel: dimension must be >= 1");
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return 2; }
  [[nodiscard]] static ParamSpace param_space() {
    return ParamSpace({{"sigma", 0.0, std::numeric_limits<double>::infinity(), false}, {"alpha", 0.0, 1.0, false}});
  }
  [[nodiscard]] static LogisticParams params(std::span<const double> theta) {
    if (theta.size() != 2) throw ContractError("logistic: expected 2 parameters");
    return {theta[0], theta[1]};
  }

  [[nodiscard]] double tail(std::span<const double> theta, std::span<const double> x) const {
    check_dimension(x.size());
    return v_logistic(params(theta), x);
  }

  [[nodiscard]] std::vector<double> tail_at(std::span<const double> theta, const DirectionSet& dirs) const {
    check_dimension(static_cast<std::size_t>(dirs.dimension()));
    const LogisticParams p = params(theta);
    p.validate();
    std::vector<double> out(static_cast<std::size_t>(dirs.size()));
    for (Eigen::Index c = 0; c < dirs.size(); ++c) {
      out[static_cast<std::size_t>(c)] = p.sigma * std::exp(p.alpha * detail::logistic_log_sum(p.alpha, dirs.direction(c)));
    }
    return out;
  }

  /// |U| x 2 matrix of gradients.
  [[nodiscard]] Matrix tail_gradient_at(std::span<const double> theta, const DirectionSet& dirs,
                                        std::vector<std::string>* /*warnings*/ = nullptr) const {
    check_dimension(static_cast<std::size_t>(dirs.dimension()));
    const LogisticParams p = params(theta);
    Matrix grad(dirs.size(), 2);
    for (Eigen::Index c = 0; c < dirs.size(); ++c) {
      const auto g = v_logistic_grad(p, dirs.direction(c));
      grad(c, 0) = g[0];
      grad(c, 1) = g[1];
    }
    return grad;
  }

  [[nodiscard]] bool standard_margins(std::span<const double> theta) const { return params(theta).sigma == 1.0; }

  /// Margins are Frechet(sigma); the median is sigma / ln 2.
  [[nodiscard]] StartRegion start_region(const ObservationSet& data) const {
    std::vector<double> column(static_cast<std::size_t>(data.rows() * data.dimension()));
    std::copy(data.values().data(), data.values().data() + column.size(), column.begin());
    auto mid = column.begin() + static_cast<std::ptrdiff_t>(column.size() / 2);
    std::nth_element(column.begin(), mid, column.end());
    const double sigma0 = *mid * std::numbers::ln2;
    return {{0.5 * sigma0, 2.0 * sigma0}, {0.2, 0.9}};
  }

 private:
  void check_dimension(std::size_t d) const {
    if (d != dimension_) {
      throw ContractError("logistic model of dimension " + std::to_string(dimension_) + " evaluated at dimension " +
                          std::to_string(d));
    }
  }

  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// Max-linear

/// A finite list of d x k nonnegative coefficient matrices and the index of
/// the active one.
struct MaxLinearSpec {
  std::vector<Matrix> candidates;
  std::size_t theta = 0;

  void validate() const {
    if (candidates.empty()) throw ContractError("max-linear: candidate list is empty");
    const Eigen::Index d = candidates.front().rows();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const Matrix& a = candidates[c];
      if (a.rows() != d || a.rows() < 1 || a.cols() < 1) {
        throw ContractError("max-linear: candidate " + std::to_string(c) + " has inconsistent shape");
      }
      if (!a.allFinite() || (a.array() < 0.0).any()) {
        throw DomainError("max-linear: candidate " + std::to_string(c) + " has a negative or non-finite entry");
      }
      for (Eigen::Index i = 0; i < d; ++i) {
        if (a.row(i).maxCoeff() <= 0.0) {
          throw DomainError("max-linear: candidate " + std::to_string(c) + " row " + std::to_string(i) +
                            " is all zero");
        }
      }
    }
    if (theta >= candidates.size()) throw DomainError("max-linear: theta index out of range");
  }

  [[nodiscard]] const Matrix& active() const { return candidates.at(theta); }
};

/// V(x) = sum_j max_i a_ij / x_i.
[[nodiscard]] inline double v_max_linear(const Matrix& a, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != a.rows()) {
    throw ContractError("v_max_linear: x has dimension " + std::to_string(x.size()) + ", matrix has " +
                        std::to_string(a.rows()) + " rows");
  }
  detail::require_positive(x, "v_max_linear");
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    double column_max = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) column_max = std::max(column_max, a(i, j) / x[static_cast<std::size_t>(i)]);
    total += column_max;
  }
  return total;
}

[[nodiscard]] inline double v_max_linear(const MaxLinearSpec& spec, std::span<const double> x) {
  spec.validate();
  return v_max_linear(spec.active(), x);
}

/// The 3 x 4 pair {C, B} whose univariate and bivariate margins coincide.
/// Index 1 (B) and index 0 (C) match A(theta) = theta B + (1 - theta) C.
[[nodiscard]] inline MaxLinearSpec bivariate_confounded_pair() {
  Matrix b(3, 4);
  b << 1, 1, 0, 0,  //
      1, 0, 1, 0,   //
      0, 1, 1, 0;
  Matrix c(3, 4);
  c << 1, 1, 0, 0,  //
      1, 0, 1, 0,   //
      1, 0, 0, 1;
  return {{c, b}, 1};
}

class MaxLinearModel {
 public:
  static constexpr Family family = Family::max_linear;

  explicit MaxLinearModel(MaxLinearSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(spec_.candidates.front().rows()); }
  [[nodiscard]] std::size_t candidate_count() const noexcept { return spec_.candidates.size(); }
  [[nodiscard]] const MaxLinearSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const Matrix& candidate(std::size_t index) const { return spec_.candidates.at(index); }

  [[nodiscard]] double tail(std::size_t index, std::span<const double> x) const { return v_max_linear(candidate(index), x); }

  [[nodiscard]] std::vector<double> tail_at(std::size_t index, const DirectionSet& dirs) const {
    std::vector<double> out(static_cast<std::size_t>(dirs.size()));
    for (Eigen::Index c = 0; c < dirs.size(); ++c) out[static_cast<std::size_t>(c)] = tail(index, dirs.direction(c));
    return out;
  }

  [[nodiscard]] bool standard_margins(std::size_t index) const {
    const Matrix& a = candidate(index);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::abs(a.row(i).sum() - 1.0) > 1e-12) return false;
    }
    return true;
  }

 private:
  MaxLinearSpec spec_;
};

// ---------------------------------------------------------------------------
// Schlather

/// Monte Carlo estimate of a tail value with its standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Schlather model with correlation family `kind` on a fixed site set.
///
/// V_theta(x) = E max_t [sqrt(2 pi) w_t]_+ / x_t is estimated from K Gaussian
/// fields built as w = L(theta) z from a fixed bank of standard normal
/// vectors z drawn once from `base_seed`. Every theta therefore sees the same
/// draws, which makes theta -> V_theta(x) a deterministic continuous function.
class SchlatherModel {
 public:
  static constexpr Family family = Family::schlather;
  static constexpr std::size_t kDefaultMonteCarloSize = 5000;

  SchlatherModel(SiteSet sites, CorrelationKind kind, std::size_t monte_carlo_size = kDefaultMonteCarloSize,
                 std::uint64_t base_seed = 0)
      : sites_(std::move(sites)), kind_(kind), monte_carlo_size_(monte_carlo_size), base_seed_(base_seed) {
    if (monte_carlo_size_ < 2) throw ContractError("SchlatherModel: Monte Carlo size must be >= 2");
    const auto d = static_cast<Eigen::Index>(sites_.size());
    normals_.resize(static_cast<Eigen::Index>(monte_carlo_size_), d);
    RngStream stream(base_seed_, 0x5C41A7E5ULL);
    for (Eigen::Index k = 0; k < normals_.rows(); ++k) {
      for (Eigen::Index i = 0; i < d; ++i) normals_(k, i) = stream.normal();
    }
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return sites_.size(); }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return 2; }
  [[nodiscard]] const SiteSet& sites() const noexcept { return sites_; }
  [[nodiscard]] CorrelationKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t monte_carlo_size() const noexcept { return monte_carlo_size_; }
  [[nodiscard]] std::uint64_t base_seed() const noexcept { return base_seed_; }

  [[nodiscard]] ParamSpace param_space() const {
    const double inf = std::numeric_limits<double>::infinity();
    if (kind_ == CorrelationKind::stable) return ParamSpace({{"range", 0.0, inf, false}, {"shape", 0.0, 2.0, true}});
    return ParamSpace({{"range", 0.0, inf, false}, {"shape", 0.0, inf, false}});
  }

  [[nodiscard]] CorrelationFn correlation_fn(std::span<const double> theta) const {
    if (theta.size() != 2) throw ContractError("schlather: expected 2 parameters");
    CorrelationFn fn{kind_, theta[0], theta[1]};
    fn.validate();
    return fn;
  }

  /// Lower Cholesky factor of the site correlation matrix under theta.
  [[nodiscard]] Matrix factor(std::span<const double> theta) const {
    const CorrelationFn fn = correlation_fn(theta);
    try {
      return cholesky_with_jitter(correlation_matrix(fn, sites_));
    } catch (const NumericalError&) {
      throw NumericalError("schlather: correlation matrix is not positive definite for " +
                           std::string(to_string(kind_)) + " correlation with range=" + std::to_string(theta[0]) +
                           ", shape=" + std::to_string(theta[1]));
    }
  }

  /// K x d matrix of sqrt(2 pi) [w_t]_+ for the common normal bank.
  [[nodiscard]] RowMatrix spectral_values(std::span<const double> theta) const {
    const Matrix lower = factor(theta);
    const auto d = normals_.cols();
    RowMatrix out(normals_.rows(), d);
    for (Eigen::Index k = 0; k < normals_.rows(); ++k) {
      for (Eigen::Index i = 0; i < d; ++i) {
        double w = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) w += lower(i, j) * normals_(k, j);
        out(k, i) = w > 0.0 ? kSqrtTwoPi * w : 0.0;
      }
    }
    return out;
  }

  [[nodiscard]] McEstimate tail_with_error(std::span<const double> theta, std::span<const double> x) const {
    check_dimension(x.size());
    detail::require_positive(x, "v_schlather");
    const RowMatrix values = spectral_values(theta);
    std::vector<double> inv_x(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) inv_x[i] = 1.0 / x[i];
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Eigen::Index k = 0; k < values.rows(); ++k) {
      double best = 0.0;
      for (Eigen::Index i = 0; i < values.cols(); ++i) best = std::max(best, values(k, i) * inv_x[static_cast<std::size_t>(i)]);
      sum += best;
      sum_sq += best * best;
    }
    const double count = static_cast<double>(values.rows());
    const double mean = sum / count;
    const double variance = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
    return {mean, std::sqrt(variance / count)};
  }

  [[nodiscard]] double tail(std::span<const double> theta, std::span<const double> x) const {
    return tail_with_error(theta, x).value;
  }

  [[nodiscard]] std::vector<double> tail_at(std::span<const double> theta, const DirectionSet& dirs) const {
    check_dimension(static_cast<std::size_t>(dirs.dimension()));
    return tail_at_from(spectral_values(theta), dirs);
  }

  /// |U| x 2 gradient by central differences with common random numbers.
  /// Steps are 1e-3 max(1, |theta_j|), shrunk near the parameter boundary.
  [[nodiscard]] Matrix tail_gradient_at(std::span<const double> theta, const DirectionSet& dirs,
                                        std::vector<std::string>* warnings = nullptr) const {
    check_dimension(static_cast<std::size_t>(dirs.dimension()));
    const ParamSpace space = param_space();
    space.require(theta, "v_schlather_grad");
    Matrix grad(dirs.size(), 2);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto step = finite_difference_steps(space[j], theta[j], warnings);
      std::vector<double> plus(theta.begin(), theta.end());
      std::vector<double> minus(theta.begin(), theta.end());
      plus[j] += step.forward;
      minus[j] -= step.backward;
      const auto v_plus = tail_at(plus, dirs);
      const auto v_minus = tail_at(minus, dirs);
      for (Eigen::Index c = 0; c < dirs.size(); ++c) {
        const auto idx = static_cast<std::size_t>(c);
        grad(c, static_cast<Eigen::Index>(j)) = (v_plus[idx] - v_minus[idx]) / (step.forward + step.backward);
      }
    }
    return grad;
  }

  [[nodiscard]] bool standard_margins(std::span<const double> /*theta*/) const noexcept { return true; }

  [[nodiscard]] StartRegion start_region(const ObservationSet& /*data*/) const {
    const double span = sites_.size() > 1 ? sites_.max_distance() : 1.0;
    const double shape_hi = kind_ == CorrelationKind::stable ? 1.6 : 2.0;
    return {{0.1 * span, 1.5 * span}, {0.4, shape_hi}};
  }

 private:
  struct Steps {
    double backward;
    double forward;
  };

  static Steps finite_difference_steps(const ParamBound& bound, double value, std::vector<std::string>* warnings) {
    const double h = 1e-3 * std::max(1.0, std::abs(value));
    Steps steps{h, h};
    const double room_below = value - bound.lower;
    const double room_above = bound.upper - value;
    if (steps.backward >= room_below) {
      steps.backward = 0.5 * room_below;
      if (warnings != nullptr) warnings->push_back("gradient step for " + bound.name + " shrunk at lower bound");
    }
    if (steps.forward > room_above || (!bound.upper_closed && steps.forward >= room_above)) {
      steps.forward = bound.upper_closed ? room_above : 0.5 * room_above;
      if (warnings != nullptr) warnings->push_back("gradient step for " + bound.name + " shrunk at upper bound");
    }
    if (steps.forward + steps.backward <= 0.0) throw NumericalError("v_schlather_grad: no room for a finite difference");
    return steps;
  }

  [[nodiscard]] std::vector<double> tail_at_from(const RowMatrix& values, const DirectionSet& dirs) const {
    // Compact the positive entries of each field once; about half are zero.
    const auto d = values.cols();
    std::vector<std::int32_t> offsets{0};
    std::vector<std::int32_t> site;
    std::vector<double> positive;
    offsets.reserve(static_cast<std::size_t>(values.rows()) + 1);
    for (Eigen::Index k = 0; k < values.rows(); ++k) {
      for (Eigen::Index i = 0; i < d; ++i) {
        if (values(k, i) > 0.0) {
          site.push_back(static_cast<std::int32_t>(i));
          positive.push_back(values(k, i));
        }
      }
      offsets.push_back(static_cast<std::int32_t>(site.size()));
    }
    const double count = static_cast<double>(values.rows());
    std::vector<double> inv_u(static_cast<std::size_t>(d));
    std::vector<double> out(static_cast<std::size_t>(dirs.size()));
    for (Eigen::Index c = 0; c < dirs.size(); ++c) {
      const auto u = dirs.direction(c);
      for (std::size_t i = 0; i < inv_u.size(); ++i) inv_u[i] = 1.0 / u[i];
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
        double best = 0.0;
        for (auto e = offsets[k]; e < offsets[k + 1]; ++e) {
          best = std::max(best, positive[static_cast<std::size_t>(e)] * inv_u[static_cast<std::size_t>(site[static_cast<std::size_t>(e)])]);
        }
        sum += best;
      }
      out[static_cast<std::size_t>(c)] = sum / count;
    }
    return out;
  }

  void check_dimension(std::size_t d) const {
    if (d != sites_.size()) {
      throw ContractError("schlather model on " + std::to_string(sites_.size()) + " sites evaluated at dimension " +
                          std::to_string(d));
    }
  }

  SiteSet sites_;
  CorrelationKind kind_;
  std::size_t monte_carlo_size_;
  std::uint64_t base_seed_;
  RowMatrix normals_;
};

[[nodiscard]] inline McEstimate v_schlather(const SchlatherModel& model, std::span<const double> theta,
                                            std::span<const double> x) {
  return model.tail_with_error(theta, x);
}

/// Gradient of V at a single point x.
[[nodiscard]] inline std::vector<double> v_schlather_grad(const SchlatherModel& model, std::span<const double> theta,
                                                          std::span<const double> x,
                                                          std::vector<std::string>* warnings = nullptr) {
  // A single "direction" need not lie on the simplex for this purpose.
  RowMatrix point(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) point(0, static_cast<Eigen::Index>(i)) = x[i];
  const Matrix grad = model.tail_gradient_at(theta, DirectionSet(point), warnings);
  return {grad(0, 0), grad(0, 1)};
}

// ---------------------------------------------------------------------------
// Dependence summaries

/// theta(D) = V(1, ..., 1), in [1, d] for standard margins.
template <class Model, class Theta>
[[nodiscard]] double extremal_coefficient(const Model& model, const Theta& theta) {
  const auto x = detail::ones(model.dimension());
  return model.tail(theta, x);
}

/// [X_i, X_j] = 2 - V_{ij}(1, 1) for standard margins; other sites are
/// dropped by setting their coordinate to +inf.
template <class Model, class Theta>
[[nodiscard]] double covariation(const Model& model, const Theta& theta, std::size_t i, std::size_t j) {
  if (i >= model.dimension() || j >= model.dimension() || i == j) {
    throw ContractError("covariation: need two distinct site indices below " + std::to_string(model.dimension()));
  }
  if (!model.standard_margins(theta)) {
    throw ContractError("covariation: model margins are not standard 1-Frechet");
  }
  std::vector<double> x(model.dimension(), std::numeric_limits<double>::infinity());
  x[i] = 1.0;
  x[j] = 1.0;
  return std::max(0.0, 2.0 - model.tail(theta, x));
}

}  // namespace maxcrps
