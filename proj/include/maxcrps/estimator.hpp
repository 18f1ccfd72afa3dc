#pragma once

// CRPS M-estimation for max-stable models: objective minimization over a
// continuous or finite parameter space, and sandwich confidence intervals.
//
// With mu(dr, du) = r^{-1/2} dr sum_{w in U} delta_w(du) the per-observation
// score is sum_u F(M_u, V_theta(u)). Its expected Hessian at theta0 is
//   H = sqrt(pi) sum_u (2 V(u))^{-3/2} Vdot(u) Vdot(u)^T
// and the score-gradient covariance is
//   J = sum_{u,w} 4 Cov(g_u, g_w) Vdot(u) Vdot(w)^T / sqrt(V(u) V(w)),
// g_u = gamma_{1/2}(V(u) / M_u), both from dF/dv = 2 (g - sqrt(pi/2)) / sqrt(v).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxcrps/crps.hpp"
#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/models.hpp"
#include "maxcrps/nelder_mead.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/rng.hpp"
#include "maxcrps/sampling.hpp"
#include "maxcrps/special_fn.hpp"

namespace maxcrps {

inline constexpr std::size_t kDefaultDirectionCount = 1000;
inline constexpr std::size_t kDefaultMeatSamples = 10000;
inline constexpr std::size_t kMinMeatSamples = 1000;
/// Two-sided 95% standard normal quantile.
inline constexpr double kNormalQuantile975 = 1.959963984540054;

template <class Model>
concept ContinuousTailModel = requires(const Model& m, std::span<const double> theta, const DirectionSet& dirs,
                                       const ObservationSet& data, RngStream& stream) {
  { m.dimension() } -> std::convertible_to<std::size_t>;
  { m.parameter_count() } -> std::convertible_to<std::size_t>;
  { m.param_space() } -> std::convertible_to<ParamSpace>;
  { m.tail_at(theta, dirs) } -> std::convertible_to<std::vector<double>>;
  { m.tail_gradient_at(theta, dirs, nullptr) } -> std::convertible_to<Matrix>;
  { m.start_region(data) } -> std::convertible_to<StartRegion>;
  { sample(stream, m, theta, std::size_t{1}) } -> std::convertible_to<ObservationSet>;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] bool contains(double value) const noexcept { return lower <= value && value <= upper; }
};

struct SandwichCovariance {
  Matrix bread;      // H, p x p
  Matrix meat;       // J, p x p
  Matrix asym_cov;   // H^{-1} J H^{-1} / n
  std::size_t sample_size = 0;
  std::size_t mc_size = 0;
  std::uint64_t mc_seed = 0;
  std::uint64_t mc_stream = 0;
};

struct MeatOptions {
  std::size_t samples = kDefaultMeatSamples;
  RngStream stream{};
};

struct FitOptions {
  std::size_t multistarts = 5;
  double tolerance = 1e-8;
  std::size_t max_evaluations = 3000;
  double initial_step = 0.5;
  /// Explicit natural-scale starting points; overrides the multistart design.
  std::vector<std::vector<double>> starts;
  std::optional<StartRegion> start_region;
  bool intervals = true;
  MeatOptions meat{};
};

struct FitResult {
  std::vector<double> theta_hat;
  std::optional<std::size_t> candidate_index;
  std::vector<double> candidate_objectives;
  bool tie = false;
  double objective = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  bool converged = false;
  std::vector<std::string> warnings;
  std::optional<SandwichCovariance> sandwich;
  std::vector<Interval> intervals;
};

// ---------------------------------------------------------------------------
// Bread and meat

/// H = sqrt(pi) sum_u (2V)^{-3/2} Vdot Vdot^T, summed in canonical direction order.
[[nodiscard]] inline Matrix bread_from(std::span<const double> tail_values, const Matrix& gradients,
                                       const std::vector<Eigen::Index>& order) {
  const auto p = gradients.cols();
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(p * p));
  for (const Eigen::Index c : order) {
    const double v = tail_values[static_cast<std::size_t>(c)];
    const double weight = kSqrtPi * std::pow(2.0 * v, -1.5);
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        sums[static_cast<std::size_t>(a * p + b)].add(weight * gradients(c, a) * gradients(c, b));
      }
    }
  }
  Matrix h(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) h(a, b) = h(b, a) = sums[static_cast<std::size_t>(a * p + b)].value();
  }
  return h;
}

template <ContinuousTailModel Model>
[[nodiscard]] Matrix bread_matrix(const Model& model, const DirectionSet& dirs, std::span<const double> theta,
                                  std::vector<std::string>* warnings = nullptr) {
  const auto values = model.tail_at(theta, dirs);
  const Matrix grad = model.tail_gradient_at(theta, dirs, warnings);
  Matrix h = bread_from(values, grad, dirs.canonical_order());
  if (!cholesky(SymmetricMatrix(h))) {
    throw SingularBreadError("bread matrix is singular: tail gradients lie in a lower-dimensional subspace");
  }
  return h;
}

struct MeatResult {
  Matrix meat;
  /// Column means of gamma_{1/2}(V(u) / M_u), one per direction (index order).
  std::vector<double> gamma_means;
  std::size_t samples = 0;
};

/// Monte Carlo meat matrix. Draws come in blocks of 256 from streams derived
/// from the option stream by block index, so a larger N extends a smaller one.
template <ContinuousTailModel Model>
[[nodiscard]] MeatResult meat_matrix(const Model& model, const DirectionSet& dirs, std::span<const double> theta,
                                     const MeatOptions& options, std::vector<std::string>* warnings = nullptr) {
  if (options.samples < kMinMeatSamples) {
    throw ConfigError("meat_matrix: Monte Carlo size must be >= " + std::to_string(kMinMeatSamples) + ", got " +
                      std::to_string(options.samples));
  }
  const auto values = model.tail_at(theta, dirs);
  const Matrix grad = model.tail_gradient_at(theta, dirs, warnings);
  const auto p = grad.cols();
  const auto count = dirs.size();
  const auto& order = dirs.canonical_order();

  // Rows of A: 2 Vdot(u)^T / sqrt(V(u)).
  Matrix weights(count, p);
  for (Eigen::Index c = 0; c < count; ++c) {
    weights.row(c) = 2.0 * grad.row(c) / std::sqrt(values[static_cast<std::size_t>(c)]);
  }

  constexpr std::size_t block = 256;
  const std::size_t n = options.samples;
  Matrix scores(static_cast<Eigen::Index>(n), p);
  std::vector<CompensatedSum> gamma_sums(static_cast<std::size_t>(count));
  std::vector<double> gamma(static_cast<std::size_t>(count));
  for (std::size_t start = 0, b = 0; start < n; start += block, ++b) {
    RngStream stream = options.stream.derive(b);
    const std::size_t rows = std::min(block, n - start);
    const ObservationSet draws = sample(stream, model, theta, rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto x = draws.row(static_cast<Eigen::Index>(r));
      for (Eigen::Index c = 0; c < count; ++c) {
        const double m = max_linear_combination(x, dirs.direction(c));
        const double g = detail::gamma_half_unchecked(values[static_cast<std::size_t>(c)] / m);
        if (!std::isfinite(g)) {
          throw DataError("meat_matrix: non-finite gamma term at draw " + std::to_string(start + r));
        }
        gamma[static_cast<std::size_t>(c)] = g;
        gamma_sums[static_cast<std::size_t>(c)].add(g);
      }
      const auto k = static_cast<Eigen::Index>(start + r);
      for (Eigen::Index a = 0; a < p; ++a) {
        double y = 0.0;
        for (const Eigen::Index c : order) y += gamma[static_cast<std::size_t>(c)] * weights(c, a);
        scores(k, a) = y;
      }
    }
  }

  // J = (G_c A)^T (G_c A) / (N - 1), with G_c A = G A - 1 (gbar^T A).
  Vector mean = Vector::Zero(p);
  for (Eigen::Index a = 0; a < p; ++a) {
    CompensatedSum s;
    for (Eigen::Index k = 0; k < scores.rows(); ++k) s.add(scores(k, a));
    mean(a) = s.value() / static_cast<double>(n);
  }
  Matrix j(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      CompensatedSum s;
      for (Eigen::Index k = 0; k < scores.rows(); ++k) s.add((scores(k, a) - mean(a)) * (scores(k, b) - mean(b)));
      j(a, b) = j(b, a) = s.value() / static_cast<double>(n - 1);
    }
  }

  MeatResult result;
  result.meat = std::move(j);
  result.samples = n;
  result.gamma_means.resize(static_cast<std::size_t>(count));
  for (std::size_t c = 0; c < gamma_sums.size(); ++c) result.gamma_means[c] = gamma_sums[c].value() / static_cast<double>(n);
  return result;
}

/// asym_cov = H^{-1} J H^{-1} / n and 95% Wald intervals around theta_hat.
[[nodiscard]] inline std::pair<SandwichCovariance, std::vector<Interval>> sandwich(
    const Matrix& bread, const Matrix& meat, std::size_t n, std::span<const double> theta_hat) {
  if (n < 1) throw ContractError("sandwich: sample size must be >= 1");
  if (bread.rows() != meat.rows() || bread.rows() != static_cast<Eigen::Index>(theta_hat.size())) {
    throw ContractError("sandwich: bread, meat and parameter dimensions disagree");
  }
  const SymmetricMatrix h(bread);
  if (!cholesky(h)) throw SingularBreadError("sandwich: bread matrix is singular");
  const Matrix h_inv_j = solve_spd(h, SymmetricMatrix(meat).dense());
  Matrix cov = solve_spd(h, h_inv_j.transpose()) / static_cast<double>(n);
  cov = (0.5 * (cov + cov.transpose())).eval();

  std::vector<Interval> intervals;
  for (Eigen::Index k = 0; k < cov.rows(); ++k) {
    double variance = cov(k, k);
    if (variance < -1e-12) {
      throw NumericalError("sandwich: negative asymptotic variance for parameter " + std::to_string(k));
    }
    variance = std::max(variance, 0.0);
    const double half_width = kNormalQuantile975 * std::sqrt(variance);
    const double centre = theta_hat[static_cast<std::size_t>(k)];
    intervals.push_back({centre - half_width, centre + half_width});
  }
  SandwichCovariance result;
  result.bread = bread;
  result.meat = meat;
  result.asym_cov = std::move(cov);
  result.sample_size = n;
  return {std::move(result), std::move(intervals)};
}

// ---------------------------------------------------------------------------
// Fitting

namespace detail {

/// First `count` points of the Halton sequence in `dims` dimensions (index 1..count).
[[nodiscard]] inline std::vector<std::vector<double>> halton_points(std::size_t count, std::size_t dims) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  if (dims > std::size(primes)) throw ContractError("halton_points: too many dimensions");
  std::vector<std::vector<double>> points(count, std::vector<double>(dims));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < dims; ++k) {
      double f = 1.0;
      double value = 0.0;
      std::size_t index = i + 1;
      while (index > 0) {
        f /= primes[k];
        value += f * static_cast<double>(index % static_cast<std::size_t>(primes[k]));
        index /= static_cast<std::size_t>(primes[k]);
      }
      points[i][k] = value;
    }
  }
  return points;
}

/// Space-filling starts: Halton points of the start region, laid out in the
/// unconstrained coordinates.
[[nodiscard]] inline std::vector<std::vector<double>> multistart_points(const ParamSpace& space,
                                                                        const StartRegion& region,
                                                                        std::size_t count) {
  if (region.size() != space.size()) throw ContractError("start region has the wrong number of parameters");
  std::vector<double> lo(region.size());
  std::vector<double> hi(region.size());
  for (std::size_t k = 0; k < region.size(); ++k) {
    const auto& bound = space[k];
    double a = std::max(region[k].first, bound.lower + 1e-9 * std::max(1.0, std::abs(bound.lower)));
    double b = region[k].second;
    if (bound.bounded()) b = std::min(b, bound.upper - 1e-9 * std::max(1.0, std::abs(bound.upper)));
    if (!(a < b)) throw ConfigError("start region for " + bound.name + " is empty");
    lo[k] = a;
    hi[k] = b;
  }
  const auto z_lo = space.to_unconstrained(lo);
  const auto z_hi = space.to_unconstrained(hi);
  std::vector<std::vector<double>> starts;
  for (const auto& unit : halton_points(count, region.size())) {
    std::vector<double> z(unit.size());
    for (std::size_t k = 0; k < unit.size(); ++k) z[k] = z_lo[k] + unit[k] * (z_hi[k] - z_lo[k]);
    starts.push_back(space.from_unconstrained(z));
  }
  return starts;
}

}  // namespace detail

/// sum_i sum_u F(M_u^(i), V_theta(u)) for a continuous model; +inf where V
/// cannot be evaluated (e.g. a non-PD correlation matrix).
template <ContinuousTailModel Model>
[[nodiscard]] double model_objective(const Model& model, const ProjectionMatrix& projections,
                                     const DirectionSet& dirs, std::span<const double> theta) {
  try {
    const auto values = model.tail_at(theta, dirs);
    return crps_objective(projections, values);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Adds the sandwich covariance and intervals to a converged fit.
template <ContinuousTailModel Model>
void attach_intervals(FitResult& fit, const Model& model, const DirectionSet& dirs, std::size_t n,
                      const MeatOptions& meat_options) {
  const Matrix h = bread_matrix(model, dirs, fit.theta_hat, &fit.warnings);
  const MeatResult meat = meat_matrix(model, dirs, fit.theta_hat, meat_options, &fit.warnings);
  auto [cov, intervals] = sandwich(h, meat.meat, n, fit.theta_hat);
  cov.mc_size = meat.samples;
  cov.mc_seed = meat_options.stream.seed();
  cov.mc_stream = meat_options.stream.stream_id();
  fit.sandwich = std::move(cov);
  fit.intervals = std::move(intervals);
}

/// Minimizes the CRPS objective by Nelder-Mead in unconstrained coordinates
/// from several starting points, each followed by one restart at its optimum.
template <ContinuousTailModel Model>
[[nodiscard]] FitResult fit_continuous(const ObservationSet& data, const DirectionSet& dirs, const Model& model,
                                       const FitOptions& options = {}) {
  if (static_cast<std::size_t>(data.dimension()) != model.dimension()) {
    throw ContractError("fit: data have " + std::to_string(data.dimension()) + " columns but the model has " +
                        std::to_string(model.dimension()) + " sites");
  }
  const ProjectionMatrix projections = project(data, dirs);
  const ParamSpace space = model.param_space();

  std::vector<std::vector<double>> starts = options.starts;
  if (starts.empty()) {
    const StartRegion region = options.start_region ? *options.start_region : model.start_region(data);
    starts = detail::multistart_points(space, region, std::max<std::size_t>(options.multistarts, 1));
  }

  const auto objective_z = [&](const std::vector<double>& z) {
    const auto theta = space.from_unconstrained(z);
    if (!space.contains(theta)) return std::numeric_limits<double>::infinity();
    return model_objective(model, projections, dirs, theta);
  };

  NelderMeadOptions nm;
  nm.initial_step = options.initial_step;
  nm.tolerance = options.tolerance;
  nm.max_evaluations = options.max_evaluations;

  FitResult fit;
  std::optional<NelderMeadResult> best;
  for (const auto& start : starts) {
    space.require(start, "fit_continuous start");
    const auto z0 = space.to_unconstrained(start);
    if (!std::isfinite(objective_z(z0))) {
      fit.warnings.push_back("objective not finite at a starting point; start discarded");
      continue;
    }
    NelderMeadResult run = nelder_mead(objective_z, z0, nm);
    fit.evaluations += run.evaluations + 1;
    fit.iterations += run.iterations;
    ++fit.restarts;
    // Restart from the optimum with a fresh simplex to guard against collapse.
    NelderMeadOptions polish = nm;
    polish.initial_step = 0.1 * nm.initial_step;
    NelderMeadResult refined = nelder_mead(objective_z, run.x, polish);
    fit.evaluations += refined.evaluations;
    fit.iterations += refined.iterations;
    // The restart simplex contains run.x, so its optimum is never worse.
    run.x = std::move(refined.x);
    run.value = refined.value;
    run.converged = refined.converged;
    if (!best || run.value < best->value) best = std::move(run);
  }
  if (!best) {
    fit.converged = false;
    fit.objective = std::numeric_limits<double>::infinity();
    fit.warnings.push_back("no usable starting point");
    return fit;
  }
  fit.theta_hat = space.from_unconstrained(best->x);
  fit.objective = best->value;
  fit.converged = best->converged;
  if (!fit.converged) fit.warnings.push_back("optimizer did not reach the objective tolerance");

  if (options.intervals && fit.converged) {
    try {
      attach_intervals(fit, model, dirs, static_cast<std::size_t>(data.rows()), options.meat);
    } catch (const NumericalError& e) {
      fit.warnings.push_back(std::string("intervals unavailable: ") + e.what());
    }
  }
  return fit;
}

/// Exhaustive search over a finite candidate list; ties go to the lowest index.
[[nodiscard]] inline FitResult fit_finite(const ObservationSet& data, const DirectionSet& dirs,
                                          const MaxLinearModel& model) {
  if (static_cast<std::size_t>(data.dimension()) != model.dimension()) {
    throw ContractError("fit_finite: data have " + std::to_string(data.dimension()) + " columns but the model has " +
                        std::to_string(model.dimension()) + " sites");
  }
  const ProjectionMatrix projections = project(data, dirs);
  FitResult fit;
  std::size_t best = 0;
  for (std::size_t c = 0; c < model.candidate_count(); ++c) {
    const double value = crps_objective(projections, model.tail_at(c, dirs));
    fit.candidate_objectives.push_back(value);
    if (value < fit.candidate_objectives[best]) best = c;
  }
  for (std::size_t c = 0; c < fit.candidate_objectives.size(); ++c) {
    if (c != best && fit.candidate_objectives[c] == fit.candidate_objectives[best]) fit.tie = true;
  }
  if (fit.tie) fit.warnings.push_back("tie between candidates; lowest index selected");
  fit.candidate_index = best;
  fit.theta_hat = {static_cast<double>(best)};
  fit.objective = fit.candidate_objectives[best];
  fit.evaluations = model.candidate_count();
  fit.converged = true;
  return fit;
}

}  // namespace maxcrps
