#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace maxcrps {

struct NelderMeadOptions {
  double initial_step = 0.5;
  /// Stop when (f_worst - f_best) <= tolerance * |f_best|.
  double tolerance = 1e-8;
  std::size_t max_evaluations = 2000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// objective values are treated as +inf.
template <class Objective>
[[nodiscard]] NelderMeadResult nelder_mead(Objective&& objective, const std::vector<double>& start,
                                           const NelderMeadOptions& options = {}) {
  const std::size_t p = start.size();
  NelderMeadResult result;
  const auto evaluate = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double value = objective(x);
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(p + 1, start);
  std::vector<double> values(p + 1);
  for (std::size_t k = 0; k < p; ++k) simplex[k + 1][k] += options.initial_step;
  for (std::size_t k = 0; k <= p; ++k) values[k] = evaluate(simplex[k]);

  std::vector<std::size_t> order(p + 1);
  std::vector<double> centroid(p);
  std::vector<double> trial(p);
  std::vector<double> second(p);
  const auto point_along = [&](double coefficient, std::vector<double>& out, const std::vector<double>& worst) {
    for (std::size_t j = 0; j < p; ++j) out[j] = centroid[j] + coefficient * (worst[j] - centroid[j]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t next_worst = order[p - (p > 0 ? 1 : 0)];

    const double spread = values[worst] - values[best];
    if (std::isfinite(values[best]) && spread <= options.tolerance * std::abs(values[best])) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= p; ++k) {
      if (k == worst) continue;
      for (std::size_t j = 0; j < p; ++j) centroid[j] += simplex[k][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(p);

    point_along(-1.0, trial, simplex[worst]);
    const double reflected = evaluate(trial);
    if (reflected < values[best]) {
      point_along(-2.0, second, simplex[worst]);
      const double expanded = evaluate(second);
      if (expanded < reflected) {
        simplex[worst] = second;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
      continue;
    }
    if (reflected < values[next_worst]) {
      simplex[worst] = trial;
      values[worst] = reflected;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst point.
    const bool outside = reflected < values[worst];
    point_along(outside ? -0.5 : 0.5, second, simplex[worst]);
    const double contracted = evaluate(second);
    if (contracted < (outside ? reflected : values[worst])) {
      simplex[worst] = second;
      values[worst] = contracted;
      continue;
    }
    for (std::size_t k = 0; k <= p; ++k) {
      if (k == best) continue;
      for (std::size_t j = 0; j < p; ++j) simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
      values[k] = evaluate(simplex[k]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

}  // namespace maxcrps
