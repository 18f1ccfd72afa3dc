#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "maxcrps/estimator.hpp"
#include "support/oracles.hpp"

using namespace maxcrps;

namespace {

const std::vector<double> kTheta0{5.0, 0.7};

/// Var of gamma_{1/2}(E), E ~ Exp(1): V/M_u is unit exponential under the model.
double gamma_of_exponential_variance() {
  const auto g = [](double e) { return std::sqrt(std::numbers::pi) * oracle::erf_series(std::sqrt(e)); };
  const double m1 = oracle::integrate([&](double e) { return g(e) * std::exp(-e); }, 0.0, 60.0, 1e-14);
  const double m2 = oracle::integrate([&](double e) { return g(e) * g(e) * std::exp(-e); }, 0.0, 60.0, 1e-14);
  return m2 - m1 * m1;
}

DirectionSet directions(std::uint64_t seed, Eigen::Index d, Eigen::Index count) {
  RngStream s(seed, 0);
  return build_direction_set(s, d, count);
}

ObservationSet logistic_data(std::uint64_t seed, std::size_t n, std::size_t d = 5) {
  RngStream s(seed, 1);
  return sample_logistic(s, {kTheta0[0], kTheta0[1]}, d, n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Bread

TEST(Bread, ScalarCaseIsExpectedCrpsCurvature) {
  // One parameter, one direction, V(theta) = theta^2.
  const double t0 = 1.3;
  const std::vector<double> v{t0 * t0};
  Matrix grad(1, 1);
  grad(0, 0) = 2.0 * t0;
  const Matrix h = bread_from(v, grad, {0});
  const double fd = (expected_crps(t0 * t0, (t0 + 1e-4) * (t0 + 1e-4)) - 2.0 * expected_crps(t0 * t0, t0 * t0) +
                     expected_crps(t0 * t0, (t0 - 1e-4) * (t0 - 1e-4))) /
                    1e-8;
  EXPECT_NEAR(h(0, 0) / fd, 1.0, 1e-4);
}

TEST(Bread, DuplicatedDirectionDoubles) {
  const std::vector<double> one{2.0};
  const std::vector<double> two{2.0, 2.0};
  Matrix g1(1, 2);
  g1 << 0.3, -1.1;
  Matrix g2(2, 2);
  g2 << 0.3, -1.1, 0.3, -1.1;
  const Matrix h1 = bread_from(one, g1, {0});
  const Matrix h2 = bread_from(two, g2, {0, 1});
  EXPECT_EQ(h2, 2.0 * h1);
}

TEST(Bread, LogisticIsSymmetricPositiveDefinite) {
  const LogisticModel model(5);
  const Matrix h = bread_matrix(model, directions(1, 5, 100), kTheta0);
  EXPECT_EQ(h, h.transpose());
  EXPECT_GT(symmetric_eigen_min(SymmetricMatrix(h)), 0.0);
}

TEST(Bread, SingularWhenGradientsAreCollinear) {
  const std::vector<double> v{1.0, 2.0};
  Matrix g(2, 2);
  g << 1.0, 2.0, 2.0, 4.0;
  const Matrix h = bread_from(v, g, {0, 1});
  EXPECT_FALSE(cholesky(SymmetricMatrix(h)).has_value());
  EXPECT_THROW((void)sandwich(h, h, 10, std::vector<double>{1.0, 1.0}), SingularBreadError);
}

// ---------------------------------------------------------------------------
// Meat

TEST(Meat, GammaColumnMeans) {
  const LogisticModel model(4);
  const auto dirs = directions(2, 4, 20);
  const MeatResult meat = meat_matrix(model, dirs, kTheta0, {10000, RngStream(3, 0)});
  const double se = std::sqrt(gamma_of_exponential_variance() / 10000.0);
  for (const double g : meat.gamma_means) EXPECT_NEAR(g, std::sqrt(std::numbers::pi / 2.0), 3.0 * se);
}

TEST(Meat, SingleDirectionReducesToScalarVariance) {
  const LogisticModel model(3);
  const auto dirs = directions(4, 3, 1);
  const std::size_t n = 20000;
  const MeatResult meat = meat_matrix(model, dirs, kTheta0, {n, RngStream(5, 0)});

  // Independent draws: sample variance of gamma_{1/2}(V / M_u).
  const double v = model.tail_at(kTheta0, dirs)[0];
  const auto grad = v_logistic_grad({kTheta0[0], kTheta0[1]}, dirs.direction(0));
  RngStream s(6, 0);
  const auto draws = sample_logistic(s, {kTheta0[0], kTheta0[1]}, 3, n);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = draws.row(static_cast<Eigen::Index>(i));
    double m = 0.0;
    for (std::size_t j = 0; j < 3; ++j) m = std::max(m, x[j] / dirs.direction(0)[j]);
    g[i] = std::sqrt(std::numbers::pi) * oracle::erf_series(std::sqrt(v / m));
  }
  const double mean = oracle::mean_se(g).mean;
  double m2 = 0.0;
  double m4 = 0.0;
  for (const double x : g) {
    m2 += (x - mean) * (x - mean);
    m4 += std::pow(x - mean, 4);
  }
  m2 /= static_cast<double>(n - 1);
  m4 /= static_cast<double>(n);
  const double var_se = std::sqrt((m4 - m2 * m2) / static_cast<double>(n));
  // Score derivative 2 (g - sqrt(pi/2)) / sqrt(V) gives J = 4 Var(g) Vdot Vdot^T / V.
  for (int a = 0; a < 2; ++a) {
    const double scale = 4.0 * grad[static_cast<std::size_t>(a)] * grad[static_cast<std::size_t>(a)] / v;
    EXPECT_NEAR(meat.meat(a, a) / scale, m2, 3.0 * std::sqrt(2.0) * var_se) << a;
  }
}

TEST(Meat, PositiveSemidefinite) {
  const LogisticModel model(5);
  const MeatResult meat = meat_matrix(model, directions(7, 5, 200), kTheta0, {2000, RngStream(8, 0)});
  EXPECT_GE(symmetric_eigen_min(SymmetricMatrix(meat.meat)), -1e-10 * meat.meat.trace());
  EXPECT_EQ(meat.meat, meat.meat.transpose());
}

TEST(Meat, RejectsSmallMonteCarlo) {
  EXPECT_THROW((void)meat_matrix(LogisticModel(2), directions(1, 2, 3), kTheta0, {999, RngStream(1, 0)}),
               ConfigError);
}

TEST(Meat, ConsistentWhenDoubled) {
  const LogisticModel model(4);
  const auto dirs = directions(9, 4, 50);
  const std::size_t n = 4096;
  const Matrix a = meat_matrix(model, dirs, kTheta0, {n, RngStream(10, 0)}).meat;
  const Matrix b = meat_matrix(model, dirs, kTheta0, {2 * n, RngStream(10, 0)}).meat;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      // Normal-theory SE of a covariance entry.
      const double se = std::sqrt((a(i, i) * a(j, j) + a(i, j) * a(i, j)) / static_cast<double>(n));
      EXPECT_NEAR(a(i, j), b(i, j), 3.0 * se) << i << j;
    }
  }
}

// ---------------------------------------------------------------------------
// Sandwich

TEST(Sandwich, MeatEqualsBread) {
  Matrix h(2, 2);
  h << 3.0, 0.5, 0.5, 1.0;
  const auto [cov, intervals] = sandwich(h, h, 50, std::vector<double>{1.0, 2.0});
  EXPECT_LE((cov.asym_cov - h.inverse() / 50.0).norm(), 1e-14);
  EXPECT_EQ(cov.asym_cov, cov.asym_cov.transpose());
  ASSERT_EQ(intervals.size(), 2u);
  const double half = kNormalQuantile975 * std::sqrt(cov.asym_cov(1, 1));
  EXPECT_NEAR(intervals[1].lower, 2.0 - half, 1e-15);
  EXPECT_NEAR(intervals[1].upper, 2.0 + half, 1e-15);
}

TEST(Sandwich, ScalarCase) {
  Matrix h(1, 1);
  h << 4.0;
  Matrix j(1, 1);
  j << 3.0;
  const auto [cov, intervals] = sandwich(h, j, 10, std::vector<double>{0.0});
  EXPECT_NEAR(cov.asym_cov(0, 0), 3.0 / (10.0 * 16.0), 1e-16);
}

TEST(Sandwich, NegativeVarianceIsNumericalError) {
  Matrix h = Matrix::Identity(1, 1);
  Matrix j(1, 1);
  j << -1.0;
  EXPECT_THROW((void)sandwich(h, j, 1, std::vector<double>{0.0}), NumericalError);
}

// ---------------------------------------------------------------------------
// Fitting

TEST(FitContinuous, RecoversLogisticParameters) {
  const auto data = logistic_data(21, 1000);
  const auto dirs = directions(22, 5, 1000);
  FitOptions options;
  options.intervals = false;
  const FitResult fit = fit_continuous(data, dirs, LogisticModel(5), options);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.theta_hat[0], 5.0, 0.5);
  EXPECT_NEAR(fit.theta_hat[1], 0.7, 0.05);
  EXPECT_EQ(fit.restarts, 5u);
}

TEST(FitContinuous, StartAtTruthDoesNotIncreaseObjective) {
  const auto data = logistic_data(23, 200);
  const auto dirs = directions(24, 5, 200);
  const LogisticModel model(5);
  FitOptions options;
  options.intervals = false;
  options.starts = {kTheta0};
  const FitResult fit = fit_continuous(data, dirs, model, options);
  EXPECT_LE(fit.objective, model_objective(model, project(data, dirs), dirs, kTheta0));
  EXPECT_TRUE(fit.converged);
}

TEST(FitContinuous, Deterministic) {
  const auto data = logistic_data(25, 100);
  const auto dirs = directions(26, 5, 300);
  FitOptions options;
  options.meat = {2000, RngStream(27, 0)};
  const FitResult a = fit_continuous(data, dirs, LogisticModel(5), options);
  const FitResult b = fit_continuous(data, dirs, LogisticModel(5), options);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.objective, b.objective);
  ASSERT_TRUE(a.sandwich && b.sandwich);
  EXPECT_EQ(a.sandwich->asym_cov, b.sandwich->asym_cov);
  EXPECT_EQ(a.sandwich->mc_size, 2000u);
  EXPECT_EQ(a.sandwich->mc_seed, 27u);
}

TEST(FitContinuous, DirectionRowOrderIsIrrelevant) {
  const auto data = logistic_data(28, 100);
  const auto dirs = directions(29, 5, 300);
  RowMatrix reversed = dirs.values().colwise().reverse();
  const DirectionSet flipped(reversed);
  const LogisticModel model(5);

  EXPECT_EQ(model_objective(model, project(data, dirs), dirs, kTheta0),
            model_objective(model, project(data, flipped), flipped, kTheta0));
  FitOptions options;
  options.meat = {2000, RngStream(30, 0)};
  const FitResult a = fit_continuous(data, dirs, model, options);
  const FitResult b = fit_continuous(data, flipped, model, options);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  ASSERT_TRUE(a.sandwich && b.sandwich);
  EXPECT_EQ(a.sandwich->bread, b.sandwich->bread);
}

TEST(FitContinuous, SiteRelabelingEquivariance) {
  const auto data = logistic_data(31, 100, 4);
  const auto dirs = directions(32, 4, 300);
  const std::vector<Eigen::Index> perm{2, 0, 3, 1};
  RowMatrix x(data.rows(), 4);
  RowMatrix u(dirs.size(), 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    x.col(j) = data.values().col(perm[static_cast<std::size_t>(j)]);
    u.col(j) = dirs.values().col(perm[static_cast<std::size_t>(j)]);
  }
  FitOptions options;
  options.intervals = false;
  const FitResult a = fit_continuous(data, dirs, LogisticModel(4), options);
  const FitResult b = fit_continuous(ObservationSet(x), DirectionSet(u), LogisticModel(4), options);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(b.theta_hat[k] / a.theta_hat[k], 1.0, 1e-6);
}

TEST(FitContinuous, IntervalsOnlyWhenConverged) {
  const auto data = logistic_data(33, 100);
  const auto dirs = directions(34, 5, 100);
  FitOptions options;
  options.max_evaluations = 5;
  options.meat = {1000, RngStream(1, 0)};
  const FitResult fit = fit_continuous(data, dirs, LogisticModel(5), options);
  EXPECT_FALSE(fit.converged);
  EXPECT_TRUE(fit.intervals.empty());
  EXPECT_FALSE(fit.sandwich.has_value());
}

TEST(FitContinuous, DimensionMismatch) {
  EXPECT_THROW((void)fit_continuous(logistic_data(1, 10, 3), directions(1, 3, 10), LogisticModel(4)), ContractError);
}

TEST(FitFinite, SingleCandidate) {
  const auto spec = bivariate_confounded_pair();
  RngStream s(40, 0);
  const auto data = sample_max_linear(s, spec, 50);
  const FitResult fit = fit_finite(data, directions(41, 3, 50), MaxLinearModel(MaxLinearSpec{{spec.candidates[0]}, 0}));
  EXPECT_EQ(fit.candidate_index, 0u);
  EXPECT_FALSE(fit.tie);
}

TEST(FitFinite, TiesGoToLowestIndex) {
  const auto spec = bivariate_confounded_pair();
  RngStream s(42, 0);
  const auto data = sample_max_linear(s, spec, 50);
  const MaxLinearModel twins(MaxLinearSpec{{spec.candidates[1], spec.candidates[1]}, 0});
  const FitResult fit = fit_finite(data, directions(43, 3, 50), twins);
  EXPECT_EQ(fit.candidate_index, 0u);
  EXPECT_TRUE(fit.tie);
  EXPECT_FALSE(fit.warnings.empty());
}

TEST(FitFinite, SelectsGeneratingMatrixAtLargeSamples) {
  const MaxLinearModel model(bivariate_confounded_pair());
  int correct = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    RngStream s(44, r);
    const auto data = sample(s, model, std::size_t{1}, 1000);
    correct += fit_finite(data, directions(45 + r, 3, 1000), model).candidate_index == 1u;
  }
  EXPECT_GE(correct, 16);
}

TEST(Multistart, PointsAreInsideRegion) {
  const auto space = LogisticModel(3).param_space();
  const auto pts = detail::multistart_points(space, {{1.0, 4.0}, {0.2, 0.9}}, 7);
  ASSERT_EQ(pts.size(), 7u);
  for (const auto& p : pts) {
    EXPECT_GE(p[0], 1.0);
    EXPECT_LE(p[0], 4.0);
    EXPECT_GE(p[1], 0.2);
    EXPECT_LE(p[1], 0.9);
  }
}

TEST(NelderMead, Rosenbrock) {
  const auto f = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2) + 1.0;
  };
  NelderMeadOptions options;
  options.tolerance = 1e-14;
  options.max_evaluations = 20000;
  const auto r = nelder_mead(f, {-1.2, 1.0}, options);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, NonFiniteTreatedAsInfinity) {
  const auto f = [](const std::vector<double>& x) { return x[0] < 0.0 ? std::nan("") : (x[0] - 2.0) * (x[0] - 2.0) + 1.0; };
  const auto r = nelder_mead(f, {0.5});
  EXPECT_NEAR(r.x[0], 2.0, 1e-3);
}
