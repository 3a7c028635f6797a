#include <gtest/gtest.h>

#include "helpers.hpp"
#include "opkrr/estimator.hpp"

namespace opkrr {
namespace {

using testing::random_kernel;
using testing::random_matrix;

KernelPtr scalar_identity() {
  return make_separable_kernel(ScalarKernel::gaussian(1.0), Eigen::MatrixXd::Identity(1, 1));
}

TrainingSet random_data(Index p, Index d, Index n, Rng& rng) {
  return {random_matrix(p, n, rng), random_matrix(d, n, rng)};
}

TEST(Fit, OneByOneHandSolve) {
  const TrainingSet data(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Constant(1, 1, 2.0));
  const auto model = fit(data, scalar_identity(), 1.0);
  EXPECT_NEAR(model.alphas()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(predict(model, Eigen::VectorXd::Zero(1))(0), 1.0, 1e-15);
}

TEST(Fit, HeavyRegularisationShrinksToZero) {
  Rng rng = make_stream(41);
  const auto data = random_data(2, 2, 10, rng);
  const auto model = fit(data, random_kernel(2, rng), 1e9);
  EXPECT_LT(model.alphas().norm(), 1e-8);
  EXPECT_LT(predict(model, data.inputs().col(0)).norm(), 1e-8);
}

TEST(Fit, ZeroOutputsGiveZeroModel) {
  Rng rng = make_stream(42);
  const TrainingSet data(random_matrix(3, 7, rng), Eigen::MatrixXd::Zero(2, 7));
  const auto model = fit(data, random_kernel(2, rng), 0.1);
  EXPECT_EQ(model.alphas().norm(), 0.0);
}

TEST(Fit, SolvesNormalEquations) {
  Rng rng = make_stream(43);
  for (int t = 0; t < 10; ++t) {
    const auto kernel = random_kernel(3, rng);
    const auto data = random_data(2, 3, 40, rng);
    const double lambda = 1e-3;
    const auto model = fit(data, kernel, lambda);
    // independent dense solve of (G + n lambda I) alpha = y
    Eigen::MatrixXd system = testing::naive_gram(testing::separable(kernel), data.inputs(), data.inputs());
    system.diagonal().array() += 40 * lambda;
    const Eigen::VectorXd expected = system.fullPivLu().solve(testing::flat(data.outputs()));
    EXPECT_LE((testing::flat(model.alphas()) - expected).norm(), 1e-8 * (1 + expected.norm()));
    EXPECT_LE(normal_equation_residual(model, data), 1e-8 * (1 + data.outputs().norm()));
  }
}

TEST(Fit, RepeatedInputsMatchFullSolve) {
  Rng rng = make_stream(44);
  const auto kernel = random_kernel(2, rng);
  const Points support = random_matrix(2, 3, rng);
  Points xs(2, 12);
  for (Index i = 0; i < 12; ++i) xs.col(i) = support.col(i % 3);
  const TrainingSet data(xs, random_matrix(2, 12, rng));
  const auto grouped = fit(data, kernel, 0.05);
  FitOptions plain;
  plain.group_repeated_inputs = false;
  const auto full = fit(data, kernel, 0.05, plain);
  EXPECT_LE((grouped.alphas() - full.alphas()).norm(), 1e-10);
  EXPECT_LE(normal_equation_residual(grouped, data), 1e-10);
}

TEST(Fit, Errors) {
  Rng rng = make_stream(45);
  const auto data = random_data(2, 2, 5, rng);
  EXPECT_THROW(fit(data, random_kernel(2, rng), 0.0), std::invalid_argument);
  EXPECT_THROW(fit(data, random_kernel(2, rng), -1.0), std::invalid_argument);
  EXPECT_THROW(fit(data, random_kernel(3, rng), 1.0), std::invalid_argument);
  EXPECT_THROW(TrainingSet(Points::Zero(2, 3), Eigen::MatrixXd::Zero(2, 4)), std::invalid_argument);
}

TEST(Predict, FarFromAnchorsIsNearZero) {
  Rng rng = make_stream(46);
  const auto data = random_data(2, 2, 8, rng);
  const auto model = fit(data, make_separable_kernel(ScalarKernel::gaussian(0.5), Eigen::MatrixXd::Identity(2, 2)), 0.1);
  EXPECT_LE(predict(model, Eigen::Vector2d(100, -100)).norm(), 1e-6);
}

TEST(Predict, AgreesWithScaledSample) {
  Rng rng = make_stream(47);
  const auto data = random_data(3, 2, 9, rng);
  const auto model = fit(data, random_kernel(2, rng), 0.2);
  const Eigen::VectorXd x = random_matrix(3, 1, rng);
  const auto s = sample(model.expansion(), Eigen::MatrixXd(x));
  EXPECT_LE((predict(model, x) - Eigen::VectorXd(s.block(0))).norm(), 1e-12);
}

TEST(EmpiricalRisk, Definitions) {
  Rng rng = make_stream(48);
  const auto kernel = random_kernel(2, rng);
  const auto data = random_data(2, 2, 6, rng);
  const auto zero = KernelExpansion::zero(kernel, 2);
  EXPECT_NEAR(empirical_risk(zero, data).unregularised, data.outputs().squaredNorm() / 6.0, 1e-14);

  // one sample per anchor with coefficients solving G c = y interpolates
  const Eigen::MatrixXd g = testing::naive_gram(testing::separable(kernel), data.inputs(), data.inputs());
  const Eigen::VectorXd c = g.fullPivLu().solve(testing::flat(data.outputs()));
  const KernelExpansion interp(kernel, data.inputs(), Eigen::Map<const Eigen::MatrixXd>(c.data(), 2, 6));
  EXPECT_LT(empirical_risk(interp, data).unregularised, 1e-10);
}

TEST(EmpiricalRisk, MatchesLoopOracle) {
  Rng rng = make_stream(49);
  const auto kernel = random_kernel(3, rng);
  const auto f = testing::random_expansion(kernel, 2, 5, rng);
  const auto data = random_data(2, 3, 11, rng);
  double sum = 0.0;
  for (Index i = 0; i < 11; ++i) {
    Eigen::VectorXd fx = Eigen::VectorXd::Zero(3);
    for (Index j = 0; j < 5; ++j)
      fx += testing::naive_block(testing::separable(kernel), data.inputs().col(i), f.anchors().col(j)) * f.coeffs().col(j);
    sum += (fx - data.outputs().col(i)).squaredNorm();
  }
  const double lambda = 0.3;
  const auto risk = empirical_risk(f, data, lambda);
  EXPECT_NEAR(risk.unregularised, sum / 11.0, 1e-10);
  EXPECT_NEAR(risk.regularised, sum / 11.0 + lambda * h_norm_sq(f), 1e-10);
}

TEST(RiskGradient, VanishesAtFit) {
  Rng rng = make_stream(50);
  const auto data = random_data(2, 2, 30, rng);
  const auto model = fit(data, random_kernel(2, rng), 0.01);
  const auto check = minimiser_certificate(model, data, 50, 1e-4, 7);
  EXPECT_EQ(check.probes, 50);
  EXPECT_LE(check.max_abs_analytic, 1e-7 * (1 + data.outputs().norm()));
}

TEST(RiskGradient, DescentAtZero) {
  Rng rng = make_stream(51);
  const auto kernel = random_kernel(2, rng);
  const auto data = random_data(2, 2, 10, rng);
  const auto zero = KernelExpansion::zero(kernel, 2);
  const auto v = sample_adjoint(kernel, data.inputs(), data.stacked_outputs());
  const double h = 1e-4;
  const double fd = (empirical_risk(v.scaled(h), data, 0.1).regularised -
                     empirical_risk(v.scaled(-h), data, 0.1).regularised) / (2 * h);
  EXPECT_LT(fd, 0.0);
  EXPECT_LT(h_inner(risk_gradient(zero, data, 0.1), v), 0.0);
}

TEST(RiskGradient, MatchesFiniteDifferences) {
  Rng rng = make_stream(52);
  for (int t = 0; t < 20; ++t) {
    const auto kernel = random_kernel(2, rng);
    const auto data = random_data(3, 2, 15, rng);
    const auto f = testing::random_expansion(kernel, 3, 4, rng);
    const auto dirs = random_unit_directions(kernel, data, 10, rng);
    const auto check = directional_derivative_check(f, data, 0.05, dirs, 1e-4);
    EXPECT_LE(check.max_rel_mismatch, 1e-5);
  }
}

TEST(ObjectiveComparison, Rivals) {
  Rng rng = make_stream(53);
  const auto kernel = random_kernel(2, rng);
  const auto data = random_data(2, 2, 12, rng);
  const auto model = fit(data, kernel, 0.1);
  std::vector<KernelExpansion> rivals{model.expansion(), KernelExpansion::zero(kernel, 2)};
  const auto dirs = random_unit_directions(kernel, data, 100, rng);
  for (const auto& v : dirs) rivals.push_back(model.expansion() + v.scaled(1e-3));
  EXPECT_TRUE(objective_comparison(model, data, rivals));
  EXPECT_LE(empirical_risk(model.expansion(), data, 0.1).regularised, data.outputs().squaredNorm() / 12.0);
}

}  // namespace
}  // namespace opkrr
