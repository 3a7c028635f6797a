#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "opkrr/discrete_oracle.hpp"
#include "opkrr/experiments.hpp"

namespace opkrr {
namespace {

using testing::random_kernel;
using testing::random_matrix;

KernelPtr unit_kernel() { return make_separable_kernel(ScalarKernel::gaussian(1.0), Eigen::MatrixXd::Identity(1, 1)); }

DiscretePopulation single_atom(double target, NoiseLaw noise = NoiseLaw::none()) {
  return {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 1, target), noise};
}

WellSpecifiedPopulation random_member(Index d, Index m, Rng& rng, NoiseLaw noise = NoiseLaw::none()) {
  return random_well_specified(random_kernel(d, rng), m, 2, noise, rng);
}

TEST(DiscretePopulation, Validation) {
  const Eigen::MatrixXd support = Eigen::MatrixXd::Zero(1, 2);
  EXPECT_THROW(DiscretePopulation(support, Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Zero(1, 2), NoiseLaw::none()),
               std::invalid_argument);  // duplicate atoms
  Eigen::MatrixXd distinct(1, 2);
  distinct << 0, 1;
  EXPECT_THROW(DiscretePopulation(distinct, Eigen::Vector2d(0.5, 0.6), Eigen::MatrixXd::Zero(1, 2), NoiseLaw::none()),
               std::invalid_argument);
  EXPECT_THROW(DiscretePopulation(distinct, Eigen::Vector2d(1.0, 0.0), Eigen::MatrixXd::Zero(1, 2), NoiseLaw::none()),
               std::invalid_argument);
  EXPECT_NO_THROW(DiscretePopulation(distinct, Eigen::Vector2d(0.25, 0.75), Eigen::MatrixXd::Zero(1, 2), NoiseLaw::none()));
}

TEST(IotaStar, SingleAtom) {
  const auto pop = single_atom(1.0);
  const Eigen::MatrixXd values = Eigen::MatrixXd::Constant(1, 1, 3.0);
  const auto g = iota_star(pop, unit_kernel(), values);
  const auto expected = KernelExpansion::single(unit_kernel(), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_LE(h_norm(g - expected), 1e-14);
  EXPECT_EQ(h_norm(iota_star(pop, unit_kernel(), Eigen::MatrixXd::Zero(1, 1))), 0.0);
}

TEST(IotaStar, MonteCarloAverageOfAdjoint) {
  Rng rng = make_stream(61);
  const auto member = random_member(2, 3, rng);
  const auto& pop = member.population;
  const auto kernel = member.spec.fstar.kernel_ptr();
  const Eigen::MatrixXd values = random_matrix(2, 3, rng);
  const auto data = sample_dataset(pop, 100000, 5);
  Eigen::MatrixXd ys(2, data.size());
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < pop.atoms(); ++j) {
      if (data.inputs().col(i) == pop.support().col(j)) ys.col(i) = values.col(j);
    }
  }
  const auto mc = sample_adjoint(kernel, data.inputs(), StackedOutputs(ys));
  // same function with its 1e5 anchors merged onto the atoms
  const KernelExpansion merged(kernel, pop.support(), support_coordinates(mc, pop.support()));
  EXPECT_LE(h_norm(merged - iota_star(pop, kernel, values)), 1e-2);
}

TEST(PopulationMinimiser, SingleAtomHandValue) {
  const auto pop = single_atom(1.0);
  const auto f = population_minimiser(pop, unit_kernel(), 1.0);
  EXPECT_NEAR(f(Eigen::VectorXd::Zero(1))(0), 0.5, 1e-15);
  EXPECT_NEAR(excess_risk(pop, f), 0.25, 1e-15);
  for (double lambda : {0.1, 0.5, 2.0}) {
    const double expected = lambda * lambda / ((1 + lambda) * (1 + lambda));
    EXPECT_NEAR(excess_risk(pop, population_minimiser(pop, unit_kernel(), lambda)), expected, 1e-14);
  }
}

TEST(PopulationMinimiser, LargeLambdaVanishes) {
  Rng rng = make_stream(62);
  const auto member = random_member(2, 4, rng);
  EXPECT_LT(h_norm(population_minimiser(member.population, member.spec.fstar.kernel_ptr(), 1e9)), 1e-8);
}

TEST(PopulationMinimiser, FormsAgree) {
  Rng rng = make_stream(63);
  for (int t = 0; t < 40; ++t) {
    const Index d = 1 + t % 3;
    const Index m = 1 + t % 6;
    const auto member = random_member(d, m, rng);
    for (double lambda : {1e-3, 1e-1, 1.0, 10.0}) {
      const auto forms = population_minimiser_forms(member.population, member.spec.fstar.kernel_ptr(), lambda);
      EXPECT_LE(forms.gap, 1e-8);
    }
  }
}

TEST(PopulationMinimiser, BeatsPerturbations) {
  Rng rng = make_stream(64);
  const auto member = random_member(2, 4, rng, NoiseLaw::isotropic_gaussian(0.3));
  const auto kernel = member.spec.fstar.kernel_ptr();
  const double lambda = 0.2;
  const auto f = population_minimiser(member.population, kernel, lambda);
  const double best = population_regularised_risk(member.population, f, lambda);
  for (int t = 0; t < 50; ++t) {
    const auto v = testing::random_expansion(kernel, 2, 3, rng);
    EXPECT_GE(population_regularised_risk(member.population, f + v.scaled(1e-2), lambda), best - 1e-12);
  }
  // quadratic: R(f + v) - R(f) = excess(v) + lambda ||v||^2 for the minimiser
  const auto v = testing::random_expansion(kernel, 2, 3, rng);
  const double rise = population_regularised_risk(member.population, f + v, lambda) - best;
  const auto zero_pop = DiscretePopulation(member.population.support(), member.population.probs(),
                                           Eigen::MatrixXd::Zero(2, 4), NoiseLaw::none());
  EXPECT_NEAR(rise, excess_risk(zero_pop, v) + lambda * h_norm_sq(v), 1e-10);
}

TEST(PopulationMinimiser, SingularGramThrows) {
  Eigen::MatrixXd support(1, 2);
  support << 0, 1;
  const DiscretePopulation pop(support, Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Zero(2, 2), NoiseLaw::none());
  const auto rank_one = make_separable_kernel(ScalarKernel::gaussian(1.0), Eigen::Vector2d(1, 0).asDiagonal());
  EXPECT_THROW(population_minimiser(pop, rank_one, 1.0), std::domain_error);
  EXPECT_THROW(population_minimiser(pop, unit_kernel(), 1.0), std::invalid_argument);  // dimension
}

TEST(PopulationOperators, CoordinateForms) {
  Rng rng = make_stream(65);
  const auto member = random_member(2, 3, rng);
  const auto ops = population_operators(member.population, member.spec.fstar.kernel());
  const Eigen::MatrixXd p = ops.weights.asDiagonal();
  EXPECT_LE((ops.iota_star_iota - p * ops.basis_gram).norm(), 1e-14);
  EXPECT_LE((ops.iota_iota_star - ops.basis_gram * p).norm(), 1e-14);
  // <f, iota* iota f>_H = ||iota f||^2_2
  const Eigen::VectorXd c = random_matrix(6, 1, rng);
  const KernelExpansion f(member.spec.fstar.kernel_ptr(), member.population.support(),
                          Eigen::Map<const Eigen::MatrixXd>(c.data(), 2, 3));
  const Eigen::VectorXd fx = ops.basis_gram * c;
  EXPECT_NEAR(c.dot(ops.basis_gram * ops.iota_star_iota * c), fx.dot(p * fx), 1e-10);
}

TEST(ApproximationError, MonotoneAndWellSpecifiedBound) {
  Rng rng = make_stream(66);
  for (int t = 0; t < 10; ++t) {
    const auto member = random_member(1 + t % 3, 2 + t % 4, rng);
    const auto kernel = member.spec.fstar.kernel_ptr();
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
      const auto f = population_minimiser(member.population, kernel, lambda);
      const double e = excess_risk(member.population, f);
      EXPECT_LE(e, prev + 1e-12);
      EXPECT_LE(e, lambda * member.spec.C + 1e-10);
      EXPECT_LE(population_regularised_risk(member.population, f, lambda), member.population.output_second_moment());
      prev = e;
    }
    EXPECT_LT(prev, 1e-3);
  }
}

TEST(ExcessRisk, ZeroAtTarget) {
  Rng rng = make_stream(67);
  const auto member = random_member(2, 3, rng);
  EXPECT_NEAR(excess_risk(member.population, member.spec.fstar), 0.0, 1e-20);
}

TEST(ExcessRisk, MatchesMonteCarlo) {
  Rng rng = make_stream(68);
  const auto member = random_member(2, 4, rng);
  const auto f = testing::random_expansion(member.spec.fstar.kernel_ptr(), 2, 3, rng);
  const double exact = excess_risk(member.population, f);
  EXPECT_NEAR(monte_carlo_excess_risk(member.population, f, 100000, 3), exact, 1e-2 * exact);
}

TEST(RiskDecomposition, NoiseFree) {
  Rng rng = make_stream(69);
  const auto member = random_member(2, 3, rng);
  const auto f = testing::random_expansion(member.spec.fstar.kernel_ptr(), 2, 2, rng);
  EXPECT_EQ(member.population.optimal_risk(), 0.0);
  EXPECT_EQ(population_risk(member.population, f), excess_risk(member.population, f));
  const auto check = risk_decomposition_check(member.population, f, 1000, 1);
  EXPECT_NEAR(check.monte_carlo_risk, excess_risk(member.population, f), 1e-2 + 3 * check.standard_error);
}

TEST(RiskDecomposition, GaussianNoise) {
  EXPECT_DOUBLE_EQ(NoiseLaw::isotropic_gaussian(0.5).second_moment(2), 2 * 0.25);
  EXPECT_DOUBLE_EQ(NoiseLaw::bounded_uniform(0.6).second_moment(3), 3 * 0.36 / 3);
  Rng rng = make_stream(70);
  const auto member = random_member(2, 3, rng, NoiseLaw::isotropic_gaussian(0.5));
  EXPECT_DOUBLE_EQ(member.population.optimal_risk(), 0.5);
  const auto f = testing::random_expansion(member.spec.fstar.kernel_ptr(), 2, 2, rng);
  const auto check = risk_decomposition_check(member.population, f, 100000, 2);
  EXPECT_NEAR(check.predicted_risk, excess_risk(member.population, f) + 0.5, 1e-14);
  EXPECT_LE(check.deviation, 3 * check.standard_error);
}

TEST(NoiseLaw, Parse) {
  EXPECT_EQ(NoiseLaw::parse("none", 0).kind(), NoiseKind::none);
  EXPECT_EQ(NoiseLaw::parse("isotropic-gaussian", 0.1).kind(), NoiseKind::isotropic_gaussian);
  EXPECT_EQ(NoiseLaw::parse("bounded-uniform", 0.1).kind(), NoiseKind::bounded_uniform);
  EXPECT_THROW(NoiseLaw::parse("cauchy", 1.0), std::invalid_argument);
  EXPECT_THROW(NoiseLaw::isotropic_gaussian(-1.0), std::invalid_argument);
}

TEST(NoiseLaw, BoundedUniformStaysInBox) {
  Rng rng = make_stream(71);
  const auto law = NoiseLaw::bounded_uniform(0.3);
  double sum_sq = 0.0;
  for (int t = 0; t < 20000; ++t) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
    law.add_to(y, rng);
    EXPECT_LE(y.cwiseAbs().maxCoeff(), 0.3);
    sum_sq += y.squaredNorm();
  }
  EXPECT_NEAR(sum_sq / 20000, law.second_moment(2), 3e-3);
}

TEST(SampleDataset, SingleAtomNoiseFree) {
  const auto data = sample_dataset(single_atom(0.7), 5, 1);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_EQ(data.inputs()(0, i), 0.0);
    EXPECT_EQ(data.outputs()(0, i), 0.7);
  }
}

TEST(SampleDataset, FrequenciesAndDeterminism) {
  Rng rng = make_stream(72);
  const auto member = random_member(2, 5, rng, NoiseLaw::isotropic_gaussian(0.2));
  const auto& pop = member.population;
  const Index n = 20000;
  const auto data = sample_dataset(pop, n, 9);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(pop.atoms());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < pop.atoms(); ++j)
      if (data.inputs().col(i) == pop.support().col(j)) counts(j) += 1;
  EXPECT_EQ(counts.sum(), static_cast<double>(n));
  for (Index j = 0; j < pop.atoms(); ++j) {
    const double p = pop.probs()(j);
    EXPECT_NEAR(counts(j) / n, p, 4 * std::sqrt(p * (1 - p) / n));
  }
  const auto again = sample_dataset(pop, n, 9);
  EXPECT_EQ(data.inputs(), again.inputs());
  EXPECT_EQ(data.outputs(), again.outputs());
  EXPECT_NE(sample_dataset(pop, n, 10).outputs(), data.outputs());
}

TEST(MakeWellSpecified, ZeroCoefficients) {
  Rng rng = make_stream(73);
  const auto kernel = random_kernel(2, rng);
  const auto member = make_well_specified(random_matrix(2, 3, rng), Eigen::Vector3d(0.2, 0.3, 0.5), kernel,
                                          Eigen::MatrixXd::Zero(2, 3));
  EXPECT_EQ(member.spec.C, 0.0);
  EXPECT_EQ(member.population.target(), Eigen::MatrixXd::Zero(2, 3));
}

TEST(MakeWellSpecified, SingleAtom) {
  const auto kernel = make_separable_kernel(ScalarKernel::gaussian(1.0), Eigen::MatrixXd::Identity(2, 2));
  const Eigen::Vector2d y(3, -1);
  const auto member = make_well_specified(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), kernel, Eigen::MatrixXd(y));
  EXPECT_NEAR(member.spec.C, 10.0, 1e-14);
  EXPECT_EQ(Eigen::VectorXd(member.population.target().col(0)), Eigen::VectorXd(y));
  EXPECT_NEAR(member.spec.M, 10.0, 1e-14);
}

TEST(MakeWellSpecified, NormMatchesQuadraticForm) {
  Rng rng = make_stream(74);
  const auto kernel = random_kernel(2, rng);
  const Points support = random_matrix(2, 3, rng);
  const Eigen::MatrixXd coeffs = random_matrix(2, 3, rng);
  const auto member = make_well_specified(support, Eigen::Vector3d(0.2, 0.3, 0.5), kernel, coeffs);
  const Eigen::MatrixXd g = testing::naive_gram(testing::separable(kernel), support, support);
  EXPECT_NEAR(member.spec.C, testing::flat(coeffs).dot(g * testing::flat(coeffs)), 1e-10);
  Eigen::MatrixXd dup = support;
  dup.col(2) = dup.col(0);
  EXPECT_THROW(make_well_specified(dup, Eigen::Vector3d(0.2, 0.3, 0.5), kernel, coeffs), std::invalid_argument);
}

TEST(CertifyWellSpecified, RecoversCoefficients) {
  Rng rng = make_stream(75);
  const auto member = random_member(2, 4, rng);
  const auto spec = certify_well_specified(member.population, member.spec.fstar.kernel_ptr());
  ASSERT_TRUE(spec.has_value());
  EXPECT_NEAR(spec->C, member.spec.C, 1e-8 * (1 + member.spec.C));
  EXPECT_NEAR(spec->M, member.spec.M, 1e-12);
}

TEST(EmpiricalPrimal, MatchesDualFit) {
  Rng rng = make_stream(76);
  const auto member = random_member(2, 4, rng, NoiseLaw::isotropic_gaussian(0.3));
  const auto kernel = member.spec.fstar.kernel_ptr();
  const auto data = sample_dataset(member.population, 200, 4);
  const double lambda = 0.05;
  const auto model = fit(data, kernel, lambda);
  const Eigen::MatrixXd primal = empirical_primal_coordinates(member.population, *kernel, data, lambda);
  const Eigen::MatrixXd dual = support_coordinates(model.expansion(), member.population.support());
  EXPECT_LE((primal - dual).norm(), 1e-9 * (1 + dual.norm()));
}

TEST(OperatorAverage, ErrorShrinksWithResamples) {
  Rng rng = make_stream(77);
  const auto member = random_member(2, 3, rng);
  const auto kernel = member.spec.fstar.kernel_ptr();
  const auto f = testing::random_expansion(kernel, 2, 3, rng);
  const double coarse = operator_average_error(member.population, kernel, f, 50, 10, 3);
  const double fine = operator_average_error(member.population, kernel, f, 50, 200, 3);
  EXPECT_GE(coarse / fine, 3.0);
}

}  // namespace
}  // namespace opkrr
