#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "opkrr/estimator.hpp"
#include "opkrr/rkhs.hpp"
#include "opkrr/rng.hpp"

namespace opkrr {

enum class NoiseKind { none, isotropic_gaussian, bounded_uniform };

/// Additive output noise with a closed-form second moment.
///   isotropic-gaussian(tau): N(0, tau^2 I_d),             E||e||^2 = d tau^2
///   bounded-uniform(r):      independent U[-r, r] coords, E||e||^2 = d r^2 / 3
class NoiseLaw {
 public:
  static NoiseLaw none() { return {NoiseKind::none, 0.0}; }
  static NoiseLaw isotropic_gaussian(double tau);
  static NoiseLaw bounded_uniform(double radius);
  /// name is "none", "isotropic-gaussian" or "bounded-uniform".
  static NoiseLaw parse(std::string_view name, double parameter);

  NoiseKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  double second_moment(Index dim) const;
  void add_to(Eigen::Ref<Eigen::VectorXd> y, Rng& rng) const;

 private:
  NoiseLaw(NoiseKind kind, double parameter) : kind_(kind), parameter_(parameter) {}
  NoiseKind kind_;
  double parameter_;
};

std::string_view to_string(NoiseKind kind);

/// Finitely supported P_X with regression function values f*(x_j) and
/// additive noise, so Y = f*(X) + e.
class DiscretePopulation {
 public:
  /// support is p x m, probs has m positive entries summing to 1 (to 1e-12),
  /// target is d x m. Throws std::invalid_argument on violations, including
  /// repeated support points.
  DiscretePopulation(Points support, Eigen::VectorXd probs, Eigen::MatrixXd target, NoiseLaw noise);

  Index atoms() const { return support_.cols(); }
  Index input_dim() const { return support_.rows(); }
  Index output_dim() const { return target_.rows(); }
  const Points& support() const { return support_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  const Eigen::MatrixXd& target() const { return target_; }
  const NoiseLaw& noise() const { return noise_; }

  /// E||Y||^2 = sum_j p_j ||f*(x_j)||^2 + noise second moment.
  double output_second_moment() const;
  /// R(f*), the noise second moment.
  double optimal_risk() const { return noise_.second_moment(output_dim()); }

  /// Index of the atom drawn by a uniform variate in [0, 1).
  Index atom_for(double uniform) const;

 private:
  Points support_;
  Eigen::VectorXd probs_;
  Eigen::VectorXd cumulative_;
  Eigen::MatrixXd target_;
  NoiseLaw noise_;
};

/// Certificate that f* = iota f*_H with ||f*_H||^2 <= C and E||Y||^2 <= M.
struct WellSpecifiedSpec {
  KernelExpansion fstar;
  double M;
  double C;
};

struct WellSpecifiedPopulation {
  DiscretePopulation population;
  WellSpecifiedSpec spec;
};

/// f*_H = sum_j K(x_j, .) coeffs_j; targets, C = ||f*_H||^2 and M = E||Y||^2
/// are computed exactly.
WellSpecifiedPopulation make_well_specified(Points support, Eigen::VectorXd probs, KernelPtr kernel,
                                            Eigen::MatrixXd coeffs, NoiseLaw noise = NoiseLaw::none());

/// Finds f*_H in the span of the support basis with iota f*_H = f*, if the
/// basis Gram is non-singular. C and M are set to their exact values.
std::optional<WellSpecifiedSpec> certify_well_specified(const DiscretePopulation& pop, KernelPtr kernel);

/// Coordinate representations in the basis K(x_j, .) e_k of H (md entries,
/// atom-major) and on the md-dimensional subspace of L^2 of functions on the
/// support, with weighted inner product sum_j p_j <f(x_j), g(x_j)>.
struct PopulationOperators {
  Eigen::MatrixXd basis_gram;       // <K(x_i,.)e_k, K(x_j,.)e_l>_H
  Eigen::VectorXd weights;          // p_j repeated d times
  Eigen::MatrixXd iota_star_iota;   // on H coordinates: P G
  Eigen::MatrixXd iota_iota_star;   // on L^2 coordinates: G P
};

PopulationOperators population_operators(const DiscretePopulation& pop, const OperatorKernel& kernel);

/// iota^* f = E[K(., X) f(X)] = sum_j p_j K(x_j, .) f(x_j). values is d x m.
KernelExpansion iota_star(const DiscretePopulation& pop, KernelPtr kernel, const Eigen::MatrixXd& values);

struct MinimiserForms {
  KernelExpansion primal;  // (iota^* iota + lambda I)^{-1} iota^* f*
  KernelExpansion dual;    // iota^* (iota iota^* + lambda I)^{-1} f*
  double gap;              // ||primal - dual||_H
};

MinimiserForms population_minimiser_forms(const DiscretePopulation& pop, KernelPtr kernel, double lambda);

/// f_lambda. Throws std::invalid_argument if lambda <= 0, std::domain_error if
/// the basis Gram is singular, and std::runtime_error if the two operator
/// forms disagree by more than 1e-8 in H-norm.
KernelExpansion population_minimiser(const DiscretePopulation& pop, KernelPtr kernel, double lambda);

/// sum_j p_j ||f(x_j) - f*(x_j)||^2 = R(f) - R(f*).
double excess_risk(const DiscretePopulation& pop, const KernelExpansion& f);
/// R(f) = excess_risk(f) + R(f*).
double population_risk(const DiscretePopulation& pop, const KernelExpansion& f);
/// R_lambda(f) = R(f) + lambda ||f||_H^2.
double population_regularised_risk(const DiscretePopulation& pop, const KernelExpansion& f, double lambda);

/// Monte-Carlo estimate of E||f(X) - f*(X)||^2.
double monte_carlo_excess_risk(const DiscretePopulation& pop, const KernelExpansion& f, Index samples,
                               std::uint64_t seed);

struct DecompositionCheck {
  double monte_carlo_risk;  // mean of ||f(X) - Y||^2
  double standard_error;
  double predicted_risk;    // excess_risk(f) + R(f*)
  double deviation;         // |monte_carlo_risk - predicted_risk|
};

DecompositionCheck risk_decomposition_check(const DiscretePopulation& pop, const KernelExpansion& f,
                                            Index samples, std::uint64_t seed);

/// n i.i.d. draws (X_i, f*(X_i) + e_i).
TrainingSet sample_dataset(const DiscretePopulation& pop, Index n, Rng& rng);
TrainingSet sample_dataset(const DiscretePopulation& pop, Index n, std::uint64_t seed);

/// Sums the coefficients of f onto the support atoms. Every anchor must
/// coincide with a support point; throws std::invalid_argument otherwise.
Eigen::MatrixXd support_coordinates(const KernelExpansion& f, const Points& support);

/// The primal form (n S^* S + lambda I)^{-1} S^* Y of the empirical minimiser,
/// assembled in basis coordinates. Requires every input to be a support atom.
Eigen::MatrixXd empirical_primal_coordinates(const DiscretePopulation& pop, const OperatorKernel& kernel,
                                             const TrainingSet& data, double lambda);

}  // namespace opkrr
