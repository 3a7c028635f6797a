#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "opkrr/rkhs.hpp"
#include "opkrr/rng.hpp"

namespace opkrr {

/// Samples {(x_i, y_i)}: xs is p x n, ys is d x n.
class TrainingSet {
 public:
  /// Throws std::invalid_argument if n < 1, counts differ, or values are non-finite.
  TrainingSet(Points xs, Eigen::MatrixXd ys);

  Index size() const { return xs_.cols(); }
  Index input_dim() const { return xs_.rows(); }
  Index output_dim() const { return ys_.rows(); }
  const Points& inputs() const { return xs_; }
  const Eigen::MatrixXd& outputs() const { return ys_; }
  StackedOutputs stacked_outputs() const { return StackedOutputs(ys_); }

 private:
  Points xs_;
  Eigen::MatrixXd ys_;
};

struct RiskReport {
  double unregularised;
  double regulariser;  // lambda * ||f||_H^2, zero when no lambda is given
  double regularised;
};

struct FitOptions {
  /// Solve the reduced system over distinct inputs when inputs repeat. The
  /// returned per-sample coefficients solve the full system all the same.
  bool group_repeated_inputs = true;
  Execution execution = Execution::parallel;
};

/// The regularised empirical risk minimiser. As an expansion it is
/// f(x) = sum_i K(x, x_i) alpha_i where (G + n lambda I) alpha = y.
class FittedModel {
 public:
  FittedModel(KernelExpansion expansion, double lambda, Index sample_count);

  const KernelExpansion& expansion() const { return expansion_; }
  const OperatorKernel& kernel() const { return expansion_.kernel(); }
  const Points& anchors() const { return expansion_.anchors(); }
  const Eigen::MatrixXd& alphas() const { return expansion_.coeffs(); }
  double lambda() const { return lambda_; }
  Index sample_count() const { return sample_count_; }

  OutputVector predict(ConstVectorRef x) const { return expansion_(x); }

 private:
  KernelExpansion expansion_;
  double lambda_;
  Index sample_count_;
};

/// Solves (G + n lambda I) alpha = y with a dense Cholesky factorisation.
/// Throws std::invalid_argument if lambda <= 0, and std::runtime_error naming
/// the smallest Gram eigenvalue if the shifted system is not positive definite.
FittedModel fit(const TrainingSet& data, KernelPtr kernel, double lambda, FitOptions options = {});

OutputVector predict(const FittedModel& model, ConstVectorRef x);

/// ||(G + n lambda I) alpha - y||, computed without forming G.
double normal_equation_residual(const FittedModel& model, const TrainingSet& data);

/// R_n(f), plus lambda ||f||_H^2 when lambda is given.
RiskReport empirical_risk(const KernelExpansion& f, const TrainingSet& data,
                          std::optional<double> lambda = std::nullopt);

/// The Frechet gradient of R_{n,lambda} at f as an element of H:
///   2 n S^*(S f - Y / n) + 2 lambda f.
KernelExpansion risk_gradient(const KernelExpansion& f, const TrainingSet& data, double lambda);

/// Comparison of analytic and central finite-difference directional
/// derivatives of R_{n,lambda}.
struct DerivativeCheck {
  double max_abs_mismatch = 0.0;
  /// max |fd - analytic| / max(1, |analytic|)
  double max_rel_mismatch = 0.0;
  double max_abs_analytic = 0.0;
  int probes = 0;
};

DerivativeCheck directional_derivative_check(const KernelExpansion& f, const TrainingSet& data,
                                             double lambda,
                                             std::span<const KernelExpansion> directions,
                                             double step = 1e-4);

/// Random elements of H with unit norm, anchored on training inputs and on
/// perturbed copies of them.
std::vector<KernelExpansion> random_unit_directions(KernelPtr kernel, const TrainingSet& data,
                                                    int count, Rng& rng);

/// Derivative check at the fitted model along random unit directions.
DerivativeCheck minimiser_certificate(const FittedModel& model, const TrainingSet& data, int probes,
                                      double step = 1e-4, std::uint64_t seed = 0);

/// true iff R_{n,lambda}(model) <= R_{n,lambda}(g) + 1e-9 for every rival g.
bool objective_comparison(const FittedModel& model, const TrainingSet& data,
                          std::span<const KernelExpansion> rivals);

}  // namespace opkrr
