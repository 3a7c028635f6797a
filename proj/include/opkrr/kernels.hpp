#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "opkrr/output_space.hpp"

namespace opkrr {

/// A point of the input space R^p. No bound is placed on the coordinates.
using InputPoint = Eigen::VectorXd;
/// A sequence of input points stored as a p x n matrix, one point per column.
using Points = Eigen::MatrixXd;

/// Eigenvalues of T (and of scalar Gram matrices) below this are treated as
/// genuinely negative rather than roundoff.
inline constexpr double kPsdTolerance = 1e-10;

enum class KernelFamily { gaussian, laplacian, inverse_multiquadric };

std::string_view to_string(KernelFamily family);
/// Accepts "gaussian", "laplacian", "inverse-multiquadric" (also "imq").
KernelFamily parse_kernel_family(std::string_view name);

/// Bounded translation-invariant scalar kernels, normalised so k(x, x) = 1:
///   gaussian(sigma):             exp(-|x - x'|^2 / (2 sigma^2))
///   laplacian(gamma):            exp(-gamma |x - x'|)
///   inverse-multiquadric(c):     c / sqrt(|x - x'|^2 + c^2)
class ScalarKernel {
 public:
  /// Throws std::invalid_argument unless parameter is finite and > 0.
  ScalarKernel(KernelFamily family, double parameter);

  static ScalarKernel gaussian(double sigma) { return {KernelFamily::gaussian, sigma}; }
  static ScalarKernel laplacian(double gamma) { return {KernelFamily::laplacian, gamma}; }
  static ScalarKernel inverse_multiquadric(double c) {
    return {KernelFamily::inverse_multiquadric, c};
  }

  /// Throws std::invalid_argument on dimension mismatch.
  double operator()(ConstVectorRef x, ConstVectorRef y) const;
  double from_squared_distance(double sq_dist) const;

  /// sup_x k(x, x), known in closed form for every supported family.
  double diagonal_sup() const { return 1.0; }

  KernelFamily family() const { return family_; }
  double parameter() const { return parameter_; }

  bool operator==(const ScalarKernel&) const = default;

 private:
  KernelFamily family_;
  double parameter_;
};

double scalar_eval(const ScalarKernel& k, ConstVectorRef x, ConstVectorRef y);

/// Strong type for the uniform bound B >= sup_x ||K(x, x)||_op.
struct KernelBound {
  double value;
};

/// Operator-valued kernel K : X x X -> L(R^d).
///
/// Implementations must be immutable after construction and satisfy
/// K(x, x')^T = K(x', x); every evaluation method may be called concurrently.
class OperatorKernel {
 public:
  virtual ~OperatorKernel() = default;

  virtual Index output_dim() const = 0;
  virtual KernelBound bound() const = 0;
  virtual bool equals(const OperatorKernel& other) const = 0;

  /// Writes K(x, y) into out, which must be d x d.
  virtual void block_into(ConstVectorRef x, ConstVectorRef y,
                          Eigen::Ref<Eigen::MatrixXd> out) const = 0;

  /// sum_i K(x, anchors_i) coeffs_i. anchors is p x m, coeffs is d x m.
  virtual Eigen::VectorXd apply_sum(ConstVectorRef x, const Points& anchors,
                                    const Eigen::MatrixXd& coeffs) const;

  Eigen::MatrixXd operator()(ConstVectorRef x, ConstVectorRef y) const;
};

using KernelPtr = std::shared_ptr<const OperatorKernel>;

/// K(x, x') = k(x, x') T with T symmetric positive semi-definite.
class SeparableKernel final : public OperatorKernel {
 public:
  /// Throws std::invalid_argument if T is not square, not symmetric, or has an
  /// eigenvalue below -kPsdTolerance.
  SeparableKernel(ScalarKernel scalar, Eigen::MatrixXd output_operator);

  Index output_dim() const override { return output_operator_.rows(); }
  KernelBound bound() const override { return bound_; }
  bool equals(const OperatorKernel& other) const override;
  void block_into(ConstVectorRef x, ConstVectorRef y,
                  Eigen::Ref<Eigen::MatrixXd> out) const override;
  Eigen::VectorXd apply_sum(ConstVectorRef x, const Points& anchors,
                            const Eigen::MatrixXd& coeffs) const override;

  const ScalarKernel& scalar() const { return scalar_; }
  const Eigen::MatrixXd& output_operator() const { return output_operator_; }

 private:
  ScalarKernel scalar_;
  Eigen::MatrixXd output_operator_;
  KernelBound bound_;
};

KernelPtr make_separable_kernel(ScalarKernel scalar, Eigen::MatrixXd output_operator);

/// B = sup_x k(x, x) * lambda_max(T). Throws std::invalid_argument if T is
/// not symmetric PSD.
KernelBound kernel_bound(const ScalarKernel& scalar, const Eigen::MatrixXd& output_operator);
KernelBound kernel_bound(const OperatorKernel& kernel);

/// K(x, x') as a d x d matrix. Throws on dimension mismatch.
Eigen::MatrixXd op_kernel_eval(const OperatorKernel& kernel, ConstVectorRef x, ConstVectorRef y);

}  // namespace opkrr
