#pragma once

#include <Eigen/Dense>

#include "opkrr/kernels.hpp"
#include "opkrr/output_space.hpp"
#include "opkrr/parallel.hpp"

namespace opkrr {

/// An element f = sum_i K(a_i, .) c_i of the RKHS, so f(x) = sum_i K(x, a_i) c_i.
///
/// Anchors may repeat; nothing is consolidated. Differences and sums
/// concatenate anchor lists, which keeps every H-norm computation on the same
/// code path.
class KernelExpansion {
 public:
  /// anchors is p x m, coeffs is d x m with d = kernel->output_dim().
  /// Throws std::invalid_argument on shape mismatch or non-finite values.
  KernelExpansion(KernelPtr kernel, Points anchors, Eigen::MatrixXd coeffs);

  /// The zero function (no anchors) on inputs of dimension input_dim.
  static KernelExpansion zero(KernelPtr kernel, Index input_dim);
  /// K(x, .) y.
  static KernelExpansion single(KernelPtr kernel, const InputPoint& x, const OutputVector& y);

  OutputVector operator()(ConstVectorRef x) const;
  /// f at each column of xs, returned as a d x n matrix.
  Eigen::MatrixXd evaluate(const Points& xs, Execution exec = Execution::parallel) const;

  Index size() const { return anchors_.cols(); }
  Index input_dim() const { return anchors_.rows(); }
  Index output_dim() const { return coeffs_.rows(); }
  const Points& anchors() const { return anchors_; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const OperatorKernel& kernel() const { return *kernel_; }
  const KernelPtr& kernel_ptr() const { return kernel_; }

  KernelExpansion operator+(const KernelExpansion& other) const;
  KernelExpansion operator-(const KernelExpansion& other) const;
  KernelExpansion scaled(double factor) const;

 private:
  KernelPtr kernel_;
  Points anchors_;
  Eigen::MatrixXd coeffs_;
};

/// S_x f = (1/n)(f(x_1), ..., f(x_n)). Throws if xs is empty.
StackedOutputs sample(const KernelExpansion& f, const Points& xs,
                      Execution exec = Execution::parallel);

/// S_x^* y = (1/n) sum_i K(x_i, .) y_i, with anchors xs and coefficients y_i / n.
KernelExpansion sample_adjoint(KernelPtr kernel, const Points& xs, const StackedOutputs& ys);

/// <f, g>_H = sum_ij <a_i, K(x_i, x'_j) b_j>_Y. Throws if the kernels differ.
double h_inner(const KernelExpansion& f, const KernelExpansion& g,
               Execution exec = Execution::parallel);
double h_norm_sq(const KernelExpansion& f, Execution exec = Execution::parallel);
double h_norm(const KernelExpansion& f, Execution exec = Execution::parallel);

/// n x n grid of d x d blocks K(x_i, x_j), viewed as one symmetric nd x nd matrix.
class GramBlocks {
 public:
  GramBlocks(Index count, Index dim, Eigen::MatrixXd full);

  Index count() const { return count_; }
  Index dim() const { return dim_; }
  auto block(Index i, Index j) const { return full_.block(i * dim_, j * dim_, dim_, dim_); }
  const Eigen::MatrixXd& flattened() const { return full_; }

 private:
  Index count_;
  Index dim_;
  Eigen::MatrixXd full_;
};

/// Assembles the block Gram matrix. Blocks (i, j) with i <= j are evaluated and
/// mirrored, so the result is exactly symmetric. The parallel path is bitwise
/// identical to the serial one.
GramBlocks gram_blocks(const OperatorKernel& kernel, const Points& xs,
                       Execution exec = Execution::parallel);

/// true iff max over probes of ||f(x)||_Y <= sqrt(B) ||f||_H + 1e-9.
bool sup_norm_bound_check(const KernelExpansion& f, KernelBound bound, const Points& probes);

}  // namespace opkrr
