#pragma once

#include <Eigen/Dense>

namespace opkrr {

using Index = Eigen::Index;

/// Element of the truncated output space R^d.
using OutputVector = Eigen::VectorXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Returns true when every entry is finite.
bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// <a, b>_Y. Throws std::invalid_argument on dimension mismatch.
double inner_y(ConstVectorRef a, ConstVectorRef b);
double norm_y(ConstVectorRef a);

/// The n-fold direct sum Y^n. Stored as a d x n matrix, one block per column.
class StackedOutputs {
 public:
  StackedOutputs() = default;
  /// Throws std::invalid_argument if d < 1 or any entry is non-finite.
  explicit StackedOutputs(Eigen::MatrixXd blocks);

  static StackedOutputs zeros(Index dim, Index count);

  Index dim() const { return blocks_.rows(); }
  Index count() const { return blocks_.cols(); }
  auto block(Index i) const { return blocks_.col(i); }
  const Eigen::MatrixXd& matrix() const { return blocks_; }

  /// Block-major concatenation (y_1, ..., y_n) as one vector of length n*d.
  Eigen::VectorXd flattened() const;

 private:
  Eigen::MatrixXd blocks_;
};

/// <a, b>_{Y^n} = sum_i <a_i, b_i>_Y. Throws on shape mismatch.
double inner_yn(const StackedOutputs& a, const StackedOutputs& b);

}  // namespace opkrr
