#include "opkrr/output_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opkrr {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

double inner_y(ConstVectorRef a, ConstVectorRef b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("inner_y: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  return a.dot(b);
}

double norm_y(ConstVectorRef a) { return a.norm(); }

StackedOutputs::StackedOutputs(Eigen::MatrixXd blocks) : blocks_(std::move(blocks)) {
  if (blocks_.rows() < 1) throw std::invalid_argument("StackedOutputs: output dimension must be >= 1");
  if (!blocks_.allFinite()) throw std::invalid_argument("StackedOutputs: non-finite coordinate");
}

StackedOutputs StackedOutputs::zeros(Index dim, Index count) {
  return StackedOutputs(Eigen::MatrixXd::Zero(dim, count));
}

Eigen::VectorXd StackedOutputs::flattened() const {
  // Column-major storage already places block i at [i*d, (i+1)*d).
  return Eigen::Map<const Eigen::VectorXd>(blocks_.data(), blocks_.size());
}

double inner_yn(const StackedOutputs& a, const StackedOutputs& b) {
  if (a.dim() != b.dim() || a.count() != b.count()) {
    throw std::invalid_argument("inner_yn: shape mismatch (" + std::to_string(a.dim()) + "x" +
                                std::to_string(a.count()) + " vs " + std::to_string(b.dim()) +
                                "x" + std::to_string(b.count()) + ")");
  }
  double total = 0.0;
  for (Index i = 0; i < a.count(); ++i) total += inner_y(a.block(i), b.block(i));
  return total;
}

}  // namespace opkrr
