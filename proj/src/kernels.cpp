#include "opkrr/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opkrr {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian:
      return "gaussian";
    case KernelFamily::laplacian:
      return "laplacian";
    case KernelFamily::inverse_multiquadric:
      return "inverse-multiquadric";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "laplacian") return KernelFamily::laplacian;
  if (name == "inverse-multiquadric" || name == "imq") return KernelFamily::inverse_multiquadric;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) +
                              "' (expected gaussian, laplacian or inverse-multiquadric)");
}

ScalarKernel::ScalarKernel(KernelFamily family, double parameter)
    : family_(family), parameter_(parameter) {
  if (!std::isfinite(parameter) || parameter <= 0.0) {
    std::ostringstream msg;
    msg << to_string(family) << " kernel parameter must be finite and positive, got " << parameter;
    throw std::invalid_argument(msg.str());
  }
}

double ScalarKernel::from_squared_distance(double sq_dist) const {
  switch (family_) {
    case KernelFamily::gaussian:
      return std::exp(-sq_dist / (2.0 * parameter_ * parameter_));
    case KernelFamily::laplacian:
      return std::exp(-parameter_ * std::sqrt(sq_dist));
    case KernelFamily::inverse_multiquadric:
      return parameter_ / std::sqrt(sq_dist + parameter_ * parameter_);
  }
  return 0.0;
}

double ScalarKernel::operator()(ConstVectorRef x, ConstVectorRef y) const {
  if (x.size() != y.size()) {
    throw std::invalid_argument("scalar kernel: input dimension mismatch (" +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  return from_squared_distance((x - y).squaredNorm());
}

double scalar_eval(const ScalarKernel& k, ConstVectorRef x, ConstVectorRef y) { return k(x, y); }

Eigen::VectorXd OperatorKernel::apply_sum(ConstVectorRef x, const Points& anchors,
                                          const Eigen::MatrixXd& coeffs) const {
  const Index d = output_dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd block(d, d);
  for (Index i = 0; i < anchors.cols(); ++i) {
    block_into(x, anchors.col(i), block);
    out.noalias() += block * coeffs.col(i);
  }
  return out;
}

Eigen::MatrixXd OperatorKernel::operator()(ConstVectorRef x, ConstVectorRef y) const {
  Eigen::MatrixXd out(output_dim(), output_dim());
  block_into(x, y, out);
  return out;
}

KernelBound kernel_bound(const ScalarKernel& scalar, const Eigen::MatrixXd& output_operator) {
  if (output_operator.rows() < 1 || output_operator.rows() != output_operator.cols()) {
    throw std::invalid_argument("output operator T must be a non-empty square matrix");
  }
  if (!output_operator.allFinite()) throw std::invalid_argument("output operator T has non-finite entries");
  const double scale = std::max(1.0, output_operator.cwiseAbs().maxCoeff());
  if ((output_operator - output_operator.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("output operator T must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(output_operator, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -kPsdTolerance) {
    std::ostringstream msg;
    msg << "output operator T is not positive semi-definite (min eigenvalue " << min_eig << ")";
    throw std::invalid_argument(msg.str());
  }
  return KernelBound{scalar.diagonal_sup() * eig.eigenvalues().maxCoeff()};
}

KernelBound kernel_bound(const OperatorKernel& kernel) { return kernel.bound(); }

SeparableKernel::SeparableKernel(ScalarKernel scalar, Eigen::MatrixXd output_operator)
    : scalar_(scalar),
      output_operator_(std::move(output_operator)),
      bound_(kernel_bound(scalar_, output_operator_)) {
  // Exact symmetry so Gram blocks mirror bitwise.
  output_operator_ = 0.5 * (output_operator_ + output_operator_.transpose()).eval();
}

bool SeparableKernel::equals(const OperatorKernel& other) const {
  if (this == &other) return true;
  const auto* sep = dynamic_cast<const SeparableKernel*>(&other);
  return sep != nullptr && sep->scalar_ == scalar_ &&
         sep->output_operator_.rows() == output_operator_.rows() &&
         sep->output_operator_ == output_operator_;
}

void SeparableKernel::block_into(ConstVectorRef x, ConstVectorRef y,
                                 Eigen::Ref<Eigen::MatrixXd> out) const {
  out = scalar_(x, y) * output_operator_;
}

Eigen::VectorXd SeparableKernel::apply_sum(ConstVectorRef x, const Points& anchors,
                                           const Eigen::MatrixXd& coeffs) const {
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(output_dim());
  for (Index i = 0; i < anchors.cols(); ++i) weighted += scalar_(x, anchors.col(i)) * coeffs.col(i);
  return output_operator_ * weighted;
}

KernelPtr make_separable_kernel(ScalarKernel scalar, Eigen::MatrixXd output_operator) {
  return std::make_shared<const SeparableKernel>(scalar, std::move(output_operator));
}

Eigen::MatrixXd op_kernel_eval(const OperatorKernel& kernel, ConstVectorRef x, ConstVectorRef y) {
  return kernel(x, y);
}

}  // namespace opkrr
