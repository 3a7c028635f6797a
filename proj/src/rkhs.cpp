#include "opkrr/rkhs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace opkrr {
namespace {

void require_same_kernel(const KernelExpansion& f, const KernelExpansion& g, const char* what) {
  if (!f.kernel().equals(g.kernel())) {
    throw std::invalid_argument(std::string(what) + ": expansions use different kernels");
  }
  if (f.input_dim() != g.input_dim()) {
    throw std::invalid_argument(std::string(what) + ": input dimension mismatch");
  }
}

}  // namespace

KernelExpansion::KernelExpansion(KernelPtr kernel, Points anchors, Eigen::MatrixXd coeffs)
    : kernel_(std::move(kernel)), anchors_(std::move(anchors)), coeffs_(std::move(coeffs)) {
  if (!kernel_) throw std::invalid_argument("KernelExpansion: null kernel");
  if (coeffs_.rows() != kernel_->output_dim()) {
    throw std::invalid_argument("KernelExpansion: coefficient dimension " +
                                std::to_string(coeffs_.rows()) + " does not match kernel output dimension " +
                                std::to_string(kernel_->output_dim()));
  }
  if (coeffs_.cols() != anchors_.cols()) {
    throw std::invalid_argument("KernelExpansion: anchor and coefficient counts differ");
  }
  if (anchors_.rows() < 1) throw std::invalid_argument("KernelExpansion: input dimension must be >= 1");
  if (!anchors_.allFinite() || !coeffs_.allFinite()) {
    throw std::invalid_argument("KernelExpansion: non-finite anchor or coefficient");
  }
}

KernelExpansion KernelExpansion::zero(KernelPtr kernel, Index input_dim) {
  const Index d = kernel ? kernel->output_dim() : 0;
  return {std::move(kernel), Points(input_dim, 0), Eigen::MatrixXd(d, 0)};
}

KernelExpansion KernelExpansion::single(KernelPtr kernel, const InputPoint& x, const OutputVector& y) {
  return {std::move(kernel), Points(x), Eigen::MatrixXd(y)};
}

OutputVector KernelExpansion::operator()(ConstVectorRef x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("KernelExpansion: evaluation point has dimension " +
                                std::to_string(x.size()) + ", expected " + std::to_string(input_dim()));
  }
  return kernel_->apply_sum(x, anchors_, coeffs_);
}

Eigen::MatrixXd KernelExpansion::evaluate(const Points& xs, Execution exec) const {
  if (xs.rows() != input_dim()) {
    throw std::invalid_argument("KernelExpansion::evaluate: points have dimension " +
                                std::to_string(xs.rows()) + ", expected " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd out(output_dim(), xs.cols());
  for_each_index(xs.cols(), exec,
                 [&](std::ptrdiff_t i) { out.col(i) = kernel_->apply_sum(xs.col(i), anchors_, coeffs_); });
  return out;
}

KernelExpansion KernelExpansion::operator+(const KernelExpansion& other) const {
  require_same_kernel(*this, other, "KernelExpansion::operator+");
  Points anchors(input_dim(), size() + other.size());
  anchors << anchors_, other.anchors_;
  Eigen::MatrixXd coeffs(output_dim(), size() + other.size());
  coeffs << coeffs_, other.coeffs_;
  return {kernel_, std::move(anchors), std::move(coeffs)};
}

KernelExpansion KernelExpansion::operator-(const KernelExpansion& other) const {
  return *this + other.scaled(-1.0);
}

KernelExpansion KernelExpansion::scaled(double factor) const {
  return {kernel_, anchors_, factor * coeffs_};
}

StackedOutputs sample(const KernelExpansion& f, const Points& xs, Execution exec) {
  if (xs.cols() == 0) throw std::invalid_argument("sample: no sampling points");
  return StackedOutputs(f.evaluate(xs, exec) / static_cast<double>(xs.cols()));
}

KernelExpansion sample_adjoint(KernelPtr kernel, const Points& xs, const StackedOutputs& ys) {
  if (xs.cols() != ys.count()) {
    throw std::invalid_argument("sample_adjoint: " + std::to_string(xs.cols()) + " points but " +
                                std::to_string(ys.count()) + " output blocks");
  }
  if (xs.cols() == 0) throw std::invalid_argument("sample_adjoint: no sampling points");
  return {std::move(kernel), xs, ys.matrix() / static_cast<double>(xs.cols())};
}

double h_inner(const KernelExpansion& f, const KernelExpansion& g, Execution exec) {
  require_same_kernel(f, g, "h_inner");
  // Evaluate g at each anchor of f, then pair with f's coefficients. Partial
  // sums are reduced in index order so both execution paths agree bitwise.
  std::vector<double> partial(static_cast<std::size_t>(f.size()), 0.0);
  for_each_index(f.size(), exec, [&](std::ptrdiff_t i) {
    partial[static_cast<std::size_t>(i)] = f.coeffs().col(i).dot(g(f.anchors().col(i)));
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

double h_norm_sq(const KernelExpansion& f, Execution exec) { return h_inner(f, f, exec); }

double h_norm(const KernelExpansion& f, Execution exec) {
  return std::sqrt(std::max(0.0, h_norm_sq(f, exec)));
}

GramBlocks::GramBlocks(Index count, Index dim, Eigen::MatrixXd full)
    : count_(count), dim_(dim), full_(std::move(full)) {
  if (full_.rows() != count_ * dim_ || full_.cols() != count_ * dim_) {
    throw std::invalid_argument("GramBlocks: matrix size does not match count * dim");
  }
}

GramBlocks gram_blocks(const OperatorKernel& kernel, const Points& xs, Execution exec) {
  const Index n = xs.cols();
  const Index d = kernel.output_dim();
  if (n < 1) throw std::invalid_argument("gram_blocks: need at least one point");
  Eigen::MatrixXd full(n * d, n * d);
  // Row i of the upper triangle is owned by one iteration; dynamic scheduling
  // balances the shrinking rows.
  for_each_index(
      n, exec,
      [&](std::ptrdiff_t i) {
        for (Index j = i; j < n; ++j) {
          kernel.block_into(xs.col(i), xs.col(j), full.block(i * d, j * d, d, d));
          if (j != i) full.block(j * d, i * d, d, d) = full.block(i * d, j * d, d, d).transpose();
        }
      },
      /*dynamic=*/true);
  return {n, d, std::move(full)};
}

bool sup_norm_bound_check(const KernelExpansion& f, KernelBound bound, const Points& probes) {
  if (probes.cols() == 0) throw std::invalid_argument("sup_norm_bound_check: no probe points");
  const double limit = std::sqrt(bound.value) * h_norm(f) + 1e-9;
  const Eigen::MatrixXd values = f.evaluate(probes);
  return values.colwise().norm().maxCoeff() <= limit;
}

}  // namespace opkrr
