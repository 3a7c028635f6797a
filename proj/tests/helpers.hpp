#pragma once

#include <random>

#include "opkrr/discrete_oracle.hpp"
#include "opkrr/rkhs.hpp"

namespace opkrr::testing {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

/// Random PSD T = A A^T / d + 0.1 I.
inline Eigen::MatrixXd random_psd(Index d, Rng& rng) {
  const Eigen::MatrixXd a = random_matrix(d, d, rng);
  return a * a.transpose() / static_cast<double>(d) + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

inline ScalarKernel random_scalar(Rng& rng) {
  std::uniform_int_distribution<int> family(0, 2);
  std::uniform_real_distribution<double> param(0.5, 2.0);
  return {static_cast<KernelFamily>(family(rng)), param(rng)};
}

inline KernelPtr random_kernel(Index d, Rng& rng) {
  return make_separable_kernel(random_scalar(rng), random_psd(d, rng));
}

inline KernelExpansion random_expansion(KernelPtr kernel, Index p, Index m, Rng& rng) {
  const Index d = kernel->output_dim();
  return {std::move(kernel), random_matrix(p, m, rng), random_matrix(d, m, rng)};
}

/// k(x, y) T recomputed entry by entry.
inline Eigen::MatrixXd naive_block(const SeparableKernel& kernel, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double sq = 0.0;
  for (Index i = 0; i < x.size(); ++i) sq += (x(i) - y(i)) * (x(i) - y(i));
  const double r = std::sqrt(sq);
  const double c = kernel.scalar().parameter();
  double k = 0.0;
  switch (kernel.scalar().family()) {
    case KernelFamily::gaussian: k = std::exp(-sq / (2.0 * c * c)); break;
    case KernelFamily::laplacian: k = std::exp(-c * r); break;
    case KernelFamily::inverse_multiquadric: k = c / std::sqrt(sq + c * c); break;
  }
  Eigen::MatrixXd out(kernel.output_dim(), kernel.output_dim());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = k * kernel.output_operator()(i, j);
  return out;
}

/// Flattened nd x nd Gram built from naive_block, for quadratic-form oracles.
inline Eigen::MatrixXd naive_gram(const SeparableKernel& kernel, const Points& a, const Points& b) {
  const Index d = kernel.output_dim();
  Eigen::MatrixXd g(a.cols() * d, b.cols() * d);
  for (Index i = 0; i < a.cols(); ++i)
    for (Index j = 0; j < b.cols(); ++j) g.block(i * d, j * d, d, d) = naive_block(kernel, a.col(i), b.col(j));
  return g;
}

inline const SeparableKernel& separable(const KernelPtr& k) { return dynamic_cast<const SeparableKernel&>(*k); }

inline Eigen::VectorXd flat(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

}  // namespace opkrr::testing
