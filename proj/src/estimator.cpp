#include "opkrr/estimator.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace opkrr {
namespace {

struct DesignGroups {
  Points unique;                     // p x u
  std::vector<Index> group_of;       // sample index -> unique index
  Eigen::VectorXd counts;            // u
};

DesignGroups group_inputs(const Points& xs) {
  std::map<std::vector<double>, Index> index_of;
  DesignGroups groups;
  groups.group_of.resize(static_cast<std::size_t>(xs.cols()));
  std::vector<Index> first_seen;
  for (Index i = 0; i < xs.cols(); ++i) {
    std::vector<double> key(xs.col(i).data(), xs.col(i).data() + xs.rows());
    auto [it, inserted] = index_of.try_emplace(std::move(key), static_cast<Index>(first_seen.size()));
    if (inserted) first_seen.push_back(i);
    groups.group_of[static_cast<std::size_t>(i)] = it->second;
  }
  const auto u = static_cast<Index>(first_seen.size());
  groups.unique.resize(xs.rows(), u);
  groups.counts = Eigen::VectorXd::Zero(u);
  for (Index g = 0; g < u; ++g) groups.unique.col(g) = xs.col(first_seen[static_cast<std::size_t>(g)]);
  for (Index g : groups.group_of) groups.counts(g) += 1.0;
  return groups;
}

[[noreturn]] void throw_indefinite(const Eigen::MatrixXd& gram, double shift) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg.precision(6);
  msg << "fit: shifted Gram system is not positive definite; smallest Gram eigenvalue "
      << eig.eigenvalues().minCoeff() << " (bound: must exceed -n*lambda = " << -shift
      << ", PSD tolerance " << -kPsdTolerance << ")";
  throw std::runtime_error(msg.str());
}

Eigen::VectorXd as_vector(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

TrainingSet::TrainingSet(Points xs, Eigen::MatrixXd ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.cols() < 1) throw std::invalid_argument("TrainingSet: need at least one sample");
  if (xs_.cols() != ys_.cols()) {
    throw std::invalid_argument("TrainingSet: " + std::to_string(xs_.cols()) + " inputs but " +
                                std::to_string(ys_.cols()) + " outputs");
  }
  if (xs_.rows() < 1 || ys_.rows() < 1) throw std::invalid_argument("TrainingSet: empty dimension");
  if (!xs_.allFinite() || !ys_.allFinite()) throw std::invalid_argument("TrainingSet: non-finite value");
}

FittedModel::FittedModel(KernelExpansion expansion, double lambda, Index sample_count)
    : expansion_(std::move(expansion)), lambda_(lambda), sample_count_(sample_count) {
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
    throw std::invalid_argument("FittedModel: lambda must be finite and positive");
  }
  if (sample_count_ != expansion_.size()) {
    throw std::invalid_argument("FittedModel: sample count does not match anchor count");
  }
}

FittedModel fit(const TrainingSet& data, KernelPtr kernel, double lambda, FitOptions options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    std::ostringstream msg;
    msg << "fit: lambda must be finite and positive, got " << lambda;
    throw std::invalid_argument(msg.str());
  }
  if (!kernel) throw std::invalid_argument("fit: null kernel");
  if (kernel->output_dim() != data.output_dim()) {
    throw std::invalid_argument("fit: kernel output dimension " + std::to_string(kernel->output_dim()) +
                                " does not match data output dimension " +
                                std::to_string(data.output_dim()));
  }
  const Index n = data.size();
  const Index d = data.output_dim();
  const double shift = static_cast<double>(n) * lambda;

  DesignGroups groups;
  bool reduce = false;
  if (options.group_repeated_inputs) {
    groups = group_inputs(data.inputs());
    reduce = groups.unique.cols() < n;
  }

  Eigen::MatrixXd alphas(d, n);
  if (!reduce) {
    const GramBlocks gram = gram_blocks(*kernel, data.inputs(), options.execution);
    Eigen::MatrixXd system = gram.flattened();
    system.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) throw_indefinite(gram.flattened(), shift);
    const Eigen::VectorXd solution = llt.solve(as_vector(data.outputs()));
    alphas = Eigen::Map<const Eigen::MatrixXd>(solution.data(), d, n);
  } else {
    // Samples sharing an input share K(x_i, .), so f = sum_g K(u_g, .) beta_g
    // with beta_g the group sum of alpha. Summing the normal equations over a
    // group gives (G_u + n lambda C^{-1}) beta = C^{-1} s, C = diag(counts).
    const Index u = groups.unique.cols();
    Eigen::MatrixXd group_sums = Eigen::MatrixXd::Zero(d, u);
    for (Index i = 0; i < n; ++i) group_sums.col(groups.group_of[static_cast<std::size_t>(i)]) += data.outputs().col(i);
    const GramBlocks gram = gram_blocks(*kernel, groups.unique, options.execution);
    Eigen::MatrixXd system = gram.flattened();
    Eigen::MatrixXd rhs(d, u);
    for (Index g = 0; g < u; ++g) {
      const double c = groups.counts(g);
      for (Index k = 0; k < d; ++k) system(g * d + k, g * d + k) += shift / c;
      rhs.col(g) = group_sums.col(g) / c;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) throw_indefinite(gram.flattened(), shift);
    const Eigen::VectorXd beta = llt.solve(as_vector(rhs));
    const Eigen::VectorXd fitted_flat = gram.flattened() * beta;
    const Eigen::Map<const Eigen::MatrixXd> fitted(fitted_flat.data(), d, u);
    for (Index i = 0; i < n; ++i) {
      alphas.col(i) = (data.outputs().col(i) - fitted.col(groups.group_of[static_cast<std::size_t>(i)])) / shift;
    }
  }
  return FittedModel(KernelExpansion(std::move(kernel), data.inputs(), std::move(alphas)), lambda, n);
}

OutputVector predict(const FittedModel& model, ConstVectorRef x) { return model.predict(x); }

double normal_equation_residual(const FittedModel& model, const TrainingSet& data) {
  if (model.sample_count() != data.size() || model.anchors().rows() != data.input_dim()) {
    throw std::invalid_argument("normal_equation_residual: model was not fitted on this data");
  }
  const double shift = static_cast<double>(data.size()) * model.lambda();
  const Eigen::MatrixXd gram_alpha = model.expansion().evaluate(data.inputs());
  return (gram_alpha + shift * model.alphas() - data.outputs()).norm();
}

RiskReport empirical_risk(const KernelExpansion& f, const TrainingSet& data, std::optional<double> lambda) {
  if (f.input_dim() != data.input_dim() || f.output_dim() != data.output_dim()) {
    throw std::invalid_argument("empirical_risk: function and data dimensions differ");
  }
  const Eigen::MatrixXd residuals = f.evaluate(data.inputs()) - data.outputs();
  RiskReport report{};
  report.unregularised = residuals.colwise().squaredNorm().sum() / static_cast<double>(data.size());
  report.regulariser = lambda ? *lambda * h_norm_sq(f) : 0.0;
  report.regularised = report.unregularised + report.regulariser;
  return report;
}

KernelExpansion risk_gradient(const KernelExpansion& f, const TrainingSet& data, double lambda) {
  const double n = static_cast<double>(data.size());
  const StackedOutputs sampled = sample(f, data.inputs());
  const StackedOutputs residual(sampled.matrix() - data.outputs() / n);
  return sample_adjoint(f.kernel_ptr(), data.inputs(), residual).scaled(2.0 * n) + f.scaled(2.0 * lambda);
}

DerivativeCheck directional_derivative_check(const KernelExpansion& f, const TrainingSet& data,
                                             double lambda, std::span<const KernelExpansion> directions,
                                             double step) {
  if (!(step > 0.0)) throw std::invalid_argument("directional_derivative_check: step must be positive");
  const KernelExpansion gradient = risk_gradient(f, data, lambda);
  DerivativeCheck check;
  for (const auto& v : directions) {
    const double plus = empirical_risk(f + v.scaled(step), data, lambda).regularised;
    const double minus = empirical_risk(f - v.scaled(step), data, lambda).regularised;
    const double finite_diff = (plus - minus) / (2.0 * step);
    const double analytic = h_inner(gradient, v);
    const double mismatch = std::abs(finite_diff - analytic);
    check.max_abs_mismatch = std::max(check.max_abs_mismatch, mismatch);
    check.max_rel_mismatch = std::max(check.max_rel_mismatch, mismatch / std::max(1.0, std::abs(analytic)));
    check.max_abs_analytic = std::max(check.max_abs_analytic, std::abs(analytic));
    ++check.probes;
  }
  return check;
}

std::vector<KernelExpansion> random_unit_directions(KernelPtr kernel, const TrainingSet& data, int count,
                                                    Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, data.size() - 1);
  const Index p = data.input_dim();
  const Index d = kernel->output_dim();
  constexpr Index kOnData = 4;
  constexpr Index kOffData = 2;
  std::vector<KernelExpansion> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    Points anchors(p, kOnData + kOffData);
    for (Index j = 0; j < anchors.cols(); ++j) {
      anchors.col(j) = data.inputs().col(pick(rng));
      if (j >= kOnData) {
        for (Index k = 0; k < p; ++k) anchors(k, j) += 0.5 * normal(rng);
      }
    }
    Eigen::MatrixXd coeffs(d, anchors.cols());
    for (Index j = 0; j < coeffs.size(); ++j) coeffs.data()[j] = normal(rng);
    KernelExpansion v(kernel, std::move(anchors), std::move(coeffs));
    const double norm = h_norm(v);
    if (norm > 1e-8) out.push_back(v.scaled(1.0 / norm));
  }
  return out;
}

DerivativeCheck minimiser_certificate(const FittedModel& model, const TrainingSet& data, int probes,
                                      double step, std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("minimiser_certificate: probes must be >= 1");
  Rng rng = make_stream(seed);
  const auto directions = random_unit_directions(model.expansion().kernel_ptr(), data, probes, rng);
  return directional_derivative_check(model.expansion(), data, model.lambda(), directions, step);
}

bool objective_comparison(const FittedModel& model, const TrainingSet& data,
                          std::span<const KernelExpansion> rivals) {
  const double best = empirical_risk(model.expansion(), data, model.lambda()).regularised;
  for (const auto& g : rivals) {
    if (!g.kernel().equals(model.kernel())) {
      throw std::invalid_argument("objective_comparison: rival uses a different kernel");
    }
    if (best > empirical_risk(g, data, model.lambda()).regularised + 1e-9) return false;
  }
  return true;
}

}  // namespace opkrr
