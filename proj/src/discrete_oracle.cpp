#include "opkrr/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace opkrr {
namespace {

Eigen::Map<const Eigen::VectorXd> flat(const Eigen::MatrixXd& m) { return {m.data(), m.size()}; }

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Index rows, Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void require_compatible(const DiscretePopulation& pop, const OperatorKernel& kernel, const char* what) {
  if (kernel.output_dim() != pop.output_dim()) {
    throw std::invalid_argument(std::string(what) + ": kernel output dimension " +
                                std::to_string(kernel.output_dim()) + " does not match population dimension " +
                                std::to_string(pop.output_dim()));
  }
}

void require_nonsingular(const Eigen::MatrixXd& gram, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi))) {
    std::ostringstream msg;
    msg << what << ": basis Gram is singular (eigenvalues in [" << lo << ", " << hi
        << "]); support points must be distinct and T positive definite";
    throw std::domain_error(msg.str());
  }
}

Index find_atom(const Points& support, ConstVectorRef x) {
  for (Index j = 0; j < support.cols(); ++j) {
    if (support.col(j) == x) return j;
  }
  return -1;
}

}  // namespace

NoiseLaw NoiseLaw::isotropic_gaussian(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("isotropic-gaussian noise: tau must be >= 0");
  return {NoiseKind::isotropic_gaussian, tau};
}

NoiseLaw NoiseLaw::bounded_uniform(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("bounded-uniform noise: radius must be >= 0");
  }
  return {NoiseKind::bounded_uniform, radius};
}

NoiseLaw NoiseLaw::parse(std::string_view name, double parameter) {
  if (name == "none") return none();
  if (name == "isotropic-gaussian") return isotropic_gaussian(parameter);
  if (name == "bounded-uniform") return bounded_uniform(parameter);
  throw std::invalid_argument("unknown noise law '" + std::string(name) +
                              "' (expected none, isotropic-gaussian or bounded-uniform)");
}

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::isotropic_gaussian:
      return "isotropic-gaussian";
    case NoiseKind::bounded_uniform:
      return "bounded-uniform";
  }
  return "unknown";
}

double NoiseLaw::second_moment(Index dim) const {
  const auto d = static_cast<double>(dim);
  switch (kind_) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::isotropic_gaussian:
      return d * parameter_ * parameter_;
    case NoiseKind::bounded_uniform:
      return d * parameter_ * parameter_ / 3.0;
  }
  return 0.0;
}

void NoiseLaw::add_to(Eigen::Ref<Eigen::VectorXd> y, Rng& rng) const {
  switch (kind_) {
    case NoiseKind::none:
      return;
    case NoiseKind::isotropic_gaussian: {
      std::normal_distribution<double> normal(0.0, parameter_);
      for (Index k = 0; k < y.size(); ++k) y(k) += normal(rng);
      return;
    }
    case NoiseKind::bounded_uniform: {
      std::uniform_real_distribution<double> uniform(-parameter_, parameter_);
      for (Index k = 0; k < y.size(); ++k) y(k) += uniform(rng);
      return;
    }
  }
}

DiscretePopulation::DiscretePopulation(Points support, Eigen::VectorXd probs, Eigen::MatrixXd target,
                                       NoiseLaw noise)
    : support_(std::move(support)), probs_(std::move(probs)), target_(std::move(target)), noise_(noise) {
  const Index m = support_.cols();
  if (m < 1 || support_.rows() < 1) throw std::invalid_argument("DiscretePopulation: empty support");
  if (probs_.size() != m || target_.cols() != m) {
    throw std::invalid_argument("DiscretePopulation: support, probs and target sizes differ");
  }
  if (target_.rows() < 1) throw std::invalid_argument("DiscretePopulation: output dimension must be >= 1");
  if (!support_.allFinite() || !target_.allFinite() || !probs_.allFinite()) {
    throw std::invalid_argument("DiscretePopulation: non-finite value");
  }
  if ((probs_.array() <= 0.0).any()) throw std::invalid_argument("DiscretePopulation: probabilities must be > 0");
  if (std::abs(probs_.sum() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "DiscretePopulation: probabilities sum to " << probs_.sum() << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
  for (Index j = 0; j < m; ++j) {
    for (Index k = j + 1; k < m; ++k) {
      if (support_.col(j) == support_.col(k)) {
        throw std::invalid_argument("DiscretePopulation: duplicate support points " + std::to_string(j) +
                                    " and " + std::to_string(k));
      }
    }
  }
  cumulative_.resize(m);
  double running = 0.0;
  for (Index j = 0; j < m; ++j) cumulative_(j) = (running += probs_(j));
}

double DiscretePopulation::output_second_moment() const {
  return probs_.dot(target_.colwise().squaredNorm().transpose()) + optimal_risk();
}

Index DiscretePopulation::atom_for(double uniform) const {
  const auto* begin = cumulative_.data();
  const auto* end = begin + cumulative_.size();
  const auto* it = std::upper_bound(begin, end, uniform);
  return it == end ? cumulative_.size() - 1 : static_cast<Index>(it - begin);
}

WellSpecifiedPopulation make_well_specified(Points support, Eigen::VectorXd probs, KernelPtr kernel,
                                            Eigen::MatrixXd coeffs, NoiseLaw noise) {
  if (!kernel) throw std::invalid_argument("make_well_specified: null kernel");
  KernelExpansion fstar(kernel, support, std::move(coeffs));
  Eigen::MatrixXd target = fstar.evaluate(support);
  DiscretePopulation pop(std::move(support), std::move(probs), std::move(target), noise);
  const double c = h_norm_sq(fstar);
  const double m = pop.output_second_moment();
  return {std::move(pop), WellSpecifiedSpec{std::move(fstar), m, std::max(0.0, c)}};
}

std::optional<WellSpecifiedSpec> certify_well_specified(const DiscretePopulation& pop, KernelPtr kernel) {
  require_compatible(pop, *kernel, "certify_well_specified");
  const Eigen::MatrixXd gram = gram_blocks(*kernel, pop.support()).flattened();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd coeffs = llt.solve(flat(pop.target()));
  if ((gram * coeffs - flat(pop.target())).norm() > 1e-8 * (1.0 + pop.target().norm())) return std::nullopt;
  KernelExpansion fstar(kernel, pop.support(), unflatten(coeffs, pop.output_dim(), pop.atoms()));
  const double c = std::max(0.0, h_norm_sq(fstar));
  return WellSpecifiedSpec{std::move(fstar), pop.output_second_moment(), c};
}

PopulationOperators population_operators(const DiscretePopulation& pop, const OperatorKernel& kernel) {
  require_compatible(pop, kernel, "population_operators");
  const Index d = pop.output_dim();
  PopulationOperators ops;
  ops.basis_gram = gram_blocks(kernel, pop.support()).flattened();
  ops.weights.resize(pop.atoms() * d);
  for (Index j = 0; j < pop.atoms(); ++j) ops.weights.segment(j * d, d).setConstant(pop.probs()(j));
  // iota^* iota c: f = sum_j K(x_j,.) c_j has values G c on the support, and
  // iota^* g = sum_j p_j K(x_j,.) g(x_j) has coordinates P g.
  ops.iota_star_iota = ops.weights.asDiagonal() * ops.basis_gram;
  // iota iota^* g: the values on the support of iota^* g.
  ops.iota_iota_star = ops.basis_gram * ops.weights.asDiagonal();
  return ops;
}

KernelExpansion iota_star(const DiscretePopulation& pop, KernelPtr kernel, const Eigen::MatrixXd& values) {
  require_compatible(pop, *kernel, "iota_star");
  if (values.rows() != pop.output_dim() || values.cols() != pop.atoms()) {
    throw std::invalid_argument("iota_star: values must be d x m");
  }
  return {std::move(kernel), pop.support(), values * pop.probs().asDiagonal()};
}

MinimiserForms population_minimiser_forms(const DiscretePopulation& pop, KernelPtr kernel, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("population_minimiser: lambda must be finite and positive");
  }
  const PopulationOperators ops = population_operators(pop, *kernel);
  require_nonsingular(ops.basis_gram, "population_minimiser");
  const Index md = ops.weights.size();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(md, md);
  const auto fstar = flat(pop.target());

  const Eigen::VectorXd primal =
      (ops.iota_star_iota + lambda * identity).partialPivLu().solve(ops.weights.cwiseProduct(fstar));
  const Eigen::VectorXd dual_l2 = (ops.iota_iota_star + lambda * identity).partialPivLu().solve(fstar);
  const Eigen::VectorXd dual = ops.weights.cwiseProduct(dual_l2);

  const Eigen::VectorXd diff = primal - dual;
  const double gap = std::sqrt(std::max(0.0, diff.dot(ops.basis_gram * diff)));
  const Index d = pop.output_dim();
  const Index m = pop.atoms();
  return {KernelExpansion(kernel, pop.support(), unflatten(primal, d, m)),
          KernelExpansion(kernel, pop.support(), unflatten(dual, d, m)), gap};
}

KernelExpansion population_minimiser(const DiscretePopulation& pop, KernelPtr kernel, double lambda) {
  MinimiserForms forms = population_minimiser_forms(pop, std::move(kernel), lambda);
  if (!(forms.gap <= 1e-8)) {
    std::ostringstream msg;
    msg << "population_minimiser: operator forms disagree by " << forms.gap << " in H-norm";
    throw std::runtime_error(msg.str());
  }
  return std::move(forms.primal);
}

double excess_risk(const DiscretePopulation& pop, const KernelExpansion& f) {
  if (f.input_dim() != pop.input_dim() || f.output_dim() != pop.output_dim()) {
    throw std::invalid_argument("excess_risk: function and population dimensions differ");
  }
  const Eigen::MatrixXd diff = f.evaluate(pop.support()) - pop.target();
  return pop.probs().dot(diff.colwise().squaredNorm().transpose());
}

double population_risk(const DiscretePopulation& pop, const KernelExpansion& f) {
  return excess_risk(pop, f) + pop.optimal_risk();
}

double population_regularised_risk(const DiscretePopulation& pop, const KernelExpansion& f, double lambda) {
  return population_risk(pop, f) + lambda * h_norm_sq(f);
}

double monte_carlo_excess_risk(const DiscretePopulation& pop, const KernelExpansion& f, Index samples,
                               std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("monte_carlo_excess_risk: samples must be >= 1");
  Rng rng = make_stream(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double total = 0.0;
  for (Index s = 0; s < samples; ++s) {
    const Index j = pop.atom_for(uniform(rng));
    total += (f(pop.support().col(j)) - pop.target().col(j)).squaredNorm();
  }
  return total / static_cast<double>(samples);
}

DecompositionCheck risk_decomposition_check(const DiscretePopulation& pop, const KernelExpansion& f,
                                            Index samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("risk_decomposition_check: samples must be >= 2");
  Rng rng = make_stream(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::VectorXd y(pop.output_dim());
  double mean = 0.0;
  double m2 = 0.0;
  for (Index s = 0; s < samples; ++s) {
    const Index j = pop.atom_for(uniform(rng));
    y = pop.target().col(j);
    pop.noise().add_to(y, rng);
    const double loss = (f(pop.support().col(j)) - y).squaredNorm();
    // Welford update.
    const double delta = loss - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (loss - mean);
  }
  DecompositionCheck check{};
  check.monte_carlo_risk = mean;
  check.standard_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  check.predicted_risk = excess_risk(pop, f) + pop.optimal_risk();
  check.deviation = std::abs(check.monte_carlo_risk - check.predicted_risk);
  return check;
}

TrainingSet sample_dataset(const DiscretePopulation& pop, Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Points xs(pop.input_dim(), n);
  Eigen::MatrixXd ys(pop.output_dim(), n);
  for (Index i = 0; i < n; ++i) {
    const Index j = pop.atom_for(uniform(rng));
    xs.col(i) = pop.support().col(j);
    ys.col(i) = pop.target().col(j);
    pop.noise().add_to(ys.col(i), rng);
  }
  return {std::move(xs), std::move(ys)};
}

TrainingSet sample_dataset(const DiscretePopulation& pop, Index n, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  return sample_dataset(pop, n, rng);
}

Eigen::MatrixXd support_coordinates(const KernelExpansion& f, const Points& support) {
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(f.output_dim(), support.cols());
  for (Index i = 0; i < f.size(); ++i) {
    const Index j = find_atom(support, f.anchors().col(i));
    if (j < 0) throw std::invalid_argument("support_coordinates: anchor " + std::to_string(i) + " is off the support");
    coords.col(j) += f.coeffs().col(i);
  }
  return coords;
}

Eigen::MatrixXd empirical_primal_coordinates(const DiscretePopulation& pop, const OperatorKernel& kernel,
                                             const TrainingSet& data, double lambda) {
  require_compatible(pop, kernel, "empirical_primal_coordinates");
  if (!(lambda > 0.0)) throw std::invalid_argument("empirical_primal_coordinates: lambda must be positive");
  const Index d = pop.output_dim();
  const Index m = pop.atoms();
  const auto n = static_cast<double>(data.size());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, m);
  for (Index i = 0; i < data.size(); ++i) {
    const Index j = find_atom(pop.support(), data.inputs().col(i));
    if (j < 0) throw std::invalid_argument("empirical_primal_coordinates: input off the support");
    counts(j) += 1.0;
    sums.col(j) += data.outputs().col(i);
  }
  // n S^* S has coordinates diag(counts / n) G; S^* Y has coordinates sums / n.
  Eigen::VectorXd weights(m * d);
  for (Index j = 0; j < m; ++j) weights.segment(j * d, d).setConstant(counts(j) / n);
  const Eigen::MatrixXd gram = gram_blocks(kernel, pop.support()).flattened();
  Eigen::MatrixXd system = weights.asDiagonal() * gram;
  system.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = flat(sums) / n;
  return unflatten(system.partialPivLu().solve(rhs), d, m);
}

}  // namespace opkrr
