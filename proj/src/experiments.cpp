#include "opkrr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opkrr {
namespace {

const PopulationMember& first_discrete(const ExperimentConfig& cfg, const char* what) {
  if (cfg.population_kind != "discrete") {
    throw std::invalid_argument(std::string(what) + ": population kind '" + cfg.population_kind +
                                "' has no exact population minimiser; use a discrete population "
                                "(kind = \"discrete\") so f_lambda can be computed exactly");
  }
  if (cfg.populations.empty()) throw std::invalid_argument(std::string(what) + ": no population configured");
  return cfg.populations.front();
}

double sorted_median(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

// Distribution-free: the 95% rank interval for the median spans about
// +-1.96 standard errors.
double median_standard_error(const std::vector<double>& sorted) {
  const auto n = static_cast<double>(sorted.size());
  if (sorted.size() < 2) return 0.0;
  const double half_width = 1.96 * std::sqrt(n) / 2.0;
  const auto last = static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::clamp(std::floor(n / 2.0 - half_width), 0.0, last));
  const auto hi = static_cast<std::size_t>(std::clamp(std::ceil(n / 2.0 + half_width), 0.0, last));
  return (sorted[hi] - sorted[lo]) / (2.0 * 1.96);
}

// Nearest-rank (1 - delta) quantile.
double upper_quantile(const std::vector<double>& sorted, double delta) {
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil((1.0 - delta) * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

RateRow summarise(Index n, double lambda, std::vector<double> excess, double delta, double bound) {
  RateRow row{};
  row.n = n;
  row.lambda = lambda;
  row.trials = static_cast<int>(excess.size());
  std::vector<double> sorted = excess;
  std::sort(sorted.begin(), sorted.end());
  row.median = sorted_median(sorted);
  row.median_se = median_standard_error(sorted);
  row.quantile = upper_quantile(sorted, delta);
  row.bound = bound;
  const auto exceed = std::count_if(excess.begin(), excess.end(), [&](double e) { return e >= bound; });
  row.exceed_freq = std::isnan(bound) ? std::nan("") : static_cast<double>(exceed) / static_cast<double>(row.trials);
  row.excess = std::move(excess);
  return row;
}

void require_rule(const Schedule& schedule, const char* what) {
  if (!schedule.rule) {
    throw std::invalid_argument(std::string(what) + ": schedule needs a lambda rule lambda_n = c * n^(-a)");
  }
}

}  // namespace

double LambdaRule::at(Index n) const { return c * std::pow(static_cast<double>(n), -exponent); }

std::vector<std::pair<Index, double>> Schedule::pairs() const {
  if (sizes.empty()) throw std::invalid_argument("schedule: no sample sizes");
  if (rule && !lambdas.empty()) throw std::invalid_argument("schedule: give either lambdas or a rule, not both");
  if (!rule && lambdas.empty()) throw std::invalid_argument("schedule: needs lambdas or a lambda rule");
  if (!rule && lambdas.size() != 1 && lambdas.size() != sizes.size()) {
    throw std::invalid_argument("schedule: lambda list must have length 1 or match the sample sizes");
  }
  std::vector<std::pair<Index, double>> out;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1) throw std::invalid_argument("schedule: sample sizes must be >= 1");
    const double lambda = rule ? rule->at(sizes[k]) : lambdas[lambdas.size() == 1 ? 0 : k];
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("schedule: every lambda must be finite and positive");
    }
    out.emplace_back(sizes[k], lambda);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1)");
  if (!kernel) throw std::invalid_argument("config: no kernel");
  (void)schedule.pairs();
}

double binomial_slack(double delta, int trials) {
  return 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

bool TailReport::within_bound() const {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const TailRow& r) { return r.exceed_freq <= delta + binomial_slack(delta, r.trials); });
}

bool RateReport::within_bound() const {
  return std::all_of(rows.begin(), rows.end(), [&](const RateRow& r) {
    return !std::isnan(r.exceed_freq) && r.exceed_freq <= delta + binomial_slack(delta, r.trials);
  });
}

TrendCheck check_consistency_trend(const RateReport& report) {
  TrendCheck check;
  if (report.rows.size() < 2) {
    check.skipped = true;
    check.message = "schedule has a single sample size; trend check skipped";
    return check;
  }
  std::vector<std::string> notes;
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    const auto& prev = report.rows[k - 1];
    const auto& cur = report.rows[k];
    const double slack = 2.0 * std::hypot(prev.median_se, cur.median_se);
    if (cur.median > prev.median + slack) {
      check.passed = false;
      std::ostringstream msg;
      msg << "median rose from " << prev.median << " (n=" << prev.n << ") to " << cur.median << " (n=" << cur.n
          << ") beyond 2-SE slack " << slack;
      notes.push_back(msg.str());
    }
  }
  const auto& first = report.rows.front();
  const auto& last = report.rows.back();
  check.final_ratio = last.median / first.median;
  if (last.n >= 100 * first.n) {
    if (check.final_ratio > 0.5) {
      check.passed = false;
      std::ostringstream msg;
      msg << "final median " << last.median << " is not at most half of the first " << first.median;
      notes.push_back(msg.str());
    }
  } else {
    notes.emplace_back("n grows less than 100-fold; halving check not applied");
  }
  for (std::size_t k = 0; k < notes.size(); ++k) check.message += (k ? "; " : "") + notes[k];
  return check;
}

double tail_threshold(double bound, double output_second_moment, Index n, double lambda, double delta) {
  return bound * output_second_moment / (static_cast<double>(n) * lambda * lambda * delta);
}

double uniform_rate_bound(double bound, double M, double C, Index n, double lambda, double delta) {
  return 2.0 * bound * bound * M / (static_cast<double>(n) * lambda * lambda * delta) + 2.0 * lambda * C;
}

std::vector<double> excess_risk_trials(const DiscretePopulation& pop, KernelPtr kernel, Index n, double lambda,
                                       int trials, std::uint64_t seed, std::uint64_t stream, Execution exec) {
  std::vector<double> excess(static_cast<std::size_t>(trials));
  for_each_index(trials, exec, [&](std::ptrdiff_t t) {
    Rng rng = make_stream(seed, stream, static_cast<std::uint64_t>(t));
    const TrainingSet data = sample_dataset(pop, n, rng);
    const FittedModel model = fit(data, kernel, lambda, {.execution = Execution::serial});
    excess[static_cast<std::size_t>(t)] = excess_risk(pop, model.expansion());
  });
  return excess;
}

TailReport run_tail_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const PopulationMember& member = first_discrete(cfg, "tail experiment");
  const DiscretePopulation& pop = member.population;
  const double bound = cfg.kernel->bound().value;
  const double second_moment = pop.output_second_moment();

  TailReport report;
  report.delta = cfg.delta;
  const auto pairs = cfg.schedule.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [n, lambda] = pairs[k];
    const KernelExpansion f_lambda = population_minimiser(pop, cfg.kernel, lambda);
    std::vector<double> deviations(static_cast<std::size_t>(cfg.trials));
    for_each_index(cfg.trials, cfg.execution, [&](std::ptrdiff_t t) {
      Rng rng = make_stream(cfg.seed, k, static_cast<std::uint64_t>(t));
      const TrainingSet data = sample_dataset(pop, n, rng);
      const FittedModel model = fit(data, cfg.kernel, lambda, {.execution = Execution::serial});
      deviations[static_cast<std::size_t>(t)] = h_norm_sq(model.expansion() - f_lambda, Execution::serial);
    });
    TailRow row{};
    row.n = n;
    row.lambda = lambda;
    row.trials = cfg.trials;
    row.threshold = tail_threshold(bound, second_moment, n, lambda, cfg.delta);
    const auto exceed =
        std::count_if(deviations.begin(), deviations.end(), [&](double v) { return v >= row.threshold; });
    row.exceed_freq = static_cast<double>(exceed) / static_cast<double>(cfg.trials);
    row.deviations = std::move(deviations);
    report.rows.push_back(std::move(row));
  }
  return report;
}

RateReport run_consistency_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  require_rule(cfg.schedule, "consistency experiment");
  const double a = cfg.schedule.rule->exponent;
  if (!(a < 0.5)) {
    std::ostringstream msg;
    msg << "consistency experiment: lambda_n = c n^(-" << a
        << ") decays too fast; universal consistency needs lambda_n -> 0 slower than n^(-1/2), i.e. exponent < 0.5";
    throw std::invalid_argument(msg.str());
  }
  if (!(a > 0.0)) throw std::invalid_argument("consistency experiment: exponent must be > 0 so lambda_n -> 0");
  const PopulationMember& member = first_discrete(cfg, "consistency experiment");
  const double bound = cfg.kernel->bound().value;

  RateReport report;
  report.label = "consistency";
  report.delta = cfg.delta;
  const auto pairs = cfg.schedule.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [n, lambda] = pairs[k];
    auto excess = excess_risk_trials(member.population, cfg.kernel, n, lambda, cfg.trials, cfg.seed, k, cfg.execution);
    const double rate_bound = member.spec ? uniform_rate_bound(bound, member.spec->M, member.spec->C, n, lambda, cfg.delta)
                                          : std::nan("");
    report.rows.push_back(summarise(n, lambda, std::move(excess), cfg.delta, rate_bound));
  }
  return report;
}

std::vector<RateReport> run_uniform_rate_experiment(const ExperimentConfig& cfg,
                                                    const std::vector<WellSpecifiedPopulation>& members) {
  cfg.validate();
  require_rule(cfg.schedule, "uniform-rate experiment");
  if (std::abs(cfg.schedule.rule->exponent - 0.25) > 1e-12) {
    throw std::invalid_argument("uniform-rate experiment: lambda rule exponent must be 1/4 (lambda_n = c n^(-1/4))");
  }
  if (members.empty()) throw std::invalid_argument("uniform-rate experiment: no populations");
  double class_M = 0.0;
  double class_C = 0.0;
  for (const auto& m : members) {
    class_M = std::max(class_M, m.spec.M);
    class_C = std::max(class_C, m.spec.C);
  }
  if (cfg.class_M) class_M = *cfg.class_M;
  if (cfg.class_C) class_C = *cfg.class_C;

  // Recompute each certificate from scratch rather than trusting the spec.
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& pop = members[i].population;
    const auto& spec = members[i].spec;
    if (!spec.fstar.kernel().equals(*cfg.kernel)) {
      throw std::invalid_argument("uniform-rate experiment: member " + std::to_string(i) + " uses a different kernel");
    }
    const double second_moment = pop.output_second_moment();
    const double norm_sq = h_norm_sq(spec.fstar);
    const double target_gap = (spec.fstar.evaluate(pop.support()) - pop.target()).cwiseAbs().maxCoeff();
    std::ostringstream msg;
    if (target_gap > 1e-10) {
      msg << "member " << i << " is not well-specified: iota f*_H misses the target by " << target_gap;
    } else if (second_moment > class_M * (1.0 + 1e-12)) {
      msg << "member " << i << " violates E||Y||^2 <= M (" << second_moment << " > " << class_M << ")";
    } else if (norm_sq > class_C * (1.0 + 1e-12) + 1e-12) {
      msg << "member " << i << " violates ||f*_H||^2 <= C (" << norm_sq << " > " << class_C << ")";
    }
    if (!msg.str().empty()) throw std::invalid_argument("uniform-rate experiment: uncertified population: " + msg.str());
  }

  const double bound = cfg.kernel->bound().value;
  const auto pairs = cfg.schedule.pairs();
  std::vector<RateReport> reports;
  for (std::size_t i = 0; i < members.size(); ++i) {
    RateReport report;
    report.label = "member " + std::to_string(i);
    report.delta = cfg.delta;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [n, lambda] = pairs[k];
      const std::uint64_t stream = (static_cast<std::uint64_t>(i) << 32U) | k;
      auto excess = excess_risk_trials(members[i].population, cfg.kernel, n, lambda, cfg.trials, cfg.seed, stream,
                                       cfg.execution);
      report.rows.push_back(
          summarise(n, lambda, std::move(excess), cfg.delta, uniform_rate_bound(bound, class_M, class_C, n, lambda, cfg.delta)));
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

bool GradcheckRow::passed() const {
  return residual <= residual_tolerance && max_derivative_at_fit <= derivative_tolerance && max_rel_fd_mismatch <= 1e-5;
}

std::vector<GradcheckRow> run_gradcheck(const ExperimentConfig& cfg) {
  cfg.validate();
  const PopulationMember& member = first_discrete(cfg, "gradcheck");
  const auto pairs = cfg.schedule.pairs();
  std::vector<GradcheckRow> rows(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [n, lambda] = pairs[k];
    Rng rng = make_stream(cfg.seed, k, 0);
    const TrainingSet data = sample_dataset(member.population, n, rng);
    const FittedModel model = fit(data, cfg.kernel, lambda, {.execution = cfg.execution});
    const double y_norm = data.outputs().norm();
    const DerivativeCheck at_fit = minimiser_certificate(model, data, cfg.probes, cfg.step, cfg.seed + k + 1);

    Rng dir_rng = make_stream(cfg.seed, k, 1);
    const auto offsets = random_unit_directions(cfg.kernel, data, 1, dir_rng);
    const KernelExpansion elsewhere = model.expansion() + offsets.front().scaled(2.0);
    const auto directions = random_unit_directions(cfg.kernel, data, cfg.probes, dir_rng);
    const DerivativeCheck off_fit = directional_derivative_check(elsewhere, data, lambda, directions, cfg.step);

    GradcheckRow& row = rows[k];
    row.n = n;
    row.lambda = lambda;
    row.residual = normal_equation_residual(model, data);
    row.residual_tolerance = 1e-8 * (1.0 + y_norm);
    row.max_derivative_at_fit = at_fit.max_abs_analytic;
    row.derivative_tolerance = 1e-7 * (1.0 + y_norm);
    row.max_rel_fd_mismatch = off_fit.max_rel_mismatch;
    row.probes = cfg.probes;
  }
  return rows;
}

double operator_average_error(const DiscretePopulation& pop, KernelPtr kernel, const KernelExpansion& f, Index n,
                              int resamples, std::uint64_t seed) {
  if (resamples < 1) throw std::invalid_argument("operator_average_error: resamples must be >= 1");
  Eigen::MatrixXd average = Eigen::MatrixXd::Zero(pop.output_dim(), pop.atoms());
  for (int r = 0; r < resamples; ++r) {
    Rng rng = make_stream(seed, 0, static_cast<std::uint64_t>(r));
    const TrainingSet design = sample_dataset(pop, n, rng);
    const KernelExpansion applied =
        sample_adjoint(kernel, design.inputs(), sample(f, design.inputs())).scaled(static_cast<double>(n));
    average += support_coordinates(applied, pop.support());
  }
  average /= static_cast<double>(resamples);
  const KernelExpansion target = iota_star(pop, kernel, f.evaluate(pop.support()));
  return h_norm(KernelExpansion(kernel, pop.support(), average) - target);
}

WellSpecifiedPopulation random_well_specified(KernelPtr kernel, Index atoms, Index input_dim, NoiseLaw noise, Rng& rng,
                                              double spread, double coeff_scale) {
  if (atoms < 1 || input_dim < 1) throw std::invalid_argument("random_well_specified: sizes must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> exponential(1.0);
  Points support(input_dim, atoms);
  for (Index i = 0; i < support.size(); ++i) support.data()[i] = spread * normal(rng);
  Eigen::VectorXd probs(atoms);
  for (Index j = 0; j < atoms; ++j) probs(j) = exponential(rng);
  probs /= probs.sum();
  probs = probs.cwiseMax(0.05 / static_cast<double>(atoms));
  probs /= probs.sum();
  Eigen::MatrixXd coeffs(kernel->output_dim(), atoms);
  for (Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = coeff_scale * normal(rng);
  return make_well_specified(std::move(support), std::move(probs), std::move(kernel), std::move(coeffs), noise);
}

}  // namespace opkrr
