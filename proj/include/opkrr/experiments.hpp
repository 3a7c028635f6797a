#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opkrr/discrete_oracle.hpp"
#include "opkrr/parallel.hpp"

namespace opkrr {

/// lambda_n = c * n^(-exponent).
struct LambdaRule {
  double c = 1.0;
  double exponent = 0.0;
  double at(Index n) const;
};

/// Sample sizes paired with either explicit lambdas or a rule. An explicit
/// list of length 1 is broadcast over every n.
struct Schedule {
  std::vector<Index> sizes;
  std::vector<double> lambdas;
  std::optional<LambdaRule> rule;

  /// Throws std::invalid_argument if empty, mis-sized, or any lambda <= 0.
  std::vector<std::pair<Index, double>> pairs() const;
};

struct PopulationMember {
  DiscretePopulation population;
  std::optional<WellSpecifiedSpec> spec;
};

struct ExperimentConfig {
  /// "discrete" is the only kind with exact population operators.
  std::string population_kind = "discrete";
  std::vector<PopulationMember> populations;
  KernelPtr kernel;
  Schedule schedule;
  int trials = 100;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::string output;
  std::optional<std::string> plot;
  /// Class constants for the uniform-rate experiment; when absent each is the
  /// largest certified value over the members.
  std::optional<double> class_M;
  std::optional<double> class_C;
  /// Finite-difference step and direction count for gradcheck.
  double step = 1e-4;
  int probes = 50;
  Execution execution = Execution::parallel;

  /// Throws std::invalid_argument if trials < 1, delta outside (0, 1), the
  /// schedule is invalid, or the kernel is missing.
  void validate() const;
};

/// 3 sqrt(delta (1 - delta) / trials): sampling slack on an exceedance frequency.
double binomial_slack(double delta, int trials);

struct TailRow {
  Index n;
  double lambda;
  double threshold;    // B E||Y||^2 / (n lambda^2 delta)
  double exceed_freq;  // fraction of trials with ||f_hat - f_lambda||_H^2 >= threshold
  int trials;
  std::vector<double> deviations;  // ||f_hat - f_lambda||_H^2 per trial
};

struct TailReport {
  double delta = 0.1;
  std::vector<TailRow> rows;
  /// exceed_freq <= delta + binomial_slack for every row.
  bool within_bound() const;
};

struct RateRow {
  Index n;
  double lambda;
  std::vector<double> excess;  // excess risk of f_hat per trial
  double median;
  double median_se;            // rank-based standard error of the median
  double quantile;             // (1 - delta) quantile of excess
  double bound;                // 2 B^2 M / (n lambda^2 delta) + 2 lambda C, NaN if C unknown
  double exceed_freq;          // fraction of trials with excess >= bound
  int trials;
};

struct RateReport {
  std::string label;
  double delta = 0.1;
  std::vector<RateRow> rows;
  bool within_bound() const;
};

struct TrendCheck {
  bool passed = true;
  bool skipped = false;
  /// last median / first median.
  double final_ratio = 0.0;
  std::string message;
};

/// Medians nonincreasing within 2 standard errors, and the last median at most
/// half the first when n grows at least 100-fold. Skipped for a single row.
TrendCheck check_consistency_trend(const RateReport& report);

/// Threshold B E||Y||^2 / (n lambda^2 delta).
double tail_threshold(double bound, double output_second_moment, Index n, double lambda, double delta);
/// 2 B^2 M / (n lambda^2 delta) + 2 lambda C.
double uniform_rate_bound(double bound, double M, double C, Index n, double lambda, double delta);

/// Excess risk per trial of f_hat for the given (n, lambda) on one population.
/// Trials use make_stream(seed, stream, t) and run concurrently.
std::vector<double> excess_risk_trials(const DiscretePopulation& pop, KernelPtr kernel, Index n, double lambda,
                                       int trials, std::uint64_t seed, std::uint64_t stream, Execution exec);

TailReport run_tail_experiment(const ExperimentConfig& cfg);
/// Requires a lambda rule with exponent < 1/2.
RateReport run_consistency_experiment(const ExperimentConfig& cfg);
/// Requires a lambda rule with exponent 1/4; every member must certify
/// E||Y||^2 <= M and ||f*_H||^2 <= C.
std::vector<RateReport> run_uniform_rate_experiment(const ExperimentConfig& cfg,
                                                    const std::vector<WellSpecifiedPopulation>& members);

struct GradcheckRow {
  Index n;
  double lambda;
  double residual;              // normal-equation residual of the fit
  double residual_tolerance;    // 1e-8 (1 + ||y||)
  double max_derivative_at_fit; // max |<grad R(f_hat), v>|
  double derivative_tolerance;  // 1e-7 (1 + ||Y||)
  double max_rel_fd_mismatch;   // at a random non-optimal f
  int probes;
  bool passed() const;
};

std::vector<GradcheckRow> run_gradcheck(const ExperimentConfig& cfg);

/// || mean over resamples of n S_X^* S_X f  -  iota^* iota f ||_H.
double operator_average_error(const DiscretePopulation& pop, KernelPtr kernel, const KernelExpansion& f, Index n,
                              int resamples, std::uint64_t seed);

/// Random well-specified member: support ~ N(0, spread^2), Dirichlet(1) probs
/// floored at 0.05 / m, coefficients ~ N(0, coeff_scale^2).
WellSpecifiedPopulation random_well_specified(KernelPtr kernel, Index atoms, Index input_dim, NoiseLaw noise,
                                              Rng& rng, double spread = 1.5, double coeff_scale = 1.0);

}  // namespace opkrr
