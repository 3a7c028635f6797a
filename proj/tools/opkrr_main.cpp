// Command-line front end: fit / predict on CSV data, and the seeded experiment
// runners driven by a TOML config.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "opkrr/config.hpp"
#include "opkrr/estimator.hpp"
#include "opkrr/experiments.hpp"
#include "opkrr/io.hpp"
#include "opkrr/parallel.hpp"
#include "opkrr/report.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct ExperimentArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string plot;
  bool check = false;
};

opkrr::ExperimentConfig load(const ExperimentArgs& args) {
  auto cfg = opkrr::load_experiment_config(args.config, args.seed);
  if (!args.out.empty()) cfg.output = args.out;
  if (!args.plot.empty()) cfg.plot = args.plot;
  if (cfg.output.empty()) throw std::runtime_error("no output path: set run.output or pass --out");
  return cfg;
}

int finish(bool passed, const ExperimentArgs& args, const std::string& what) {
  if (passed) {
    std::cerr << what << ": ok\n";
    return 0;
  }
  std::cerr << what << ": FAILED\n";
  return args.check ? kExitCheckFailed : 0;
}

int run_tail(const ExperimentArgs& args) {
  const auto cfg = load(args);
  const auto report = opkrr::run_tail_experiment(cfg);
  opkrr::write_tail_csv(report, cfg.output);
  if (cfg.plot) std::cerr << "warning: tail experiments have no plot; ignoring " << *cfg.plot << '\n';
  const double slack = opkrr::binomial_slack(report.delta, cfg.trials);
  for (const auto& row : report.rows) {
    std::cerr << "n=" << row.n << " lambda=" << row.lambda << " threshold=" << row.threshold
              << " exceed_freq=" << row.exceed_freq << " (limit " << report.delta + slack << ")\n";
  }
  return finish(report.within_bound(), args, "tail bound");
}

int run_consistency(const ExperimentArgs& args) {
  const auto cfg = load(args);
  const auto report = opkrr::run_consistency_experiment(cfg);
  opkrr::write_rate_csv(report, cfg.output);
  if (cfg.plot) opkrr::write_rate_plot_svg({report}, *cfg.plot);
  for (const auto& row : report.rows) {
    std::cerr << "n=" << row.n << " lambda=" << row.lambda << " median=" << row.median << " (se "
              << row.median_se << ")\n";
  }
  const auto trend = opkrr::check_consistency_trend(report);
  if (trend.skipped) {
    std::cerr << "warning: " << trend.message << '\n';
    return 0;
  }
  if (!trend.message.empty()) std::cerr << trend.message << '\n';
  return finish(trend.passed, args, "consistency trend");
}

int run_uniform_rate(const ExperimentArgs& args) {
  const auto cfg = load(args);
  const auto members = opkrr::well_specified_members(cfg);
  const auto reports = opkrr::run_uniform_rate_experiment(cfg, members);
  bool passed = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto path = reports.size() == 1 ? std::filesystem::path(cfg.output) : opkrr::indexed_path(cfg.output, i);
    opkrr::write_rate_csv(reports[i], path);
    for (const auto& row : reports[i].rows) {
      std::cerr << reports[i].label << " n=" << row.n << " lambda=" << row.lambda << " quantile=" << row.quantile
                << " bound=" << row.bound << " exceed_freq=" << row.exceed_freq << '\n';
    }
    passed = passed && reports[i].within_bound();
  }
  if (cfg.plot) opkrr::write_rate_plot_svg(reports, *cfg.plot);
  return finish(passed, args, "uniform rate");
}

int run_gradcheck(const ExperimentArgs& args) {
  const auto cfg = load(args);
  const auto rows = opkrr::run_gradcheck(cfg);
  opkrr::write_gradcheck_csv(rows, cfg.output);
  bool passed = true;
  for (const auto& row : rows) {
    std::cerr << "n=" << row.n << " lambda=" << row.lambda << " residual=" << row.residual
              << " derivative_at_fit=" << row.max_derivative_at_fit << " rel_fd_mismatch=" << row.max_rel_fd_mismatch
              << (row.passed() ? "" : "  FAILED") << '\n';
    passed = passed && row.passed();
  }
  return finish(passed, args, "gradcheck");
}

void add_experiment(CLI::App& app, const std::string& name, const std::string& help, ExperimentArgs& args,
                    int (*run)(const ExperimentArgs&), int& exit_code) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("config", args.config, "TOML experiment config")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "Seed for every trial stream")->required();
  sub->add_option("--out", args.out, "CSV output path (overrides run.output)");
  sub->add_option("--plot", args.plot, "SVG plot path (overrides run.plot)");
  sub->add_flag("--check", args.check, "Exit with status 2 if the validity check fails");
  sub->callback([&args, run, &exit_code] { exit_code = run(args); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-valued kernel ridge regression"};
  app.require_subcommand(1);
  int exit_code = 0;

  std::string data_path;
  std::string kernel_spec;
  std::string operator_spec = "identity";
  double lambda = 0.0;
  std::string model_out;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to x1..xp,y1..yd CSV data");
  fit_cmd->add_option("data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--kernel", kernel_spec, "Scalar kernel, family:parameter")->required();
  fit_cmd->add_option("--operator", operator_spec, "Output operator T: identity, diag: [..], or [[..], ..]");
  fit_cmd->add_option("--lambda", lambda, "Regularisation parameter")->required();
  fit_cmd->add_option("--out", model_out, "Model file")->required();
  fit_cmd->callback([&] {
    const auto data = opkrr::read_training_csv(data_path);
    auto kernel = opkrr::make_separable_kernel(opkrr::parse_scalar_kernel(kernel_spec),
                                               opkrr::parse_output_operator(operator_spec, data.output_dim()));
    const auto model = opkrr::fit(data, std::move(kernel), lambda);
    opkrr::save_model(model, model_out);
    std::cerr << "fitted n=" << data.size() << " residual=" << opkrr::normal_equation_residual(model, data) << '\n';
  });

  std::string model_path;
  std::string points_path;
  std::string predictions_out;
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a model at x1..xp CSV points");
  predict_cmd->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("points", points_path, "Points CSV")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", predictions_out, "Output CSV (default stdout)");
  predict_cmd->callback([&] {
    const auto model = opkrr::load_model(model_path);
    const auto points = opkrr::read_points_csv(points_path);
    if (points.rows() != model.anchors().rows()) {
      throw std::runtime_error(points_path + ": points have dimension " + std::to_string(points.rows()) +
                               ", model expects " + std::to_string(model.anchors().rows()));
    }
    const auto predictions = model.expansion().evaluate(points);
    if (predictions_out.empty()) {
      opkrr::write_predictions_csv(predictions, std::cout);
    } else {
      std::ofstream out(predictions_out, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open '" + predictions_out + "' for writing");
      opkrr::write_predictions_csv(predictions, out);
    }
  });

  ExperimentArgs tail_args, consistency_args, rate_args, grad_args;
  add_experiment(app, "tail", "Tail-bound frequency experiment", tail_args, run_tail, exit_code);
  add_experiment(app, "consistency", "Excess-risk trend under a decaying lambda", consistency_args,
                 run_consistency, exit_code);
  add_experiment(app, "uniform-rate", "Uniform rate over certified well-specified members", rate_args,
                 run_uniform_rate, exit_code);
  add_experiment(app, "gradcheck", "Normal-equation and derivative checks", grad_args, run_gradcheck, exit_code);

  try {
    opkrr::configure_threads_from_env();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return exit_code;
}
