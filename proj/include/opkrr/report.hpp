#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opkrr/experiments.hpp"

namespace opkrr {

/// Shortest decimal text with 17 significant digits; parses back to the same double.
std::string format_number(double value);

/// Header `n,lambda,threshold,exceed_freq,trials`, one row per schedule entry.
void write_tail_csv(const TailReport& report, const std::filesystem::path& path);
/// Header `n,lambda,median_excess,quantile_excess,bound,trials`.
void write_rate_csv(const RateReport& report, const std::filesystem::path& path);
/// Header `n,lambda,residual,max_derivative_at_fit,max_rel_fd_mismatch,probes`.
void write_gradcheck_csv(const std::vector<GradcheckRow>& rows, const std::filesystem::path& path);

/// Log-log line plot of median excess risk against n, one series per report.
void write_rate_plot_svg(const std::vector<RateReport>& reports, const std::filesystem::path& path);

/// `stem.csv` -> `stem.<index>.csv`, used when one run produces several tables.
std::filesystem::path indexed_path(const std::filesystem::path& path, std::size_t index);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with a header line. Throws std::runtime_error naming
/// the path on IO or parse failure.
CsvTable read_numeric_csv(const std::filesystem::path& path);

}  // namespace opkrr
