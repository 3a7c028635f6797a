#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "opkrr/experiments.hpp"

namespace opkrr::config {

/// A TOML value restricted to what experiment configs use: strings, numbers,
/// booleans and (nested) arrays. Inline tables, dates and multi-line strings
/// are rejected.
struct Value {
  using Array = std::vector<Value>;
  std::variant<std::string, double, std::int64_t, bool, Array> data;
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
  bool is_number() const {
    return std::holds_alternative<double>(data) || std::holds_alternative<std::int64_t>(data);
  }

  double as_double() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const Array& as_array() const;
  std::vector<double> as_doubles() const;
  /// Array of equal-length numeric arrays as a rows x cols matrix.
  Eigen::MatrixXd as_matrix() const;
};

using Table = std::map<std::string, Value, std::less<>>;

class Document {
 public:
  /// Throws std::runtime_error with a line number on malformed input.
  static Document parse(std::string_view text);
  static Document parse_file(const std::filesystem::path& path);

  bool has_section(std::string_view name) const { return sections_.find(name) != sections_.end(); }
  /// Throws std::runtime_error if the section is missing.
  const Table& section(std::string_view name) const;
  const Value* find(std::string_view section, std::string_view key) const;
  /// Throws std::runtime_error naming section.key if the key is missing.
  const Value& require(std::string_view section, std::string_view key) const;

 private:
  std::map<std::string, Table, std::less<>> sections_;
};

}  // namespace opkrr::config

namespace opkrr {

/// Parses an output operator: "identity" (needs dim), "diag: [a, b, ...]", or
/// a full row-major matrix given as text "[[..], [..]]".
Eigen::MatrixXd parse_output_operator(std::string_view spec, std::optional<Index> dim);

/// Parses "family:parameter", e.g. "gaussian:1.0" or "laplacian:0.5".
ScalarKernel parse_scalar_kernel(std::string_view spec);

/// Builds the kernel from a [kernel] section: family, parameter, T (string or
/// matrix). Identity T takes its dimension from `output_dim`, or from dim_hint.
KernelPtr kernel_from_document(const config::Document& doc, std::optional<Index> dim_hint);

/// Builds the full experiment configuration. Recognised layout:
///
///   [kernel]      family, parameter, T, output_dim
///   [population]  kind; support, probs, coeffs | target; noise, noise_param;
///                 or generate, support_size, input_dim, spread, coeff_scale, seed
///   [schedule]    n; lambda | lambda_c, lambda_exponent
///   [run]         trials, delta, output, plot, step, probes
///   [class]       M, C            (optional, uniform-rate only)
///
/// The seed always comes from the caller (the --seed flag).
ExperimentConfig experiment_config_from_document(const config::Document& doc, std::uint64_t seed);
ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::uint64_t seed);

/// The populations of cfg as certified well-specified members. Throws if a
/// member has no certificate.
std::vector<WellSpecifiedPopulation> well_specified_members(const ExperimentConfig& cfg);

}  // namespace opkrr
