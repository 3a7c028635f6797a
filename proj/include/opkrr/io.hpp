#pragma once

#include <filesystem>
#include <iosfwd>

#include "opkrr/estimator.hpp"

namespace opkrr {

/// Reads a CSV with header `x1..xp,y1..yd`, one sample per row, '.' decimals.
/// Throws std::runtime_error naming the path and line on malformed input.
TrainingSet read_training_csv(const std::filesystem::path& path);

/// Reads a CSV with header `x1..xp`. Returns a p x n matrix.
Points read_points_csv(const std::filesystem::path& path);

/// Writes `y1..yd` rows, 17 significant digits.
void write_predictions_csv(const Eigen::MatrixXd& predictions, std::ostream& out);

/// Text model file: kernel spec, T, lambda, anchors and coefficients with 17
/// significant digits, so load_model(save_model(m)) reproduces m exactly.
/// Only separable kernels can be saved.
void save_model(const FittedModel& model, const std::filesystem::path& path);
void save_model(const FittedModel& model, std::ostream& out);
FittedModel load_model(const std::filesystem::path& path);
FittedModel load_model(std::istream& in, const std::string& source = "<stream>");

}  // namespace opkrr
