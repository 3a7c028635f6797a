#include "opkrr/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace opkrr {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return {buf.data(), static_cast<std::size_t>(len)};
}

void write_tail_csv(const TailReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "n,lambda,threshold,exceed_freq,trials\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << format_number(r.lambda) << ',' << format_number(r.threshold) << ','
        << format_number(r.exceed_freq) << ',' << r.trials << '\n';
  }
  finish(out, path);
}

void write_rate_csv(const RateReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "n,lambda,median_excess,quantile_excess,bound,trials\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << format_number(r.lambda) << ',' << format_number(r.median) << ','
        << format_number(r.quantile) << ',' << format_number(r.bound) << ',' << r.trials << '\n';
  }
  finish(out, path);
}

void write_gradcheck_csv(const std::vector<GradcheckRow>& rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "n,lambda,residual,max_derivative_at_fit,max_rel_fd_mismatch,probes\n";
  for (const auto& r : rows) {
    out << r.n << ',' << format_number(r.lambda) << ',' << format_number(r.residual) << ','
        << format_number(r.max_derivative_at_fit) << ',' << format_number(r.max_rel_fd_mismatch) << ','
        << r.probes << '\n';
  }
  finish(out, path);
}

void write_rate_plot_svg(const std::vector<RateReport>& reports, const std::filesystem::path& path) {
  constexpr double kWidth = 640;
  constexpr double kHeight = 420;
  constexpr double kMargin = 60;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      if (r.median <= 0.0) continue;
      x_lo = std::min(x_lo, std::log10(static_cast<double>(r.n)));
      x_hi = std::max(x_hi, std::log10(static_cast<double>(r.n)));
      y_lo = std::min(y_lo, std::log10(r.median));
      y_hi = std::max(y_hi, std::log10(r.median));
    }
  }
  if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1, y_lo = -1, y_hi = 0;
  if (x_hi - x_lo < 1e-9) x_lo -= 0.5, x_hi += 0.5;
  if (y_hi - y_lo < 1e-9) y_lo -= 0.5, y_hi += 0.5;
  const auto px = [&](double lx) { return kMargin + (lx - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin); };
  const auto py = [&](double ly) { return kHeight - kMargin - (ly - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin); };

  static constexpr std::array<const char*, 6> kColours{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  auto out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">log10 n</text>\n"
      << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15 " << kHeight / 2
      << ")\" text-anchor=\"middle\">log10 median excess risk</text>\n";
  for (int tick = static_cast<int>(std::ceil(x_lo)); tick <= static_cast<int>(std::floor(x_hi)); ++tick) {
    out << "<text x=\"" << px(tick) << "\" y=\"" << kHeight - kMargin + 18 << "\" text-anchor=\"middle\">" << tick
        << "</text>\n";
  }
  for (int tick = static_cast<int>(std::ceil(y_lo)); tick <= static_cast<int>(std::floor(y_hi)); ++tick) {
    out << "<text x=\"" << kMargin - 8 << "\" y=\"" << py(tick) + 4 << "\" text-anchor=\"end\">" << tick << "</text>\n";
  }
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const char* colour = kColours[s % kColours.size()];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : reports[s].rows) {
      if (r.median <= 0.0) continue;
      out << px(std::log10(static_cast<double>(r.n))) << ',' << py(std::log10(r.median)) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin + 16 * static_cast<double>(s)
        << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << reports[s].label << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, path);
}

std::filesystem::path indexed_path(const std::filesystem::path& path, std::size_t index) {
  std::filesystem::path out = path;
  out.replace_filename(path.stem().string() + "." + std::to_string(index) + path.extension().string());
  return out;
}

CsvTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_commas(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != table.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double value = 0.0;
      const char* first = f.data();
      const char* last = f.data() + f.size();
      while (first < last && *first == ' ') ++first;
      auto [end, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || end != last) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + f + "'");
      }
      row.push_back(value);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace opkrr
