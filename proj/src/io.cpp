#include "opkrr/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opkrr/report.hpp"

namespace opkrr {
namespace {

constexpr const char* kModelMagic = "opkrr-model";
constexpr int kModelVersion = 1;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = strip(text);
  double value = 0.0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size()) {
    throw std::runtime_error(where + ": not a number: '" + text + "'");
  }
  return value;
}

// Returns the column count of each prefix ("x", "y") in header order.
std::pair<Index, Index> parse_header(const std::string& header_line, const std::string& where, bool want_outputs) {
  const auto names = split(header_line, ',');
  Index p = 0;
  Index d = 0;
  for (const auto& raw : names) {
    const std::string name = strip(raw);
    const char prefix = name.empty() ? '\0' : name.front();
    const std::string expected_x = "x" + std::to_string(p + 1);
    const std::string expected_y = "y" + std::to_string(d + 1);
    if (d == 0 && prefix == 'x' && name == expected_x) {
      ++p;
    } else if (want_outputs && p > 0 && prefix == 'y' && name == expected_y) {
      ++d;
    } else {
      throw std::runtime_error(where + ": unexpected header column '" + name + "' (expected " +
                               (want_outputs ? "x1..xp,y1..yd" : "x1..xp") + ")");
    }
  }
  if (p == 0 || (want_outputs && d == 0)) {
    throw std::runtime_error(where + ": header must name " + (want_outputs ? "x1..xp,y1..yd" : "x1..xp"));
  }
  return {p, d};
}

std::vector<std::vector<double>> read_rows(std::istream& in, std::size_t width, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split(line, ',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != width) {
      throw std::runtime_error(where + ": expected " + std::to_string(width) + " fields, found " +
                               std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    for (const auto& f : fields) row.push_back(parse_double(f, where));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::string read_header(std::istream& in, const std::string& path) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF &&
      static_cast<unsigned char>(header[1]) == 0xBB && static_cast<unsigned char>(header[2]) == 0xBF) {
    header.erase(0, 3);
  }
  return header;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  for (Index k = 0; k < v.size(); ++k) out << (k ? " " : "") << format_number(v(k));
  out << '\n';
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::istringstream next(const std::string& keyword) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!strip(line).empty()) break;
      line.clear();
    }
    if (line.empty()) fail("unexpected end of file, expected '" + keyword + "'");
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (!keyword.empty() && word != keyword) fail("expected '" + keyword + "', found '" + word + "'");
    return ss;
  }

  std::vector<double> numbers(std::istringstream& ss, std::size_t count) {
    std::vector<double> out;
    std::string token;
    while (ss >> token) out.push_back(parse_double(token, where()));
    if (out.size() != count) {
      fail("expected " + std::to_string(count) + " numbers, found " + std::to_string(out.size()));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw std::runtime_error(where() + ": " + what); }
  std::string where() const { return source_ + ":" + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace

TrainingSet read_training_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto [p, d] = parse_header(read_header(in, path.string()), path.string() + ":1", true);
  const auto rows = read_rows(in, static_cast<std::size_t>(p + d), path.string());
  if (rows.empty()) throw std::runtime_error(path.string() + ": no data rows");
  Points xs(p, static_cast<Index>(rows.size()));
  Eigen::MatrixXd ys(d, static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index k = 0; k < p; ++k) xs(k, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(k)];
    for (Index k = 0; k < d; ++k) ys(k, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(p + k)];
  }
  return {std::move(xs), std::move(ys)};
}

Points read_points_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto [p, d] = parse_header(read_header(in, path.string()), path.string() + ":1", false);
  (void)d;
  const auto rows = read_rows(in, static_cast<std::size_t>(p), path.string());
  Points xs(p, static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index k = 0; k < p; ++k) xs(k, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(k)];
  }
  return xs;
}

void write_predictions_csv(const Eigen::MatrixXd& predictions, std::ostream& out) {
  for (Index k = 0; k < predictions.rows(); ++k) out << (k ? "," : "") << 'y' << k + 1;
  out << '\n';
  for (Index i = 0; i < predictions.cols(); ++i) {
    for (Index k = 0; k < predictions.rows(); ++k) out << (k ? "," : "") << format_number(predictions(k, i));
    out << '\n';
  }
}

void save_model(const FittedModel& model, std::ostream& out) {
  const auto* kernel = dynamic_cast<const SeparableKernel*>(&model.kernel());
  if (kernel == nullptr) throw std::invalid_argument("save_model: only separable kernels can be saved");
  const Index d = kernel->output_dim();
  const Index p = model.anchors().rows();
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "family " << to_string(kernel->scalar().family()) << '\n';
  out << "parameter " << format_number(kernel->scalar().parameter()) << '\n';
  out << "output_dim " << d << '\n';
  for (Index r = 0; r < d; ++r) {
    out << "T ";
    write_row(out, kernel->output_operator().row(r).transpose());
  }
  out << "lambda " << format_number(model.lambda()) << '\n';
  out << "input_dim " << p << '\n';
  out << "samples " << model.sample_count() << '\n';
  for (Index i = 0; i < model.sample_count(); ++i) {
    out << "anchor ";
    write_row(out, model.anchors().col(i));
    out << "alpha ";
    write_row(out, model.alphas().col(i));
  }
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  save_model(model, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

FittedModel load_model(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  {
    auto header = reader.next(kModelMagic);
    int version = 0;
    if (!(header >> version) || version != kModelVersion) reader.fail("unsupported model version");
  }
  std::string family;
  reader.next("family") >> family;
  auto param_line = reader.next("parameter");
  const double parameter = reader.numbers(param_line, 1)[0];
  Index d = 0;
  if (!(reader.next("output_dim") >> d) || d < 1) reader.fail("invalid output_dim");
  Eigen::MatrixXd op(d, d);
  for (Index r = 0; r < d; ++r) {
    auto line = reader.next("T");
    const auto row = reader.numbers(line, static_cast<std::size_t>(d));
    for (Index c = 0; c < d; ++c) op(r, c) = row[static_cast<std::size_t>(c)];
  }
  auto lambda_line = reader.next("lambda");
  const double lambda = reader.numbers(lambda_line, 1)[0];
  Index p = 0;
  if (!(reader.next("input_dim") >> p) || p < 1) reader.fail("invalid input_dim");
  Index n = 0;
  if (!(reader.next("samples") >> n) || n < 1) reader.fail("invalid sample count");
  Points anchors(p, n);
  Eigen::MatrixXd alphas(d, n);
  for (Index i = 0; i < n; ++i) {
    auto a = reader.next("anchor");
    const auto anchor = reader.numbers(a, static_cast<std::size_t>(p));
    auto b = reader.next("alpha");
    const auto alpha = reader.numbers(b, static_cast<std::size_t>(d));
    for (Index k = 0; k < p; ++k) anchors(k, i) = anchor[static_cast<std::size_t>(k)];
    for (Index k = 0; k < d; ++k) alphas(k, i) = alpha[static_cast<std::size_t>(k)];
  }
  auto kernel = make_separable_kernel(ScalarKernel(parse_kernel_family(family), parameter), std::move(op));
  return {KernelExpansion(std::move(kernel), std::move(anchors), std::move(alphas)), lambda, n};
}

FittedModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_model(in, path.string());
}

}  // namespace opkrr
