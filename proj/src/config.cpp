#include "opkrr/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace opkrr::config {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::map<std::string, Table, std::less<>> run() {
    std::map<std::string, Table, std::less<>> sections;
    std::string current;
    sections[current];
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        if (!at_end() && peek() == '[') fail("arrays of tables are not supported");
        skip_inline_space();
        std::string name;
        while (!at_end() && peek() != ']' && peek() != '\n') name += text_[pos_++];
        while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
        expect(']');
        if (name.empty()) fail("empty section name");
        if (sections.count(name) != 0U && !sections[name].empty()) fail("duplicate section [" + name + "]");
        current = name;
        sections[current];
        end_of_line();
        continue;
      }
      const std::string key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value value = parse_value();
      Table& table = sections[current];
      if (table.count(key) != 0U) fail("duplicate key '" + key + "'");
      table.emplace(key, std::move(value));
      end_of_line();
    }
    return sections;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("config line " + std::to_string(line_) + ": " + what);
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!at_end() && peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_inline_space();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    std::string key;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key += c;
        ++pos_;
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail("unterminated escape");
      const char e = text_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '\'') break;
      out += c;
    }
    return out;
  }

  // Whitespace, newlines and comments are all allowed between array items.
  void skip_array_space() {
    while (!at_end()) {
      skip_inline_space();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }

  Value parse_value() {
    if (at_end()) fail("missing value");
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.data = parse_basic_string();
    } else if (c == '\'') {
      v.data = parse_literal_string();
    } else if (c == '[') {
      ++pos_;
      const int opened = line_;
      Value::Array items;
      while (true) {
        skip_array_space();
        if (at_end()) fail("unterminated array opened on line " + std::to_string(opened));
        if (peek() == ']') {
          ++pos_;
          break;
        }
        items.push_back(parse_value());
        skip_array_space();
        if (!at_end() && peek() == ',') {
          ++pos_;
        } else if (!at_end() && peek() == ']') {
          ++pos_;
          break;
        } else if (at_end()) {
          fail("unterminated array opened on line " + std::to_string(opened));
        } else {
          fail("expected ',' or ']' in array");
        }
      }
      v.data = std::move(items);
    } else if (c == '{') {
      fail("inline tables are not supported");
    } else {
      std::string token;
      while (!at_end()) {
        const char t = peek();
        if (std::isalnum(static_cast<unsigned char>(t)) || t == '+' || t == '-' || t == '.' || t == '_') {
          token += t;
          ++pos_;
        } else {
          break;
        }
      }
      if (token.empty()) fail("unexpected character '" + std::string(1, c) + "'");
      v.data = parse_scalar(token);
    }
    return v;
  }

  std::variant<std::string, double, std::int64_t, bool, Value::Array> parse_scalar(std::string token) {
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char t : token) {
      if (t != '_') digits += t;
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits.find("inf") != std::string::npos ||
                          digits.find("nan") != std::string::npos;
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (*first == '+') ++first;
    if (is_float) {
      double value = 0.0;
      auto [end, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || end != last) fail("invalid number '" + token + "'");
      return value;
    }
    std::int64_t value = 0;
    auto [end, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || end != last) fail("invalid value '" + token + "'");
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

[[noreturn]] void type_error(const Value& v, const char* expected) {
  throw std::runtime_error("config line " + std::to_string(v.line) + ": expected " + expected);
}

}  // namespace

double Value::as_double() const {
  if (const auto* d = std::get_if<double>(&data)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
  type_error(*this, "a number");
}

std::int64_t Value::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return *i;
  type_error(*this, "an integer");
}

bool Value::as_bool() const {
  if (const auto* b = std::get_if<bool>(&data)) return *b;
  type_error(*this, "a boolean");
}

const std::string& Value::as_string() const {
  if (const auto* s = std::get_if<std::string>(&data)) return *s;
  type_error(*this, "a string");
}

const Value::Array& Value::as_array() const {
  if (const auto* a = std::get_if<Array>(&data)) return *a;
  type_error(*this, "an array");
}

std::vector<double> Value::as_doubles() const {
  std::vector<double> out;
  if (is_number()) {
    out.push_back(as_double());
    return out;
  }
  for (const auto& item : as_array()) out.push_back(item.as_double());
  return out;
}

Eigen::MatrixXd Value::as_matrix() const {
  const auto& rows = as_array();
  if (rows.empty()) type_error(*this, "a non-empty array of rows");
  const auto cols = rows.front().as_array().size();
  if (cols == 0) type_error(*this, "non-empty rows");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i].as_array();
    if (row.size() != cols) type_error(rows[i], "rows of equal length");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = row[j].as_double();
  }
  return m;
}

Document Document::parse(std::string_view text) {
  Document doc;
  doc.sections_ = Parser(text).run();
  return doc;
}

Document Document::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

const Table& Document::section(std::string_view name) const {
  auto it = sections_.find(name);
  if (it == sections_.end()) throw std::runtime_error("config: missing section [" + std::string(name) + "]");
  return it->second;
}

const Value* Document::find(std::string_view section, std::string_view key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

const Value& Document::require(std::string_view section, std::string_view key) const {
  const Value* v = find(section, key);
  if (v == nullptr) {
    throw std::runtime_error("config: missing key " + std::string(section) + "." + std::string(key));
  }
  return *v;
}

}  // namespace opkrr::config

namespace opkrr {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

config::Value parse_inline_value(std::string_view text) {
  const auto doc = config::Document::parse("v = " + std::string(text) + "\n");
  return doc.require("", "v");
}

double number_or(const config::Document& doc, std::string_view section, std::string_view key, double fallback) {
  const auto* v = doc.find(section, key);
  return v ? v->as_double() : fallback;
}

std::int64_t int_or(const config::Document& doc, std::string_view section, std::string_view key,
                    std::int64_t fallback) {
  const auto* v = doc.find(section, key);
  return v ? v->as_int() : fallback;
}

std::optional<Index> output_dim_hint(const config::Document& doc) {
  for (const char* key : {"coeffs", "target"}) {
    if (const auto* v = doc.find("population", key)) return v->as_matrix().cols();
  }
  if (const auto* v = doc.find("population", "output_dim")) return static_cast<Index>(v->as_int());
  return std::nullopt;
}

NoiseLaw noise_from_document(const config::Document& doc) {
  const auto* name = doc.find("population", "noise");
  if (name == nullptr) return NoiseLaw::none();
  return NoiseLaw::parse(name->as_string(), number_or(doc, "population", "noise_param", 0.0));
}

}  // namespace

Eigen::MatrixXd parse_output_operator(std::string_view spec, std::optional<Index> dim) {
  const std::string_view text = trim(spec);
  Eigen::MatrixXd op;
  if (text == "identity") {
    if (!dim || *dim < 1) throw std::invalid_argument("output operator 'identity' needs an output dimension");
    op = Eigen::MatrixXd::Identity(*dim, *dim);
  } else if (text.substr(0, 5) == "diag:") {
    const auto diag = parse_inline_value(text.substr(5)).as_doubles();
    if (diag.empty()) throw std::invalid_argument("output operator 'diag:' needs at least one entry");
    op = Eigen::Map<const Eigen::VectorXd>(diag.data(), static_cast<Index>(diag.size())).asDiagonal();
  } else if (!text.empty() && text.front() == '[') {
    op = parse_inline_value(text).as_matrix();
  } else {
    throw std::invalid_argument("output operator must be 'identity', 'diag: [..]' or a matrix, got '" +
                                std::string(text) + "'");
  }
  if (dim && op.rows() != *dim) {
    throw std::invalid_argument("output operator is " + std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                                " but the outputs have dimension " + std::to_string(*dim));
  }
  return op;
}

ScalarKernel parse_scalar_kernel(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("kernel spec must look like family:parameter, got '" + std::string(spec) + "'");
  }
  const auto family = parse_kernel_family(trim(spec.substr(0, colon)));
  const std::string_view param_text = trim(spec.substr(colon + 1));
  double parameter = 0.0;
  auto [end, ec] = std::from_chars(param_text.data(), param_text.data() + param_text.size(), parameter);
  if (ec != std::errc{} || end != param_text.data() + param_text.size()) {
    throw std::invalid_argument("kernel parameter is not a number: '" + std::string(param_text) + "'");
  }
  return {family, parameter};
}

KernelPtr kernel_from_document(const config::Document& doc, std::optional<Index> dim_hint) {
  const auto family = parse_kernel_family(doc.require("kernel", "family").as_string());
  const double parameter = doc.require("kernel", "parameter").as_double();
  std::optional<Index> dim = dim_hint;
  if (const auto* v = doc.find("kernel", "output_dim")) dim = static_cast<Index>(v->as_int());
  Eigen::MatrixXd op;
  const auto* t = doc.find("kernel", "T");
  if (t == nullptr) {
    op = parse_output_operator("identity", dim);
  } else if (t->is_string()) {
    op = parse_output_operator(t->as_string(), dim);
  } else {
    op = t->as_matrix();
  }
  return make_separable_kernel(ScalarKernel(family, parameter), std::move(op));
}

ExperimentConfig experiment_config_from_document(const config::Document& doc, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  for (const char* name : {"kernel", "population", "schedule"}) (void)doc.section(name);
  cfg.kernel = kernel_from_document(doc, output_dim_hint(doc));

  if (const auto* kind = doc.find("population", "kind")) cfg.population_kind = kind->as_string();
  if (cfg.population_kind == "discrete") {
    const NoiseLaw noise = noise_from_document(doc);
    if (const auto* generate = doc.find("population", "generate")) {
      const auto count = generate->as_int();
      if (count < 1) throw std::invalid_argument("population.generate must be >= 1");
      const auto atoms = static_cast<Index>(int_or(doc, "population", "support_size", 3));
      const auto input_dim = static_cast<Index>(int_or(doc, "population", "input_dim", 2));
      const double spread = number_or(doc, "population", "spread", 1.5);
      const double coeff_scale = number_or(doc, "population", "coeff_scale", 1.0);
      const auto pop_seed = static_cast<std::uint64_t>(int_or(doc, "population", "seed", 1));
      for (std::int64_t i = 0; i < count; ++i) {
        Rng rng = make_stream(pop_seed, static_cast<std::uint64_t>(i));
        auto member = random_well_specified(cfg.kernel, atoms, input_dim, noise, rng, spread, coeff_scale);
        cfg.populations.push_back({std::move(member.population), std::move(member.spec)});
      }
    } else {
      Points support = doc.require("population", "support").as_matrix().transpose();
      const auto probs_list = doc.require("population", "probs").as_doubles();
      Eigen::VectorXd probs =
          Eigen::Map<const Eigen::VectorXd>(probs_list.data(), static_cast<Index>(probs_list.size()));
      if (const auto* coeffs = doc.find("population", "coeffs")) {
        auto member = make_well_specified(std::move(support), std::move(probs), cfg.kernel,
                                          coeffs->as_matrix().transpose(), noise);
        cfg.populations.push_back({std::move(member.population), std::move(member.spec)});
      } else {
        DiscretePopulation pop(std::move(support), std::move(probs),
                               doc.require("population", "target").as_matrix().transpose(), noise);
        auto spec = certify_well_specified(pop, cfg.kernel);
        cfg.populations.push_back({std::move(pop), std::move(spec)});
      }
    }
  }

  const auto& sizes = doc.require("schedule", "n");
  if (sizes.is_array()) {
    for (const auto& v : sizes.as_array()) cfg.schedule.sizes.push_back(static_cast<Index>(v.as_int()));
  } else {
    cfg.schedule.sizes.push_back(static_cast<Index>(sizes.as_int()));
  }
  if (const auto* lambdas = doc.find("schedule", "lambda")) cfg.schedule.lambdas = lambdas->as_doubles();
  if (const auto* exponent = doc.find("schedule", "lambda_exponent")) {
    cfg.schedule.rule = LambdaRule{number_or(doc, "schedule", "lambda_c", 1.0), exponent->as_double()};
  }

  cfg.trials = static_cast<int>(int_or(doc, "run", "trials", cfg.trials));
  cfg.delta = number_or(doc, "run", "delta", cfg.delta);
  if (const auto* out = doc.find("run", "output")) cfg.output = out->as_string();
  if (const auto* plot = doc.find("run", "plot")) cfg.plot = plot->as_string();
  cfg.step = number_or(doc, "run", "step", cfg.step);
  cfg.probes = static_cast<int>(int_or(doc, "run", "probes", cfg.probes));
  if (const auto* m = doc.find("class", "M")) cfg.class_M = m->as_double();
  if (const auto* c = doc.find("class", "C")) cfg.class_C = c->as_double();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::uint64_t seed) {
  return experiment_config_from_document(config::Document::parse_file(path), seed);
}

std::vector<WellSpecifiedPopulation> well_specified_members(const ExperimentConfig& cfg) {
  std::vector<WellSpecifiedPopulation> out;
  for (std::size_t i = 0; i < cfg.populations.size(); ++i) {
    const auto& member = cfg.populations[i];
    if (!member.spec) {
      throw std::invalid_argument("population " + std::to_string(i) +
                                  " is not certified well-specified (target outside the span of the kernel basis)");
    }
    out.push_back({member.population, *member.spec});
  }
  return out;
}

}  // namespace opkrr
