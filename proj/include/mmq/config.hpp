#pragma once

// Experiment configuration: a JSON document with model, regime and run blocks.
// Every error carries the line and column of the offending value.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmq/cost.hpp"
#include "mmq/env_chain.hpp"
#include "mmq/errors.hpp"
#include "mmq/model.hpp"
#include "mmq/policies.hpp"
#include "mmq/simulator.hpp"

namespace mmq {

using Json = nlohmann::json;

// Malformed document or semantically invalid field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + what : what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Valid document describing an invalid model (e.g. a reducible generator).
class ConfigInvariantError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

namespace detail {

inline std::string escape_pointer(const std::string& key) {
  std::string out;
  for (const char ch : key) {
    if (ch == '~') {
      out += "~0";
    } else if (ch == '/') {
      out += "~1";
    } else {
      out += ch;
    }
  }
  return out;
}

// Input iterator that reports how far the parser has read.
class CountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator() = default;
  CountingIterator(const char* base, const char* p, std::size_t* consumed) : base_(base), p_(p), consumed_(consumed) {}

  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    ++p_;
    if (consumed_) *consumed_ = static_cast<std::size_t>(p_ - base_);
    return *this;
  }
  CountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const CountingIterator& other) const { return p_ == other.p_; }
  bool operator!=(const CountingIterator& other) const { return p_ != other.p_; }

 private:
  const char* base_ = nullptr;
  const char* p_ = nullptr;
  std::size_t* consumed_ = nullptr;
};

// Records, for every JSON pointer, the offset of the last character of its token
// (or of the opening bracket for containers).
class PositionRecorder : public nlohmann::json_sax<Json> {
 public:
  PositionRecorder(const std::string& text, const std::size_t* consumed) : text_(text), consumed_(consumed) {}

  std::map<std::string, std::size_t> positions;

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    value();
    frames_.push_back({true, 0, ""});
    return true;
  }
  bool key(string_t& k) override {
    frames_.back().key = k;
    return true;
  }
  bool end_object() override {
    frames_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    value();
    frames_.push_back({false, 0, ""});
    return true;
  }
  bool end_array() override {
    frames_.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

 private:
  struct Frame {
    bool object;
    std::size_t index;
    std::string key;
  };

  bool value() {
    std::string pointer;
    for (const auto& f : frames_) {
      pointer += "/";
      pointer += f.object ? detail::escape_pointer(f.key) : std::to_string(f.index);
    }
    std::size_t offset = *consumed_ ? *consumed_ - 1 : 0;
    while (offset > 0 && offset < text_.size() && std::isspace(static_cast<unsigned char>(text_[offset]))) --offset;
    positions[pointer] = offset;
    if (!frames_.empty() && !frames_.back().object) ++frames_.back().index;
    return true;
  }

  const std::string& text_;
  const std::size_t* consumed_;
  std::vector<Frame> frames_;
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace detail

// Parsed document plus a pointer-to-location index for error reporting.
class LocatedJson {
 public:
  static LocatedJson parse(const std::string& text) {
    LocatedJson out;
    out.text_ = text;
    try {
      out.root_ = Json::parse(text);
    } catch (const Json::parse_error& e) {
      const auto [line, column] = detail::line_column(text, e.byte ? e.byte - 1 : 0);
      std::string what = e.what();
      const auto colon = what.find("syntax error");
      throw ConfigError(colon == std::string::npos ? what : what.substr(colon), line, column);
    }
    std::size_t consumed = 0;
    detail::PositionRecorder recorder(out.text_, &consumed);
    const char* base = out.text_.data();
    Json::sax_parse(detail::CountingIterator(base, base, &consumed),
                    detail::CountingIterator(base, base + out.text_.size(), nullptr), &recorder);
    out.positions_ = std::move(recorder.positions);
    return out;
  }

  const Json& root() const { return root_; }

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
    const auto [line, column] = locate(pointer);
    throw ConfigError(what + " (at " + (pointer.empty() ? "/" : pointer) + ")", line, column);
  }

  [[noreturn]] void fail_invariant(const std::string& pointer, const std::string& what) const {
    const auto [line, column] = locate(pointer);
    throw ConfigInvariantError(what + " (at " + (pointer.empty() ? "/" : pointer) + ")", line, column);
  }

 private:
  // Location of the pointer, or of its nearest recorded ancestor.
  std::pair<std::size_t, std::size_t> locate(std::string p) const {
    while (true) {
      const auto it = positions_.find(p);
      if (it != positions_.end()) return detail::line_column(text_, it->second);
      if (p.empty()) return {0, 0};
      p = p.substr(0, p.rfind('/'));
    }
  }

  std::string text_;
  Json root_;
  std::map<std::string, std::size_t> positions_;
};

struct RateSpec {
  bool affine = true;
  Matrix base;
  Matrix slope;
  std::map<std::uint64_t, Matrix> table;

  RateFamily family() const { return affine ? RateFamily::affine(base, slope) : RateFamily::tabulated(table); }
};

struct RegimeSpec {
  double nu = 1.0;
  double alpha = 0.5;
  bool alpha_auto = false;

  ScalingRegime regime() const { return {nu, alpha}; }
};

struct PolicySpec {
  std::string name;                // cmu_star | dynamic_cmu | static
  std::vector<std::size_t> order;  // 0-based, static only
};

struct RunSpec {
  std::vector<std::uint64_t> n{25, 100};
  std::vector<PolicySpec> policies{{"cmu_star", {}}, {"dynamic_cmu", {}}};
  std::size_t replications = 2000;
  double horizon = 6.0;
  double dt = 1e-3;
  double dt_refine = 1e-4;
  std::size_t bcp_replications = 10000;
  double bcp_horizon = 5.0;
  std::uint64_t seed = 1;
  double grid = 0.1;
  EngineMode engine = EngineMode::Auto;
  CostMode cost_mode = CostMode::Exact;
  std::optional<std::size_t> initial_state;  // 0-based
  std::vector<std::uint64_t> probe_n{10000, 1000000, 100000000};
  std::size_t trace_replications = 1;
  std::size_t threads = 1;
  std::string output = "results";
};

struct ExperimentConfig {
  std::size_t classes = 0;
  std::size_t states = 0;
  Matrix generator;
  RateSpec arrival;
  RateSpec service;
  Vector holding_costs;
  double discount = 1.0;
  std::vector<RegimeSpec> regimes;
  RunSpec run;

  NetworkModel model(const RegimeSpec& regime) const {
    return NetworkModel(GeneratorFamily(GeneratorMatrix(generator)), arrival.family(), service.family(), holding_costs,
                        discount, regime.regime());
  }

  std::vector<Policy> policies(const NetworkModel& model, std::uint64_t n) const {
    std::vector<Policy> out;
    for (const auto& p : run.policies) {
      if (p.name == "cmu_star") {
        out.push_back(cmu_star_policy(model));
      } else if (p.name == "dynamic_cmu") {
        out.push_back(dynamic_cmu_policy(model, n));
      } else {
        out.push_back(static_priority_policy(p.order));
      }
    }
    return out;
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const LocatedJson& doc) : doc_(doc) {}

  const Json& at(const Json& parent, const std::string& pointer, const std::string& key) const {
    if (!parent.is_object()) doc_.fail(pointer, "expected an object");
    const auto it = parent.find(key);
    if (it == parent.end()) doc_.fail(pointer, "missing field '" + key + "'");
    return *it;
  }

  const Json* find(const Json& parent, const std::string& key) const {
    const auto it = parent.find(key);
    return it == parent.end() || it->is_null() ? nullptr : &*it;
  }

  // Numbers, or strings holding a fraction such as "-1/3".
  double number(const Json& v, const std::string& pointer) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      const auto slash = s.find('/');
      try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
          const double x = std::stod(s, &used);
          if (used == s.size()) return x;
        } else {
          const double num = std::stod(s.substr(0, slash), &used);
          if (used == slash) {
            const auto den_text = s.substr(slash + 1);
            const double den = std::stod(den_text, &used);
            if (used == den_text.size() && den != 0.0) return num / den;
          }
        }
      } catch (const std::exception&) {
      }
      doc_.fail(pointer, "cannot read '" + s + "' as a number");
    }
    doc_.fail(pointer, "expected a number");
  }

  double positive(const Json& v, const std::string& pointer) const {
    const double x = number(v, pointer);
    if (!(x > 0.0) || !std::isfinite(x)) doc_.fail(pointer, "expected a positive number");
    return x;
  }

  std::uint64_t count(const Json& v, const std::string& pointer, std::uint64_t minimum = 1) const {
    double x = 0.0;
    if (v.is_number_unsigned()) return check_min(v.get<std::uint64_t>(), pointer, minimum);
    x = number(v, pointer);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1.8e19) doc_.fail(pointer, "expected a nonnegative integer");
    return check_min(static_cast<std::uint64_t>(x), pointer, minimum);
  }

  std::string text(const Json& v, const std::string& pointer) const {
    if (!v.is_string()) doc_.fail(pointer, "expected a string");
    return v.get<std::string>();
  }

  Vector vector(const Json& v, const std::string& pointer, std::size_t size) const {
    if (!v.is_array()) doc_.fail(pointer, "expected an array");
    if (v.size() != size) {
      doc_.fail(pointer, "expected " + std::to_string(size) + " entries, found " + std::to_string(v.size()));
    }
    Vector out(static_cast<Eigen::Index>(size));
    for (std::size_t k = 0; k < size; ++k) {
      out(static_cast<Eigen::Index>(k)) = number(v[k], pointer + "/" + std::to_string(k));
    }
    return out;
  }

  Matrix matrix(const Json& v, const std::string& pointer, std::size_t rows, std::size_t cols) const {
    if (!v.is_array()) doc_.fail(pointer, "expected an array of rows");
    if (v.size() != rows) {
      doc_.fail(pointer, "expected " + std::to_string(rows) + " rows, found " + std::to_string(v.size()));
    }
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      out.row(static_cast<Eigen::Index>(r)) = vector(v[r], pointer + "/" + std::to_string(r), cols).transpose();
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const { doc_.fail(pointer, what); }
  [[noreturn]] void fail_invariant(const std::string& pointer, const std::string& what) const {
    doc_.fail_invariant(pointer, what);
  }

 private:
  std::uint64_t check_min(std::uint64_t x, const std::string& pointer, std::uint64_t minimum) const {
    if (x < minimum) doc_.fail(pointer, "must be at least " + std::to_string(minimum));
    return x;
  }

  const LocatedJson& doc_;
};

inline RateSpec read_rates(const ConfigReader& r, const Json& v, const std::string& pointer, std::size_t states,
                           std::size_t classes) {
  RateSpec spec;
  if (!v.is_object()) r.fail(pointer, "expected {\"base\", \"slope\"} or {\"table\"}");
  if (const auto* table = r.find(v, "table")) {
    spec.affine = false;
    if (!table->is_object() || table->empty()) r.fail(pointer + "/table", "expected an object keyed by n");
    for (const auto& [key, rows] : table->items()) {
      const std::string p = pointer + "/table/" + detail::escape_pointer(key);
      std::uint64_t n = 0;
      try {
        std::size_t used = 0;
        const auto parsed = std::stoull(key, &used);
        if (used != key.size() || parsed == 0) throw std::invalid_argument(key);
        n = parsed;
      } catch (const std::exception&) {
        r.fail(p, "table keys must be positive integers (values of n)");
      }
      spec.table[n] = r.matrix(rows, p, states, classes);
    }
  } else {
    spec.base = r.matrix(r.at(v, pointer, "base"), pointer + "/base", states, classes);
    if (const auto* slope = r.find(v, "slope")) {
      spec.slope = r.matrix(*slope, pointer + "/slope", states, classes);
    } else {
      spec.slope = Matrix::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(classes));
    }
  }
  return spec;
}

inline Json rates_to_json(const RateSpec& spec) {
  auto rows = [](const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      out.push_back(row);
    }
    return out;
  };
  if (spec.affine) return Json{{"base", rows(spec.base)}, {"slope", rows(spec.slope)}};
  Json table = Json::object();
  for (const auto& [n, m] : spec.table) table[std::to_string(n)] = rows(m);
  return Json{{"table", table}};
}

inline PolicySpec read_policy(const ConfigReader& r, const Json& v, const std::string& pointer, std::size_t classes) {
  PolicySpec p;
  if (v.is_string()) {
    p.name = v.get<std::string>();
  } else {
    p.name = r.text(r.at(v, pointer, "name"), pointer + "/name");
  }
  if (p.name == "cmu_star" || p.name == "dynamic_cmu") return p;
  if (p.name != "static") r.fail(pointer, "unknown policy '" + p.name + "' (expected cmu_star, dynamic_cmu or static)");
  if (!v.is_object()) r.fail(pointer, "static policies need an \"order\"");
  const auto& order = r.at(v, pointer, "order");
  const auto values = r.vector(order, pointer + "/order", classes);
  std::vector<bool> seen(classes, false);
  for (std::size_t k = 0; k < classes; ++k) {
    const double x = values(static_cast<Eigen::Index>(k));
    if (x != std::floor(x) || x < 1 || x > static_cast<double>(classes) || seen[static_cast<std::size_t>(x) - 1]) {
      r.fail(pointer + "/order", "order must be a permutation of 1.." + std::to_string(classes));
    }
    seen[static_cast<std::size_t>(x) - 1] = true;
    p.order.push_back(static_cast<std::size_t>(x) - 1);
  }
  return p;
}

inline std::vector<std::uint64_t> read_sizes(const ConfigReader& r, const Json& v, const std::string& pointer) {
  std::vector<std::uint64_t> out;
  if (!v.is_array()) return {r.count(v, pointer)};
  if (v.empty()) r.fail(pointer, "expected at least one value");
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(r.count(v[k], pointer + "/" + std::to_string(k)));
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const LocatedJson& doc) {
  const detail::ConfigReader r(doc);
  const Json& root = doc.root();
  if (!root.is_object()) r.fail("", "the configuration must be a JSON object");
  ExperimentConfig cfg;

  const auto& model = r.at(root, "", "model");
  cfg.classes = r.count(r.at(model, "/model", "classes"), "/model/classes");
  cfg.states = r.count(r.at(model, "/model", "states"), "/model/states");
  cfg.generator = r.matrix(r.at(model, "/model", "generator"), "/model/generator", cfg.states, cfg.states);
  // Row-level validation so errors point at the offending row.
  for (std::size_t y = 0; y < cfg.states; ++y) {
    const auto row = cfg.generator.row(static_cast<Eigen::Index>(y));
    const std::string p = "/model/generator/" + std::to_string(y);
    double sum = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < cfg.states; ++j) {
      const double q = row(static_cast<Eigen::Index>(j));
      if (!std::isfinite(q)) r.fail(p, "generator entries must be finite");
      if (j == y && q > 0.0) r.fail(p, "generator diagonal entry is positive in row " + std::to_string(y + 1));
      if (j != y && q < 0.0) r.fail(p, "generator off-diagonal entry is negative in row " + std::to_string(y + 1));
      sum += q;
      scale = std::max(scale, std::abs(q));
    }
    if (std::abs(sum) > 1e-12 * scale) r.fail(p, "generator row " + std::to_string(y + 1) + " does not sum to 0");
  }
  try {
    GeneratorMatrix check(cfg.generator);
  } catch (const ReducibleGenerator& e) {
    r.fail_invariant("/model/generator", e.what());
  } catch (const ModelError& e) {
    r.fail("/model/generator", e.what());
  }
  cfg.arrival = detail::read_rates(r, r.at(model, "/model", "arrival"), "/model/arrival", cfg.states, cfg.classes);
  cfg.service = detail::read_rates(r, r.at(model, "/model", "service"), "/model/service", cfg.states, cfg.classes);
  cfg.holding_costs = r.vector(r.at(model, "/model", "holding_costs"), "/model/holding_costs", cfg.classes);
  for (std::size_t i = 0; i < cfg.classes; ++i) {
    if (!(cfg.holding_costs(static_cast<Eigen::Index>(i)) > 0.0)) {
      r.fail("/model/holding_costs/" + std::to_string(i), "holding costs must be positive");
    }
  }
  cfg.discount = r.positive(r.at(model, "/model", "discount"), "/model/discount");

  const auto& regimes = r.at(root, "", "regime");
  auto read_regime = [&](const Json& v, const std::string& p) {
    RegimeSpec spec;
    spec.nu = r.number(r.at(v, p, "nu"), p + "/nu");
    if (!(spec.nu > -1.0) || !std::isfinite(spec.nu)) r.fail(p + "/nu", "nu must exceed -1");
    const auto& alpha = r.at(v, p, "alpha");
    if (alpha.is_string() && alpha.get<std::string>() == "auto") {
      spec.alpha_auto = true;
      spec.alpha = auto_alpha(spec.nu);
    } else {
      spec.alpha = r.number(alpha, p + "/alpha");
      if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) r.fail(p + "/alpha", "alpha must lie in (0, 1)");
    }
    return spec;
  };
  if (regimes.is_array()) {
    if (regimes.empty()) r.fail("/regime", "expected at least one regime");
    for (std::size_t k = 0; k < regimes.size(); ++k) {
      cfg.regimes.push_back(read_regime(regimes[k], "/regime/" + std::to_string(k)));
    }
  } else {
    cfg.regimes.push_back(read_regime(regimes, "/regime"));
  }

  // Model-level checks that need every block.
  for (std::size_t k = 0; k < cfg.regimes.size(); ++k) {
    try {
      (void)cfg.model(cfg.regimes[k]);
    } catch (const ModelError& e) {
      r.fail("/model", e.what());
    }
  }

  if (const auto* run = r.find(root, "run")) {
    auto& s = cfg.run;
    const std::string p = "/run";
    if (const auto* v = r.find(*run, "n")) s.n = detail::read_sizes(r, *v, p + "/n");
    if (const auto* v = r.find(*run, "policies")) {
      if (!v->is_array() || v->empty()) r.fail(p + "/policies", "expected a nonempty array of policies");
      s.policies.clear();
      for (std::size_t k = 0; k < v->size(); ++k) {
        s.policies.push_back(detail::read_policy(r, (*v)[k], p + "/policies/" + std::to_string(k), cfg.classes));
      }
    } else {
      s.policies = {{"cmu_star", {}}, {"dynamic_cmu", {}}};
    }
    if (const auto* v = r.find(*run, "replications")) s.replications = r.count(*v, p + "/replications", 2);
    if (const auto* v = r.find(*run, "horizon")) s.horizon = r.positive(*v, p + "/horizon");
    if (const auto* v = r.find(*run, "dt")) s.dt = r.positive(*v, p + "/dt");
    if (const auto* v = r.find(*run, "dt_refine")) s.dt_refine = r.positive(*v, p + "/dt_refine");
    if (const auto* v = r.find(*run, "bcp_replications")) s.bcp_replications = r.count(*v, p + "/bcp_replications", 2);
    if (const auto* v = r.find(*run, "bcp_horizon")) s.bcp_horizon = r.positive(*v, p + "/bcp_horizon");
    if (const auto* v = r.find(*run, "seed")) s.seed = r.count(*v, p + "/seed", 0);
    if (const auto* v = r.find(*run, "grid")) s.grid = r.positive(*v, p + "/grid");
    if (const auto* v = r.find(*run, "engine")) {
      try {
        s.engine = parse_engine_mode(r.text(*v, p + "/engine"));
      } catch (const std::invalid_argument& e) {
        r.fail(p + "/engine", e.what());
      }
    }
    if (const auto* v = r.find(*run, "cost_mode")) {
      try {
        s.cost_mode = parse_cost_mode(r.text(*v, p + "/cost_mode"));
      } catch (const std::invalid_argument& e) {
        r.fail(p + "/cost_mode", e.what());
      }
    }
    if (const auto* v = r.find(*run, "initial_state")) {
      const auto y = r.count(*v, p + "/initial_state");
      if (y > cfg.states) r.fail(p + "/initial_state", "initial state must lie in 1.." + std::to_string(cfg.states));
      s.initial_state = static_cast<std::size_t>(y - 1);
    }
    if (const auto* v = r.find(*run, "probe_n")) s.probe_n = detail::read_sizes(r, *v, p + "/probe_n");
    if (const auto* v = r.find(*run, "trace_replications")) {
      s.trace_replications = r.count(*v, p + "/trace_replications");
    }
    if (const auto* v = r.find(*run, "threads")) s.threads = r.count(*v, p + "/threads", 0);
    if (const auto* v = r.find(*run, "output")) s.output = r.text(*v, p + "/output");
  }
  // Tabulated rates only exist at the listed n, so every simulated n needs a row.
  const std::string where = r.find(root, "run") ? "/run/n" : "/model";
  for (const auto n : cfg.run.n) {
    for (const auto* rates : {&cfg.arrival, &cfg.service}) {
      if (!rates->affine && !rates->table.count(n)) {
        r.fail(where, std::string(rates == &cfg.arrival ? "arrival" : "service") + " table has no entry for n = " +
                          std::to_string(n));
      }
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) { return parse_config(LocatedJson::parse(text)); }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const ConfigInvariantError& e) {
    throw ConfigInvariantError(path + ": " + e.what(), e.line(), e.column());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), e.line(), e.column());
  }
}

// Fully resolved echo ("auto" alpha replaced by its value); parses back to the same
// experiment. The thread count is left out since it never changes results.
inline Json to_json(const ExperimentConfig& cfg) {
  Json model;
  model["classes"] = cfg.classes;
  model["states"] = cfg.states;
  Json gen = Json::array();
  for (Eigen::Index r = 0; r < cfg.generator.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < cfg.generator.cols(); ++c) row.push_back(cfg.generator(r, c));
    gen.push_back(row);
  }
  model["generator"] = gen;
  model["arrival"] = detail::rates_to_json(cfg.arrival);
  model["service"] = detail::rates_to_json(cfg.service);
  Json costs = Json::array();
  for (Eigen::Index i = 0; i < cfg.holding_costs.size(); ++i) costs.push_back(cfg.holding_costs(i));
  model["holding_costs"] = costs;
  model["discount"] = cfg.discount;

  Json regimes = Json::array();
  for (const auto& r : cfg.regimes) regimes.push_back({{"nu", r.nu}, {"alpha", r.alpha}});

  const auto& s = cfg.run;
  Json policies = Json::array();
  for (const auto& p : s.policies) {
    Json entry{{"name", p.name}};
    if (p.name == "static") {
      Json order = Json::array();
      for (const auto i : p.order) order.push_back(i + 1);
      entry["order"] = order;
    }
    policies.push_back(entry);
  }
  Json run{{"n", s.n},
           {"policies", policies},
           {"replications", s.replications},
           {"horizon", s.horizon},
           {"dt", s.dt},
           {"dt_refine", s.dt_refine},
           {"bcp_replications", s.bcp_replications},
           {"bcp_horizon", s.bcp_horizon},
           {"seed", s.seed},
           {"grid", s.grid},
           {"engine", to_string(s.engine)},
           {"cost_mode", to_string(s.cost_mode)},
           {"probe_n", s.probe_n},
           {"trace_replications", s.trace_replications},
           {"output", s.output}};
  if (s.initial_state) run["initial_state"] = *s.initial_state + 1;
  return Json{{"model", model}, {"regime", regimes}, {"run", run}};
}

}  // namespace mmq
