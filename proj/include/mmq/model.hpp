#pragma once

// Network configuration indexed by the scaling parameter n: rate families, scaling
// regimes, averaged rates, heavy-traffic checks and the c-mu* priority order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmq/env_chain.hpp"

namespace mmq {

enum class RegimeCase { Case1a, Case1b, Case2, Case3 };

inline const char* to_string(RegimeCase c) {
  switch (c) {
    case RegimeCase::Case1a: return "Case1a";
    case RegimeCase::Case1b: return "Case1b";
    case RegimeCase::Case2: return "Case2";
    case RegimeCase::Case3: return "Case3";
  }
  return "?";
}

inline constexpr double kRegimeTolerance = 1e-12;

// Which covered regime (nu, alpha) falls in, if any. The service-rate requirement
// of the non-1a cases is a model property and is checked by validate_regime.
inline std::optional<RegimeCase> classify_regime(double nu, double alpha) {
  const auto near = [](double a, double b) { return std::abs(a - b) <= kRegimeTolerance; };
  if (nu > 0.5 && near(alpha, 0.5)) return RegimeCase::Case1a;
  if (nu > 0.0 && nu <= 0.5 && near(alpha, 0.5)) return RegimeCase::Case1b;
  if (nu == 0.0 && near(alpha, 0.5)) return RegimeCase::Case2;
  if (nu > -1.0 && nu < 0.0 && near(alpha, (1.0 - nu) / 2.0)) return RegimeCase::Case3;
  return std::nullopt;
}

// Diffusion exponent implied by nu when alpha is left to "auto".
inline double auto_alpha(double nu) {
  if (nu <= -1.0) throw ModelError("nu must exceed -1, got " + std::to_string(nu));
  return nu >= 0.0 ? 0.5 : (1.0 - nu) / 2.0;
}

struct ScalingRegime {
  double nu = 1.0;
  double alpha = 0.5;

  std::optional<RegimeCase> regime_case() const { return classify_regime(nu, alpha); }
  bool covered() const { return regime_case().has_value(); }
};

// Rates r^n(y, i), either affine in n^{-1/2} (base + slope / sqrt(n)) or tabulated
// at explicit n. The limit of a tabulated family is its largest-n table.
class RateFamily {
 public:
  RateFamily() = default;

  static RateFamily affine(Matrix base, Matrix slope) {
    if (base.rows() != slope.rows() || base.cols() != slope.cols()) {
      throw ModelError("affine rate family: base and slope shapes differ");
    }
    RateFamily family;
    family.form_ = Affine{std::move(base), std::move(slope)};
    return family;
  }

  static RateFamily constant(Matrix values) {
    const auto rows = values.rows();
    const auto cols = values.cols();
    return affine(std::move(values), Matrix::Zero(rows, cols));
  }

  static RateFamily tabulated(std::map<std::uint64_t, Matrix> table) {
    if (table.empty()) throw ModelError("tabulated rate family needs at least one n");
    const auto rows = table.begin()->second.rows();
    const auto cols = table.begin()->second.cols();
    for (const auto& [n, m] : table) {
      if (n == 0) throw ModelError("tabulated rate family: n must be >= 1");
      if (m.rows() != rows || m.cols() != cols) throw ModelError("tabulated rate family: inconsistent shapes");
    }
    RateFamily family;
    family.form_ = std::move(table);
    return family;
  }

  bool is_affine() const { return std::holds_alternative<Affine>(form_); }
  const Matrix& base() const { return std::get<Affine>(form_).base; }
  const Matrix& slope() const { return std::get<Affine>(form_).slope; }
  const std::map<std::uint64_t, Matrix>& table() const { return std::get<Table>(form_); }

  std::size_t states() const { return static_cast<std::size_t>(limit_values().rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(limit_values().cols()); }

  bool defined_at(std::uint64_t n) const {
    if (n == 0) return false;
    return is_affine() || table().count(n) > 0;
  }

  RateFunction at(std::uint64_t n) const {
    if (n == 0) throw UndefinedIndex("scaling index n must be >= 1");
    if (const auto* a = std::get_if<Affine>(&form_)) {
      return RateFunction(a->base + a->slope / std::sqrt(static_cast<double>(n)));
    }
    const auto& t = table();
    const auto it = t.find(n);
    if (it == t.end()) throw UndefinedIndex("rate family is not tabulated at n = " + std::to_string(n));
    return RateFunction(it->second);
  }

  RateFunction limit() const { return RateFunction(limit_values()); }

  // State independence at every n the family can produce.
  bool state_independent() const {
    if (const auto* a = std::get_if<Affine>(&form_)) {
      return rows_equal(a->base) && rows_equal(a->slope);
    }
    return std::all_of(table().begin(), table().end(), [](const auto& kv) { return rows_equal(kv.second); });
  }

 private:
  struct Affine {
    Matrix base;
    Matrix slope;
  };
  using Table = std::map<std::uint64_t, Matrix>;

  static bool rows_equal(const Matrix& m) {
    for (Eigen::Index y = 1; y < m.rows(); ++y) {
      if (m.row(y) != m.row(0)) return false;
    }
    return true;
  }

  const Matrix& limit_values() const {
    if (const auto* a = std::get_if<Affine>(&form_)) return a->base;
    return table().rbegin()->second;
  }

  std::variant<Affine, Table> form_ = Affine{};
};

// Environment generators Q^n: one fixed matrix, or tabulated by n.
class GeneratorFamily {
 public:
  explicit GeneratorFamily(GeneratorMatrix fixed) : fixed_(std::move(fixed)) {}

  static GeneratorFamily tabulated(std::map<std::uint64_t, GeneratorMatrix> table) {
    if (table.empty()) throw ModelError("tabulated generator family needs at least one n");
    GeneratorFamily family(table.rbegin()->second);
    family.table_ = std::move(table);
    return family;
  }

  bool is_fixed() const { return table_.empty(); }
  const std::map<std::uint64_t, GeneratorMatrix>& table() const { return table_; }
  std::size_t states() const { return fixed_.size(); }

  const GeneratorMatrix& at(std::uint64_t n) const {
    if (table_.empty()) return fixed_;
    const auto it = table_.find(n);
    if (it == table_.end()) throw UndefinedIndex("generator is not tabulated at n = " + std::to_string(n));
    return it->second;
  }
  const GeneratorMatrix& limit() const { return fixed_; }

 private:
  GeneratorMatrix fixed_;
  std::map<std::uint64_t, GeneratorMatrix> table_;
};

class NetworkModel {
 public:
  NetworkModel(GeneratorFamily generator, RateFamily arrivals, RateFamily services, Vector holding_costs,
               double discount, ScalingRegime regime)
      : generator_(std::move(generator)),
        arrivals_(std::move(arrivals)),
        services_(std::move(services)),
        costs_(std::move(holding_costs)),
        discount_(discount),
        regime_(regime) {
    const std::size_t states = generator_.states();
    if (arrivals_.states() != states || services_.states() != states) {
      throw ModelError("rate tables must have one row per environment state");
    }
    if (arrivals_.classes() != services_.classes() || static_cast<std::size_t>(costs_.size()) != arrivals_.classes()) {
      throw ModelError("arrival, service and cost dimensions must agree on the class count");
    }
    if (arrivals_.classes() == 0) throw ModelError("model needs at least one class");
    if (costs_.minCoeff() <= 0.0 || !costs_.allFinite()) throw ModelError("holding costs must be strictly positive");
    if (!(discount_ > 0.0) || !std::isfinite(discount_)) throw ModelError("discount factor must be positive");
    if (regime_.nu <= -1.0) throw ModelError("nu must exceed -1");
    if (!(regime_.alpha > 0.0 && regime_.alpha < 1.0)) throw ModelError("alpha must lie in (0, 1)");
    // Materialize the limit tables so shape and sign errors surface now.
    (void)arrivals_.limit();
    (void)services_.limit();
  }

  std::size_t classes() const { return arrivals_.classes(); }
  std::size_t states() const { return generator_.states(); }
  const GeneratorFamily& generator() const { return generator_; }
  const RateFamily& arrival_family() const { return arrivals_; }
  const RateFamily& service_family() const { return services_; }
  const Vector& holding_costs() const { return costs_; }
  double discount() const { return discount_; }
  const ScalingRegime& regime() const { return regime_; }

  RateFunction arrival_rates(std::uint64_t n) const { return arrivals_.at(n); }
  RateFunction service_rates(std::uint64_t n) const { return services_.at(n); }
  StationaryDistribution stationary(std::uint64_t n) const { return stationary_distribution(generator_.at(n)); }
  StationaryDistribution stationary_limit() const { return stationary_distribution(generator_.limit()); }

  NetworkModel with_regime(ScalingRegime regime) const {
    NetworkModel copy = *this;
    copy.regime_ = regime;
    return copy;
  }
  NetworkModel with_costs(Vector costs) const {
    return NetworkModel(generator_, arrivals_, services_, std::move(costs), discount_, regime_);
  }

 private:
  GeneratorFamily generator_;
  RateFamily arrivals_;
  RateFamily services_;
  Vector costs_;
  double discount_;
  ScalingRegime regime_;
};

struct AveragedRates {
  Vector lambda;
  Vector mu;
};

inline AveragedRates averaged_rates(const NetworkModel& model, std::uint64_t n) {
  const auto pi = model.stationary(n);
  return {model.arrival_rates(n).average(pi), model.service_rates(n).average(pi)};
}

// Limit averages lambda* = pi(lambda), mu* = pi(mu) of the limit tables.
inline AveragedRates limit_rates(const NetworkModel& model) {
  const auto pi = model.stationary_limit();
  return {model.arrival_family().limit().average(pi), model.service_family().limit().average(pi)};
}

struct DriftProbe {
  std::uint64_t n;
  Vector b;
};

struct HeavyTrafficReport {
  Vector lambda_star;
  Vector mu_star;
  double traffic_sum = 0.0;
  double deviation = 0.0;  // traffic_sum - 1
  bool flagged = false;    // |deviation| above the caller tolerance
  Vector b;                // headline estimate: the largest probe
  std::vector<DriftProbe> b_estimates;
};

inline HeavyTrafficReport verify_heavy_traffic(const NetworkModel& model, std::vector<std::uint64_t> probes,
                                               double tolerance = 1e-9) {
  if (probes.empty()) throw std::invalid_argument("verify_heavy_traffic needs at least one probe size");
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());

  HeavyTrafficReport report;
  const auto limits = limit_rates(model);
  report.lambda_star = limits.lambda;
  report.mu_star = limits.mu;
  if (report.mu_star.minCoeff() <= 0.0) throw ModelError("limit service rates must be strictly positive");
  const Vector load = report.lambda_star.cwiseQuotient(report.mu_star);
  report.traffic_sum = load.sum();
  report.deviation = report.traffic_sum - 1.0;
  report.flagged = std::abs(report.deviation) > tolerance;

  const double alpha = model.regime().alpha;
  for (const auto n : probes) {
    const auto rates = averaged_rates(model, n);
    const Vector gap = rates.lambda.cwiseQuotient(rates.mu) - load;
    report.b_estimates.push_back({n, std::pow(static_cast<double>(n), 1.0 - alpha) * gap});
  }
  report.b = report.b_estimates.back().b;
  return report;
}

struct PriorityOrder {
  std::vector<std::size_t> sigma;  // 0-based class indices, highest priority first
  std::vector<double> values;      // c_{sigma(k)} mu*_{sigma(k)}
};

// Descending c_i mu*_i; equal products keep ascending class order.
inline PriorityOrder cmu_star_ordering(const Vector& c, const Vector& mu_star) {
  if (c.size() != mu_star.size() || c.size() == 0) {
    throw std::invalid_argument("cmu ordering: cost and rate vectors must be non-empty and the same length");
  }
  if (c.minCoeff() <= 0.0 || mu_star.minCoeff() <= 0.0) {
    throw std::invalid_argument("cmu ordering: costs and averaged service rates must be positive");
  }
  const auto k = static_cast<std::size_t>(c.size());
  std::vector<double> products(k);
  for (std::size_t i = 0; i < k; ++i) {
    products[i] = c(static_cast<Eigen::Index>(i)) * mu_star(static_cast<Eigen::Index>(i));
  }
  PriorityOrder order;
  order.sigma.resize(k);
  std::iota(order.sigma.begin(), order.sigma.end(), std::size_t{0});
  std::stable_sort(order.sigma.begin(), order.sigma.end(),
                   [&](std::size_t a, std::size_t b) { return products[a] > products[b]; });
  for (const auto i : order.sigma) order.values.push_back(products[i]);
  return order;
}

struct RegimeDiagnostics {
  std::optional<RegimeCase> regime_case;
  std::vector<std::string> violations;

  bool valid() const { return violations.empty(); }
};

inline RegimeDiagnostics validate_regime(const NetworkModel& model) {
  RegimeDiagnostics diag;
  const auto& regime = model.regime();
  diag.regime_case = regime.regime_case();
  if (!diag.regime_case) {
    diag.violations.push_back("(nu, alpha) = (" + std::to_string(regime.nu) + ", " + std::to_string(regime.alpha) +
                              ") lies outside the covered regimes");
  } else if (*diag.regime_case != RegimeCase::Case1a && !model.service_family().state_independent()) {
    diag.violations.push_back(std::string(to_string(*diag.regime_case)) +
                              " requires state-independent service rates mu^n(y) = mu^{n,*}");
  }
  if (!model.arrival_family().limit().strictly_positive()) {
    diag.violations.push_back("limit arrival rates must be strictly positive in every state");
  }
  return diag;
}

}  // namespace mmq
