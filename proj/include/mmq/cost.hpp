#pragma once

// Discounted holding cost of diffusion-scaled queue paths: exact per-interval
// integration, grid estimators, Monte Carlo aggregation with common random
// numbers, and an explicit bound on the truncated tail.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmq/model.hpp"
#include "mmq/policies.hpp"
#include "mmq/simulator.hpp"
#include "mmq/stats.hpp"
#include "mmq/trace.hpp"

namespace mmq {

struct CostSpec {
  Vector c;
  double gamma = 1.0;

  CostSpec(Vector costs, double discount) : c(std::move(costs)), gamma(discount) {
    if (c.size() == 0) throw std::invalid_argument("cost vector is empty");
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (!(c(i) > 0.0) || !std::isfinite(c(i))) throw std::invalid_argument("holding costs must be positive");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("discount rate must be positive");
  }
};

inline CostSpec cost_spec(const NetworkModel& model) { return CostSpec(model.holding_costs(), model.discount()); }

enum class CostMode {
  Exact,      // closed-form integral over each inter-event interval
  Grid,       // delta * sum_{j >= 1} e^{-gamma j delta} c.Qhat(j delta)
  UnweightedGrid,  // the same sum without the delta weight (table compatibility)
};

inline const char* to_string(CostMode mode) {
  switch (mode) {
    case CostMode::Exact: return "exact";
    case CostMode::Grid: return "grid";
    case CostMode::UnweightedGrid: return "unweighted_grid";
  }
  return "?";
}

inline CostMode parse_cost_mode(const std::string& text) {
  if (text == "exact") return CostMode::Exact;
  if (text == "grid") return CostMode::Grid;
  if (text == "unweighted_grid") return CostMode::UnweightedGrid;
  throw std::invalid_argument("unknown cost mode '" + text + "' (expected exact, grid or unweighted_grid)");
}

// int_a^b e^{-gamma t} dt for 0 <= a <= b.
inline double discount_weight(double gamma, double a, double b) {
  if (gamma == 0.0) return b - a;
  return std::exp(-gamma * a) * -std::expm1(-gamma * (b - a)) / gamma;
}

// Walks the grid points delta, 2 delta, ... <= horizon through a right-continuous
// step path delivered as events; fn(t_j, queues) is called once per point.
class GridWalker {
 public:
  GridWalker(double delta, double horizon, bool include_zero = false)
      : delta_(delta), steps_(static_cast<std::size_t>(std::floor(horizon / delta + 1e-9))), next_(include_zero ? 0 : 1) {
    if (!(delta > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  }

  // Event at scaled time t: every grid point in [previous event, t) saw the previous level.
  template <class Fn>
  void advance(double t, bool final, Fn&& fn) {
    if (started_) {
      while (next_ <= steps_ && (final || point(next_) < t)) {
        fn(point(next_), level_);
        ++next_;
      }
    }
    started_ = true;
  }

  void set_level(std::span<const std::int64_t> queues) { level_.assign(queues.begin(), queues.end()); }
  std::size_t steps() const { return steps_; }
  double point(std::size_t j) const { return static_cast<double>(j) * delta_; }
  bool complete() const { return next_ > steps_; }

 private:
  double delta_;
  std::size_t steps_;
  std::size_t next_;
  bool started_ = false;
  std::vector<std::int64_t> level_;
};

// Streaming discounted cost of Qhat = Q / n^alpha over scaled time [0, horizon].
class DiscountedCostAccumulator {
 public:
  DiscountedCostAccumulator(const CostSpec& spec, std::uint64_t n, double alpha, double horizon,
                            CostMode mode = CostMode::Exact, double delta = 0.1)
      : c_(spec.c),
        gamma_(spec.gamma),
        n_(static_cast<double>(n)),
        space_(std::pow(static_cast<double>(n), alpha)),
        horizon_(horizon),
        mode_(mode),
        delta_(delta),
        grid_(delta, horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("cost horizon must be positive");
  }

  void on_event(const EventView& e) {
    const double t = e.time / n_;
    if (mode_ == CostMode::Exact) {
      if (started_ && last_t_ < horizon_) total_.add(level_ * discount_weight(gamma_, last_t_, std::min(t, horizon_)));
    } else {
      grid_.advance(t, e.kind == EventKind::End && t >= horizon_ * (1.0 - 1e-12), [&](double tj, const auto& q) {
        const double w = std::exp(-gamma_ * tj) * (mode_ == CostMode::Grid ? delta_ : 1.0);
        total_.add(w * level_of(q));
      });
      grid_.set_level(e.queues);
    }
    started_ = true;
    last_t_ = t;
    level_ = level_of(e.queues);
    if (e.kind == EventKind::End) covered_ = t;
  }

  // Throws if the observed path stopped before the horizon.
  double value() const {
    if (covered_ < horizon_ * (1.0 - 1e-12)) {
      throw std::invalid_argument("cost horizon " + format_double(horizon_) + " exceeds the path coverage " +
                                  format_double(covered_));
    }
    return total_.value();
  }

 private:
  template <class Q>
  double level_of(const Q& queues) const {
    double level = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(c_.size()); ++i) {
      level += c_(static_cast<Eigen::Index>(i)) * static_cast<double>(queues[i]);
    }
    return level / space_;
  }

  Vector c_;
  double gamma_;
  double n_;
  double space_;
  double horizon_;
  CostMode mode_;
  double delta_;
  GridWalker grid_;
  NeumaierSum total_;
  bool started_ = false;
  double last_t_ = 0.0;
  double level_ = 0.0;
  double covered_ = 0.0;
};

inline double discounted_cost_of_trace(const QueuePath& path, const CostSpec& spec, std::uint64_t n, double alpha,
                                       double horizon, CostMode mode = CostMode::Exact, double delta = 0.1) {
  if (path.n != n) throw std::invalid_argument("path was generated at a different n");
  if (std::abs(path.regime.alpha - alpha) > kRegimeTolerance) {
    throw std::invalid_argument("alpha is inconsistent with the path's regime");
  }
  if (static_cast<std::size_t>(spec.c.size()) != path.classes) throw std::invalid_argument("cost dimension mismatch");
  DiscountedCostAccumulator acc(spec, n, alpha, horizon, mode, delta);
  replay(path, acc);
  return acc.value();
}

// int_H^inf e^{-gamma t} C a (t + 1) dt, the tail of the cost when
// E c.Qhat(t) <= C E sup_{s<=t} What(s) <= C a (t + 1).
inline double truncation_bound(double gamma, double horizon, double growth_constant, double cost_scale = 1.0) {
  if (!(growth_constant >= 0.0) || !std::isfinite(growth_constant)) {
    throw std::invalid_argument("growth constant must be finite and nonnegative");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("discount rate must be positive");
  if (growth_constant == 0.0) return 0.0;
  return cost_scale * growth_constant * std::exp(-gamma * horizon) *
         ((horizon + 1.0) / gamma + 1.0 / (gamma * gamma));
}

inline double truncation_bound(const CostSpec& spec, double horizon, double growth_constant, double cost_scale = 1.0) {
  return truncation_bound(spec.gamma, horizon, growth_constant, cost_scale);
}

// max_i c_i mu_i: c.q <= (max_i c_i mu_i) sum_i q_i / mu_i.
inline double workload_cost_scale(const CostSpec& spec, const Vector& mu) {
  return spec.c.cwiseProduct(mu).maxCoeff();
}

// Tracks sup_{s <= t_j} What(s) at integer checkpoints t_j = 1, 2, ..., where
// What = sum_i Q_i / (n^alpha mu_i).
class WorkloadSupAccumulator {
 public:
  WorkloadSupAccumulator(const Vector& mu, std::uint64_t n, double alpha, double horizon)
      : inv_mu_(mu.cwiseInverse()),
        n_(static_cast<double>(n)),
        space_(std::pow(static_cast<double>(n), alpha)),
        sups_(static_cast<std::size_t>(std::max(1.0, std::floor(horizon))), 0.0) {}

  void on_event(const EventView& e) {
    const double t = e.time / n_;
    double w = 0.0;
    for (std::size_t i = 0; i < e.queues.size(); ++i) {
      w += static_cast<double>(e.queues[i]) * inv_mu_(static_cast<Eigen::Index>(i));
    }
    w /= space_;
    // Record at s enters every checkpoint j with s <= j.
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(t) - 1.0));
    for (std::size_t j = first; j < sups_.size(); ++j) sups_[j] = std::max(sups_[j], w);
  }

  const std::vector<double>& sups() const { return sups_; }

 private:
  Vector inv_mu_;
  double n_;
  double space_;
  std::vector<double> sups_;  // sups_[j] covers s <= j + 1
};

struct CostRunOptions {
  std::size_t replications = 2000;
  double horizon = 6.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  CostMode mode = CostMode::Exact;
  double delta = 0.1;
  EngineMode engine = EngineMode::Auto;
  std::optional<std::size_t> initial_env;
};

struct DiscountedCostEstimate {
  std::string policy;
  std::uint64_t n = 1;
  double nu = 0.0;
  double alpha = 0.5;
  std::size_t replications = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double horizon = 0.0;
  double truncation_bound = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double growth_constant = 0.0;
  std::vector<double> samples;  // per-replication costs in replication order
};

inline std::vector<std::string> cost_header() {
  return {"policy", "n", "nu", "alpha", "replications", "mean", "stdError", "truncationBound", "ciLow95", "ciHigh95"};
}

inline void write_cost_row(CsvWriter& csv, const DiscountedCostEstimate& e) {
  csv.write(e.policy, e.n, e.nu, e.alpha, e.replications, e.mean, e.std_error, e.truncation_bound, e.ci_low,
            e.ci_high);
}

namespace detail {

inline DiscountedCostEstimate finish_estimate(std::string policy, const PreparedNetwork& net, const CostSpec& spec,
                                              const CostRunOptions& options, std::vector<double> samples,
                                              const std::vector<std::vector<double>>& workload_sups,
                                              const Vector& mu_star) {
  DiscountedCostEstimate e;
  e.policy = std::move(policy);
  e.n = net.n;
  e.nu = net.regime.nu;
  e.alpha = net.regime.alpha;
  e.replications = samples.size();
  e.horizon = options.horizon;
  const auto s = summarize(samples);
  e.mean = s.mean;
  e.std_error = s.std_error;
  e.ci_low = s.ci_low;
  e.ci_high = s.ci_high;
  // a = max_j E[sup_{s <= t_j} What(s)] / (t_j + 1)
  double growth = 0.0;
  if (!workload_sups.empty()) {
    const std::size_t checkpoints = workload_sups.front().size();
    for (std::size_t j = 0; j < checkpoints; ++j) {
      std::vector<double> column;
      column.reserve(workload_sups.size());
      for (const auto& row : workload_sups) column.push_back(row[j]);
      growth = std::max(growth, summarize(column).mean / (static_cast<double>(j) + 2.0));
    }
  }
  e.growth_constant = growth;
  double bound = truncation_bound(spec, options.horizon, growth, workload_cost_scale(spec, mu_star));
  if (options.mode == CostMode::UnweightedGrid) bound /= options.delta;  // unweighted grid sum scales by 1/delta
  e.truncation_bound = bound;
  e.samples = std::move(samples);
  return e;
}

}  // namespace detail

inline DiscountedCostEstimate monte_carlo_cost(const PreparedNetwork& net, const Policy& policy, const CostSpec& spec,
                                               const CostRunOptions& options) {
  if (options.replications < 2) throw std::invalid_argument("monte carlo cost needs at least 2 replications");
  const Vector mu_star = net.services.average(net.pi);
  std::vector<double> samples(options.replications, 0.0);
  std::vector<std::vector<double>> sups(options.replications);
  for_each_replication(options.replications, options.threads, [&](std::size_t r) {
    SimulationOptions sim;
    sim.horizon = options.horizon;
    sim.seed = options.seed;
    sim.replication = r;
    sim.engine = options.engine;
    sim.initial_env = options.initial_env;
    DiscountedCostAccumulator cost(spec, net.n, net.regime.alpha, options.horizon, options.mode, options.delta);
    WorkloadSupAccumulator workload(mu_star, net.n, net.regime.alpha, options.horizon);
    ObserverSet<DiscountedCostAccumulator, WorkloadSupAccumulator> both(cost, workload);
    run_simulation(net, policy, sim, both);
    samples[r] = cost.value();
    sups[r] = workload.sups();
  });
  return detail::finish_estimate(policy.name(), net, spec, options, std::move(samples), sups, mu_star);
}

inline DiscountedCostEstimate monte_carlo_cost(const NetworkModel& model, std::uint64_t n, const Policy& policy,
                                               const CostSpec& spec, const CostRunOptions& options) {
  return monte_carlo_cost(prepare_network(model, n), policy, spec, options);
}

struct PairedDifference {
  std::string first;
  std::string second;
  SampleSummary difference;  // first - second, replication by replication
};

struct PolicyComparison {
  std::vector<DiscountedCostEstimate> estimates;
  std::vector<PairedDifference> differences;  // every policy against the first
};

// Common random numbers: every policy sees the same (seed, replication) streams.
inline PolicyComparison compare_policies(const PreparedNetwork& net, const std::vector<Policy>& policies,
                                         const CostSpec& spec, const CostRunOptions& options) {
  if (policies.size() < 2) throw std::invalid_argument("a comparison needs at least two policies");
  PolicyComparison out;
  for (const auto& p : policies) out.estimates.push_back(monte_carlo_cost(net, p, spec, options));
  const auto& base = out.estimates.front();
  for (std::size_t k = 1; k < out.estimates.size(); ++k) {
    const auto& other = out.estimates[k];
    std::vector<double> diff(base.samples.size());
    for (std::size_t r = 0; r < diff.size(); ++r) diff[r] = base.samples[r] - other.samples[r];
    out.differences.push_back({base.policy, other.policy, summarize(diff)});
  }
  return out;
}

// Appendix-style cost curves: C1(t) = E c.Qhat(t), C2(t) = E e^{-gamma t} c.Qhat(t),
// sampled on t = delta, 2 delta, ... <= horizon.
struct CostCurveSeries {
  std::string policy;
  std::vector<double> times;
  std::vector<double> c1;
  std::vector<double> c2;
};

class CurveAccumulator {
 public:
  CurveAccumulator(const Vector& c, double gamma, std::uint64_t n, double alpha, double delta, double horizon)
      : c_(c), gamma_(gamma), n_(static_cast<double>(n)), space_(std::pow(static_cast<double>(n), alpha)),
        horizon_(horizon), grid_(delta, horizon) {
    levels_.reserve(grid_.steps());
  }

  void on_event(const EventView& e) {
    const double t = e.time / n_;
    grid_.advance(t, e.kind == EventKind::End && t >= horizon_ * (1.0 - 1e-12), [&](double, const auto& q) {
      double level = 0.0;
      for (Eigen::Index i = 0; i < c_.size(); ++i) level += c_(i) * static_cast<double>(q[static_cast<std::size_t>(i)]);
      levels_.push_back(level / space_);
    });
    grid_.set_level(e.queues);
  }

  const std::vector<double>& levels() const { return levels_; }
  double point(std::size_t j) const { return grid_.point(j + 1); }
  double gamma() const { return gamma_; }

 private:
  Vector c_;
  double gamma_;
  double n_;
  double space_;
  double horizon_;
  GridWalker grid_;
  std::vector<double> levels_;
};

inline CostCurveSeries cost_curves(const PreparedNetwork& net, const Policy& policy, const Vector& c, double gamma,
                                   const CostRunOptions& options) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("discount rate must be nonnegative");
  if (options.replications < 1) throw std::invalid_argument("cost curves need at least one replication");
  std::vector<std::vector<double>> levels(options.replications);
  for_each_replication(options.replications, options.threads, [&](std::size_t r) {
    SimulationOptions sim;
    sim.horizon = options.horizon;
    sim.seed = options.seed;
    sim.replication = r;
    sim.engine = options.engine;
    sim.initial_env = options.initial_env;
    CurveAccumulator acc(c, gamma, net.n, net.regime.alpha, options.delta, options.horizon);
    run_simulation(net, policy, sim, acc);
    levels[r] = acc.levels();
  });
  CurveAccumulator grid(c, gamma, net.n, net.regime.alpha, options.delta, options.horizon);
  CostCurveSeries out;
  out.policy = policy.name();
  const std::size_t points = levels.front().size();
  for (std::size_t j = 0; j < points; ++j) {
    NeumaierSum sum;
    for (const auto& row : levels) sum.add(row[j]);
    const double mean = sum.value() / static_cast<double>(levels.size());
    const double t = grid.point(j);
    out.times.push_back(t);
    out.c1.push_back(mean);
    out.c2.push_back(gamma == 0.0 ? mean : std::exp(-gamma * t) * mean);
  }
  return out;
}

}  // namespace mmq
