#pragma once

// Scheduling policies as pure decision functions of (queue lengths, environment
// state, time), plus a trace-level admissibility audit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmq/model.hpp"
#include "mmq/trace.hpp"

namespace mmq {

class Policy {
 public:
  using Decide = std::function<void(std::span<const std::int64_t> queues, int env, double time, std::span<double> alloc)>;

  Policy(std::string name, std::size_t classes, Decide decide)
      : name_(std::move(name)), classes_(classes), decide_(std::move(decide)) {}

  const std::string& name() const { return name_; }
  std::size_t classes() const { return classes_; }

  void decide(std::span<const std::int64_t> queues, int env, double time, std::span<double> alloc) const {
    decide_(queues, env, time, alloc);
  }

  std::vector<double> decide(std::span<const std::int64_t> queues, int env, double time = 0.0) const {
    std::vector<double> alloc(classes_, 0.0);
    decide_(queues, env, time, alloc);
    return alloc;
  }

 private:
  std::string name_;
  std::size_t classes_;
  Decide decide_;
};

namespace detail {

// Head-of-line priority with one order per environment state (a single shared
// order when orders.size() == 1).
inline Policy priority_policy(std::string name, std::vector<std::vector<std::size_t>> orders) {
  const std::size_t classes = orders.front().size();
  auto shared = std::make_shared<const std::vector<std::vector<std::size_t>>>(std::move(orders));
  return Policy(std::move(name), classes,
                [shared](std::span<const std::int64_t> queues, int env, double, std::span<double> alloc) {
                  std::fill(alloc.begin(), alloc.end(), 0.0);
                  const auto& table = *shared;
                  const auto& order = table.size() == 1 ? table[0] : table[static_cast<std::size_t>(env)];
                  for (const auto i : order) {
                    if (queues[i] > 0) {
                      alloc[i] = 1.0;
                      return;
                    }
                  }
                });
}

inline void check_permutation(const std::vector<std::size_t>& order, std::size_t classes) {
  std::vector<bool> seen(classes, false);
  if (order.size() != classes) throw std::invalid_argument("priority order must list every class exactly once");
  for (const auto i : order) {
    if (i >= classes || seen[i]) throw std::invalid_argument("priority order is not a permutation of the classes");
    seen[i] = true;
  }
}

}  // namespace detail

inline Policy cmu_star_policy(const PriorityOrder& order) {
  detail::check_permutation(order.sigma, order.sigma.size());
  return detail::priority_policy("cmu_star", {order.sigma});
}

inline Policy cmu_star_policy(const NetworkModel& model) {
  return cmu_star_policy(cmu_star_ordering(model.holding_costs(), limit_rates(model).mu));
}

// Serves the nonempty class with the largest c_i mu_i(y) in the current state y.
inline Policy dynamic_cmu_policy(const Vector& c, const RateFunction& service_at_n) {
  if (static_cast<std::size_t>(c.size()) != service_at_n.classes()) {
    throw std::invalid_argument("dynamic cmu: cost and rate dimensions differ");
  }
  std::vector<std::vector<std::size_t>> orders;
  for (std::size_t y = 0; y < service_at_n.states(); ++y) {
    std::vector<std::size_t> order(service_at_n.classes());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return c(static_cast<Eigen::Index>(a)) * service_at_n(y, a) > c(static_cast<Eigen::Index>(b)) * service_at_n(y, b);
    });
    orders.push_back(std::move(order));
  }
  return detail::priority_policy("dynamic_cmu", std::move(orders));
}

inline Policy dynamic_cmu_policy(const NetworkModel& model, std::uint64_t n) {
  return dynamic_cmu_policy(model.holding_costs(), model.service_rates(n));
}

// Fixed head-of-line priority; order holds 0-based class indices.
inline Policy static_priority_policy(std::vector<std::size_t> order) {
  detail::check_permutation(order, order.size());
  std::string name = "static";
  for (const auto i : order) name += "_" + std::to_string(i + 1);
  return detail::priority_policy(std::move(name), {std::move(order)});
}

struct AdmissibilityCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const AdmissibilityCheck& check(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw std::out_of_range("no admissibility check named " + name);
  }
};

inline AdmissibilityReport validate_admissibility(const PathTrace& trace, double tolerance = 1e-9) {
  AdmissibilityReport report;
  report.checks.reserve(7);  // make() hands out references into this vector
  const std::size_t k_classes = trace.classes;
  auto make = [&](std::string name) -> AdmissibilityCheck& {
    report.checks.push_back({std::move(name), true, ""});
    return report.checks.back();
  };
  auto fail = [](AdmissibilityCheck& check, std::size_t k, const std::string& what) {
    if (check.passed) check.detail = "record " + std::to_string(k) + ": " + what;
    check.passed = false;
  };

  auto& busy = make("busy_time_nondecreasing");
  auto& idle = make("idle_time_nondecreasing");
  auto& clock = make("clock_identity");
  auto& nonneg = make("queue_nonnegative");
  auto& conservation = make("queue_conservation");
  auto& piecewise = make("allocation_constant_between_events");
  auto& feasible = make("allocation_feasible");

  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto q = trace.queue_vector(k);
    const auto a = trace.alloc_vector(k);
    const auto t = trace.busy_vector(k);
    const auto arr = trace.arrival_vector(k);
    const auto dep = trace.departure_vector(k);
    double busy_sum = 0.0;
    double alloc_sum = 0.0;
    for (std::size_t i = 0; i < k_classes; ++i) {
      if (q[i] < 0) fail(nonneg, k, "Q" + std::to_string(i + 1) + " < 0");
      if (q[i] != arr[i] - dep[i]) fail(conservation, k, "Q" + std::to_string(i + 1) + " != A - D");
      if (a[i] < 0.0 || a[i] > 1.0) fail(feasible, k, "allocation outside [0, 1]");
      if (q[i] == 0 && a[i] != 0.0) fail(feasible, k, "empty class " + std::to_string(i + 1) + " allocated service");
      busy_sum += t[i];
      alloc_sum += a[i];
    }
    if (alloc_sum > 1.0 + tolerance) fail(feasible, k, "allocations sum above 1");
    const double scale = std::max(1.0, trace.times[k]);
    if (std::abs(trace.times[k] - busy_sum - trace.idle[k]) > tolerance * scale) {
      fail(clock, k, "t != sum T + I");
    }
    if (k == 0) {
      for (std::size_t i = 0; i < k_classes; ++i) {
        if (t[i] != 0.0) fail(busy, k, "T does not start at 0");
      }
      if (trace.idle[0] != 0.0) fail(idle, k, "I does not start at 0");
      continue;
    }
    const double dt = trace.times[k] - trace.times[k - 1];
    if (dt < 0.0) fail(piecewise, k, "event times decrease");
    const auto t_prev = trace.busy_vector(k - 1);
    const auto a_prev = trace.alloc_vector(k - 1);
    double idle_rate = 1.0;
    for (std::size_t i = 0; i < k_classes; ++i) {
      if (t[i] < t_prev[i]) fail(busy, k, "T" + std::to_string(i + 1) + " decreased");
      if (std::abs((t[i] - t_prev[i]) - a_prev[i] * dt) > tolerance * scale) {
        fail(piecewise, k, "busy-time increment disagrees with the allocation held since the previous event");
      }
      idle_rate -= a_prev[i];
    }
    if (trace.idle[k] < trace.idle[k - 1]) fail(idle, k, "I decreased");
    if (std::abs((trace.idle[k] - trace.idle[k - 1]) - idle_rate * dt) > tolerance * scale) {
      fail(piecewise, k, "idle-time increment disagrees with the allocation held since the previous event");
    }
  }
  return report;
}

}  // namespace mmq
