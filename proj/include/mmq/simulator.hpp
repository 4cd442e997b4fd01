#pragma once

// Event-driven simulation of the n-th network.
//
// Queue events come from a uniformized candidate stream of rate R, with
// R >= sum_i lambda_i(y) + max_i mu_i(y) in every state y. A candidate at time t
// becomes a class-i arrival with probability lambda_i(Y(t)) / R, a class-i
// service with probability mu_i(Y(t)) alloc_i / R, and is discarded otherwise.
// Two engines share this construction:
//
//  explicit      environment jumps are simulated one by one and reported; the
//                trace carries exact occupation, busy and idle times.
//  marginalized  Y is only sampled at candidate times, from the exact transition
//                kernel exp(n^nu Q dt). Needed when n^nu makes the environment
//                much faster than the queue. Produces queue paths only.
//
// Candidate times, selection uniforms and environment draws never depend on the
// policy, so two policies run with the same (seed, replication) share them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmq/env_chain.hpp"
#include "mmq/errors.hpp"
#include "mmq/model.hpp"
#include "mmq/policies.hpp"
#include "mmq/random.hpp"
#include "mmq/trace.hpp"

namespace mmq {

enum class EngineMode { Auto, Explicit, Marginalized };

inline const char* to_string(EngineMode mode) {
  switch (mode) {
    case EngineMode::Auto: return "auto";
    case EngineMode::Explicit: return "explicit";
    case EngineMode::Marginalized: return "marginalized";
  }
  return "?";
}

inline EngineMode parse_engine_mode(const std::string& text) {
  if (text == "auto") return EngineMode::Auto;
  if (text == "explicit") return EngineMode::Explicit;
  if (text == "marginalized") return EngineMode::Marginalized;
  throw std::invalid_argument("unknown engine '" + text + "' (expected auto, explicit or marginalized)");
}

// Compensated running sum.
class NeumaierSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Model quantities resolved at one n, shared read-only by all replications.
struct PreparedNetwork {
  std::uint64_t n = 1;
  ScalingRegime regime;
  GeneratorMatrix generator;
  RateFunction arrivals;
  RateFunction services;
  StationaryDistribution pi;
  double env_speed = 1.0;       // n^nu
  double candidate_rate = 0.0;  // R
  std::shared_ptr<const TransitionKernel> kernel;

  std::size_t classes() const { return arrivals.classes(); }
  std::size_t states() const { return generator.size(); }
  double env_rate() const { return env_speed * generator.max_exit_rate(); }
};

inline PreparedNetwork prepare_network(const NetworkModel& model, std::uint64_t n) {
  if (n < 1) throw SimulationError("n must be at least 1");
  const auto& q = model.generator().at(n);
  auto lambda = model.arrival_rates(n);
  auto mu = model.service_rates(n);
  double rate = 0.0;
  for (std::size_t y = 0; y < q.size(); ++y) {
    double arrivals = 0.0;
    double service = 0.0;
    for (std::size_t i = 0; i < lambda.classes(); ++i) {
      arrivals += lambda(y, i);
      service = std::max(service, mu(y, i));
    }
    rate = std::max(rate, arrivals + service);
  }
  const double speed = std::pow(static_cast<double>(n), model.regime().nu);
  if (!std::isfinite(rate) || !std::isfinite(speed) || !std::isfinite(speed * q.max_exit_rate())) {
    throw SimulationError("event rates overflow at n = " + std::to_string(n));
  }
  auto kernel = std::make_shared<const TransitionKernel>(q, speed);
  return PreparedNetwork{n,   model.regime(), q,   std::move(lambda), std::move(mu), stationary_distribution(q),
                         speed, rate,          std::move(kernel)};
}

struct SimulationOptions {
  double horizon = 1.0;  // scaled time; the unscaled run covers [0, n * horizon]
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::optional<std::size_t> initial_env;  // default: drawn from pi^n
  std::uint64_t max_events = 0;            // stop after this many queue events (0 = no limit)
  EngineMode engine = EngineMode::Auto;
};

struct RunSummary {
  double end_time = 0.0;  // unscaled
  std::uint64_t queue_events = 0;
  std::uint64_t env_jumps = 0;
  std::uint64_t candidates = 0;
  bool stopped_early = false;
  EngineMode engine = EngineMode::Explicit;
};

// Explicit when environment jumps are at most this many times as frequent as candidates.
inline constexpr double kExplicitEnvRatio = 4.0;

inline EngineMode resolve_engine(const PreparedNetwork& net, EngineMode requested) {
  if (requested != EngineMode::Auto) return requested;
  return net.env_rate() <= kExplicitEnvRatio * std::max(net.candidate_rate, 1e-300) ? EngineMode::Explicit
                                                                                     : EngineMode::Marginalized;
}

namespace detail {

inline void check_allocation(std::span<const std::int64_t> queues, std::span<const double> alloc,
                             const std::string& policy) {
  double total = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    if (!(alloc[i] >= 0.0 && alloc[i] <= 1.0)) {
      throw SimulationError("policy " + policy + " returned an allocation outside [0, 1]");
    }
    if (queues[i] == 0 && alloc[i] != 0.0) {
      throw SimulationError("policy " + policy + " served empty class " + std::to_string(i + 1));
    }
    total += alloc[i];
  }
  if (total > 1.0 + 1e-12) throw SimulationError("policy " + policy + " allocated more than one server");
}

inline std::size_t draw_initial_env(const PreparedNetwork& net, const SimulationOptions& options) {
  if (options.initial_env) {
    if (*options.initial_env >= net.states()) throw SimulationError("initial environment state out of range");
    return *options.initial_env;
  }
  if (net.states() == 1) return 0;
  CounterRng rng(options.seed, options.replication, Stream::Initial);
  const double target = rng.uniform();
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t y = 0; y < net.states(); ++y) {
    if (net.pi[y] <= 0.0) continue;
    last = y;
    cumulative += net.pi[y];
    if (target < cumulative) return y;
  }
  return last;
}

struct Selection {
  EventKind kind = EventKind::Start;  // Start means the candidate was discarded
  int cls = -1;
};

inline Selection select_event(const PreparedNetwork& net, std::size_t y, std::span<const double> alloc,
                              double target) {
  const std::size_t k = net.classes();
  for (std::size_t i = 0; i < k; ++i) {
    const double rate = net.arrivals(y, i);
    if (target < rate) return {EventKind::Arrival, static_cast<int>(i)};
    target -= rate;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (alloc[i] <= 0.0) continue;
    const double rate = net.services(y, i) * alloc[i];
    if (target < rate) return {EventKind::Service, static_cast<int>(i)};
    target -= rate;
  }
  return {};
}

inline void check_options(const PreparedNetwork& net, const Policy& policy, const SimulationOptions& options) {
  if (!(options.horizon > 0.0) || !std::isfinite(options.horizon)) throw SimulationError("horizon must be positive");
  if (policy.classes() != net.classes()) {
    throw SimulationError("policy " + policy.name() + " expects " + std::to_string(policy.classes()) +
                          " classes, model has " + std::to_string(net.classes()));
  }
}

}  // namespace detail

template <class Observer>
RunSummary run_explicit(const PreparedNetwork& net, const Policy& policy, const SimulationOptions& options,
                        Observer& observer) {
  detail::check_options(net, policy, options);
  const std::size_t k = net.classes();
  const double t_end = static_cast<double>(net.n) * options.horizon;
  const double rate = net.candidate_rate;

  CounterRng env_rng(options.seed, options.replication, Stream::Environment);
  CounterRng cand_rng(options.seed, options.replication, Stream::Candidate);
  CounterRng sel_rng(options.seed, options.replication, Stream::Selection);

  std::size_t y = detail::draw_initial_env(net, options);
  std::vector<std::int64_t> queues(k, 0), arrivals(k, 0), departures(k, 0);
  std::vector<double> alloc(k, 0.0), busy_values(k, 0.0);
  std::vector<NeumaierSum> busy(k);
  NeumaierSum idle;
  double t = 0.0;

  auto decide = [&] {
    policy.decide(queues, static_cast<int>(y), t, alloc);
    detail::check_allocation(queues, alloc, policy.name());
  };
  auto advance = [&](double to) {
    const double dt = to - t;
    double served = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (alloc[i] != 0.0) busy[i].add(alloc[i] * dt);
      served += alloc[i];
    }
    if (served < 1.0) idle.add((1.0 - served) * dt);
    t = to;
  };
  auto emit = [&](EventKind kind, int cls) {
    for (std::size_t i = 0; i < k; ++i) busy_values[i] = busy[i].value();
    EventView e;
    e.time = t;
    e.kind = kind;
    e.cls = cls;
    e.env = static_cast<int>(y);
    e.queues = queues;
    e.alloc = alloc;
    e.busy = busy_values;
    e.idle = idle.value();
    e.arrivals = arrivals;
    e.departures = departures;
    observer.on_event(e);
  };

  RunSummary summary;
  summary.engine = EngineMode::Explicit;
  decide();
  emit(EventKind::Start, -1);

  const double inf = std::numeric_limits<double>::infinity();
  double next_env = inf;
  std::size_t pending = y;
  auto schedule_env = [&] {
    if (net.states() == 1) return;
    const auto jump = next_jump(net.generator, y, env_rng);
    next_env = t + jump.holding_time / net.env_speed;
    pending = jump.next;
  };
  schedule_env();
  double next_cand = rate > 0.0 ? cand_rng.exponential(rate) : inf;

  while (true) {
    const double t_next = std::min(next_env, next_cand);
    if (!(t_next < t_end)) break;
    advance(t_next);
    if (next_env <= next_cand) {
      y = pending;
      ++summary.env_jumps;
      schedule_env();
      decide();
      emit(EventKind::EnvJump, -1);
      continue;
    }
    ++summary.candidates;
    const auto pick = detail::select_event(net, y, alloc, sel_rng.uniform() * rate);
    next_cand += cand_rng.exponential(rate);
    if (pick.kind == EventKind::Start) continue;
    const auto i = static_cast<std::size_t>(pick.cls);
    if (pick.kind == EventKind::Arrival) {
      ++queues[i];
      ++arrivals[i];
    } else {
      --queues[i];
      ++departures[i];
    }
    ++summary.queue_events;
    decide();
    emit(pick.kind, pick.cls);
    if (options.max_events && summary.queue_events >= options.max_events) {
      summary.stopped_early = true;
      break;
    }
  }
  if (!summary.stopped_early) advance(t_end);
  emit(EventKind::End, -1);
  summary.end_time = t;
  return summary;
}

template <class Observer>
RunSummary run_marginalized(const PreparedNetwork& net, const Policy& policy, const SimulationOptions& options,
                            Observer& observer) {
  detail::check_options(net, policy, options);
  const std::size_t k = net.classes();
  const double t_end = static_cast<double>(net.n) * options.horizon;
  const double rate = net.candidate_rate;

  CounterRng env_rng(options.seed, options.replication, Stream::Environment);
  CounterRng cand_rng(options.seed, options.replication, Stream::Candidate);
  CounterRng sel_rng(options.seed, options.replication, Stream::Selection);

  std::size_t y = detail::draw_initial_env(net, options);
  std::vector<std::int64_t> queues(k, 0), arrivals(k, 0), departures(k, 0);
  std::vector<double> alloc(k, 0.0);
  double t = 0.0;  // time of the last environment sample

  auto emit = [&](double time, EventKind kind, int cls) {
    EventView e;
    e.time = time;
    e.kind = kind;
    e.cls = cls;
    e.env = static_cast<int>(y);
    e.queues = queues;
    e.arrivals = arrivals;
    e.departures = departures;
    observer.on_event(e);
  };

  RunSummary summary;
  summary.engine = EngineMode::Marginalized;
  emit(0.0, EventKind::Start, -1);
  double next_cand = rate > 0.0 ? cand_rng.exponential(rate) : std::numeric_limits<double>::infinity();
  double last_event = 0.0;
  while (next_cand < t_end) {
    y = net.kernel->sample(y, next_cand - t, env_rng);
    t = next_cand;
    ++summary.candidates;
    // Q is constant since the previous event, so the allocation in force at t is
    // the policy's answer for (Q, Y(t)).
    policy.decide(queues, static_cast<int>(y), t, alloc);
    detail::check_allocation(queues, alloc, policy.name());
    const auto pick = detail::select_event(net, y, alloc, sel_rng.uniform() * rate);
    next_cand += cand_rng.exponential(rate);
    if (pick.kind == EventKind::Start) continue;
    const auto i = static_cast<std::size_t>(pick.cls);
    if (pick.kind == EventKind::Arrival) {
      ++queues[i];
      ++arrivals[i];
    } else {
      --queues[i];
      ++departures[i];
    }
    ++summary.queue_events;
    last_event = t;
    emit(t, pick.kind, pick.cls);
    if (options.max_events && summary.queue_events >= options.max_events) {
      summary.stopped_early = true;
      break;
    }
  }
  const double end = summary.stopped_early ? last_event : t_end;
  if (!summary.stopped_early) {
    y = net.kernel->sample(y, end - t, env_rng);
  }
  emit(end, EventKind::End, -1);
  summary.end_time = end;
  return summary;
}

template <class Observer>
RunSummary run_simulation(const PreparedNetwork& net, const Policy& policy, const SimulationOptions& options,
                          Observer& observer) {
  if (resolve_engine(net, options.engine) == EngineMode::Explicit) {
    return run_explicit(net, policy, options, observer);
  }
  return run_marginalized(net, policy, options, observer);
}

struct SimulationRequest {
  const NetworkModel* model = nullptr;
  std::uint64_t n = 1;
  const Policy* policy = nullptr;
  SimulationOptions options;
};

namespace detail {
template <class Path>
void stamp(Path& path, const PreparedNetwork& net, const RunSummary& summary, bool exact) {
  path.classes = net.classes();
  path.n = net.n;
  path.regime = net.regime;
  path.horizon = summary.end_time / static_cast<double>(net.n);
  path.occupation_exact = exact;
}
}  // namespace detail

// Full event-level trace (explicit engine).
inline PathTrace simulate(const PreparedNetwork& net, const Policy& policy, const SimulationOptions& options) {
  TraceRecorder recorder;
  recorder.path.classes = net.classes();
  const auto summary = run_explicit(net, policy, options, recorder);
  detail::stamp(recorder.path, net, summary, true);
  recorder.path.policy = policy.name();
  recorder.path.seed = options.seed;
  recorder.path.replication = options.replication;
  return std::move(recorder.path);
}

inline PathTrace simulate(const SimulationRequest& request) {
  if (!request.model || !request.policy) throw SimulationError("simulation request needs a model and a policy");
  return simulate(prepare_network(*request.model, request.n), *request.policy, request.options);
}

// Queue-length path from whichever engine the options select.
inline QueuePath simulate_queue_path(const PreparedNetwork& net, const Policy& policy,
                                     const SimulationOptions& options) {
  QueuePathRecorder recorder;
  recorder.path.classes = net.classes();
  const auto summary = run_simulation(net, policy, options, recorder);
  detail::stamp(recorder.path, net, summary, summary.engine == EngineMode::Explicit);
  return std::move(recorder.path);
}

}  // namespace mmq
