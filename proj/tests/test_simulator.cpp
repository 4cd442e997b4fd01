#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "mmq/example_models.hpp"
#include "mmq/policies.hpp"
#include "mmq/simulator.hpp"
#include "mmq/stats.hpp"

using namespace mmq;

namespace {

// Time integral of sum_i Q_i over the covered interval.
double queue_area(const QueuePath& path) {
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    double total = 0;
    for (std::size_t i = 0; i < path.classes; ++i) total += static_cast<double>(path.queue(k, i));
    area += total * (path.times[k + 1] - path.times[k]);
  }
  return area;
}

NetworkModel zero_arrival_model() {
  Matrix q(2, 2);
  q << -1, 1, 2, -2;
  Matrix lambda = Matrix::Zero(2, 2);
  Matrix mu(2, 2);
  mu << 1, 2, 3, 4;
  Vector c(2);
  c << 1, 1;
  return NetworkModel(GeneratorFamily(GeneratorMatrix(q)), RateFamily::constant(lambda), RateFamily::constant(mu), c,
                      1.0, {1.0, 0.5});
}

}  // namespace

TEST(Simulator, ZeroArrivalsOnlyEnvironmentJumps) {
  const auto model = zero_arrival_model();
  const auto net = prepare_network(model, 4);
  SimulationOptions options;
  options.horizon = 5.0;
  options.seed = 1;
  const auto trace = simulate(net, cmu_star_policy(model), options);
  std::size_t jumps = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto kind = trace.kinds[k];
    EXPECT_TRUE(kind == EventKind::Start || kind == EventKind::EnvJump || kind == EventKind::End);
    jumps += kind == EventKind::EnvJump;
    EXPECT_EQ(trace.queue(k, 0), 0);
    EXPECT_EQ(trace.queue(k, 1), 0);
    EXPECT_DOUBLE_EQ(trace.idle[k], trace.times[k]);
  }
  EXPECT_GT(jumps, 10u);
  EXPECT_DOUBLE_EQ(trace.times.back(), 20.0);
  EXPECT_TRUE(validate_admissibility(trace).all_passed());
}

TEST(Simulator, MM1TimeAverageQueue) {
  const auto model = single_server_model(2.0, 2.5);
  const auto net = prepare_network(model, 1);
  const auto policy = cmu_star_policy(model);
  std::vector<double> averages(50);
  for (std::size_t r = 0; r < averages.size(); ++r) {
    SimulationOptions options;
    options.horizon = 2500.0;  // about 10^4 events at total rate ~4
    options.seed = 42;
    options.replication = r;
    const auto path = simulate_queue_path(net, policy, options);
    averages[r] = queue_area(path) / path.times.back();
  }
  const auto s = summarize(averages);
  EXPECT_LE(std::abs(s.mean - 4.0), 3.0 * s.std_error) << s.mean << " +- " << s.std_error;
}

TEST(Simulator, ConservationAndClockOnManyTraces) {
  const auto model = two_class_modulated_model();
  for (const std::uint64_t n : {1u, 25u, 100u}) {
    const auto net = prepare_network(model, n);
    for (const auto& policy : {cmu_star_policy(model), dynamic_cmu_policy(model, n)}) {
      for (std::uint64_t rep = 0; rep < 10; ++rep) {
        SimulationOptions options;
        options.horizon = 2.0;
        options.seed = 5;
        options.replication = rep;
        const auto trace = simulate(net, policy, options);
        for (std::size_t k = 0; k < trace.size(); ++k) {
          double busy = 0;
          for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_EQ(trace.queue(k, i), trace.arrival_vector(k)[i] - trace.departure_vector(k)[i]);
            EXPECT_GE(trace.queue(k, i), 0);
            busy += trace.busy_vector(k)[i];
          }
          EXPECT_NEAR(busy + trace.idle[k], trace.times[k], 1e-9 * std::max(1.0, trace.times[k]));
        }
        EXPECT_TRUE(validate_admissibility(trace).all_passed());
      }
    }
  }
}

TEST(Simulator, DeterministicTraces) {
  const auto model = two_class_modulated_model();
  const auto net = prepare_network(model, 25);
  SimulationOptions options;
  options.horizon = 3.0;
  options.seed = 77;
  options.replication = 4;
  std::ostringstream a, b;
  write_trace_csv(a, simulate(net, dynamic_cmu_policy(model, 25), options));
  write_trace_csv(b, simulate(net, dynamic_cmu_policy(model, 25), options));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_GT(a.str().size(), 1000u);
  options.replication = 5;
  std::ostringstream c;
  write_trace_csv(c, simulate(net, dynamic_cmu_policy(model, 25), options));
  EXPECT_NE(a.str(), c.str());
}

TEST(Simulator, DynamicRuleReactsToEnvironmentJumps) {
  const auto model = two_class_modulated_model();
  const auto net = prepare_network(model, 25);
  SimulationOptions options;
  options.horizon = 4.0;
  options.seed = 8;
  const auto trace = simulate(net, dynamic_cmu_policy(model, 25), options);
  std::size_t switches = 0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace.kinds[k] != EventKind::EnvJump) continue;
    if (trace.queue(k, 0) > 0 && trace.queue(k, 1) > 0) {
      const auto before = trace.alloc_vector(k - 1);
      const auto after = trace.alloc_vector(k);
      EXPECT_EQ(after[0], trace.env[k] == 0 ? 1.0 : 0.0);
      switches += before[0] != after[0];
    }
  }
  EXPECT_GT(switches, 0u);
}

TEST(Simulator, FrozenEnvironmentInterarrivalsAreExponential) {
  // Single environment state: class-1 interarrival times must be Exp(lambda).
  const auto model = single_server_model(3.0, 5.0);
  const auto net = prepare_network(model, 1);
  SimulationOptions options;
  options.horizon = 1e9;
  options.seed = 10;
  options.max_events = 40000;
  const auto trace = simulate(net, cmu_star_policy(model), options);
  std::vector<double> gaps;
  double last = 0.0;
  for (std::size_t k = 0; k < trace.size() && gaps.size() < 10000; ++k) {
    if (trace.kinds[k] != EventKind::Arrival) continue;
    gaps.push_back(trace.times[k] - last);
    last = trace.times[k];
  }
  ASSERT_EQ(gaps.size(), 10000u);
  std::sort(gaps.begin(), gaps.end());
  double d = 0.0;
  const double m = static_cast<double>(gaps.size());
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    const double cdf = 1.0 - std::exp(-3.0 * gaps[k]);
    d = std::max({d, std::abs(cdf - static_cast<double>(k) / m), std::abs(cdf - static_cast<double>(k + 1) / m)});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(m));
}

TEST(Simulator, EnginesAgreeStatistically) {
  const auto model = two_class_modulated_model();
  for (const std::uint64_t n : {4u, 25u}) {
    const auto net = prepare_network(model, n);
    const auto policy = dynamic_cmu_policy(model, n);
    std::vector<double> expl(400), marg(400);
    for (std::size_t r = 0; r < expl.size(); ++r) {
      SimulationOptions options;
      options.horizon = 2.0;
      options.seed = 19;
      options.replication = r;
      options.engine = EngineMode::Explicit;
      expl[r] = queue_area(simulate_queue_path(net, policy, options));
      options.seed = 20;
      options.engine = EngineMode::Marginalized;
      marg[r] = queue_area(simulate_queue_path(net, policy, options));
    }
    const auto a = summarize(expl);
    const auto b = summarize(marg);
    EXPECT_LE(std::abs(a.mean - b.mean), 4.0 * std::hypot(a.std_error, b.std_error))
        << "n " << n << ": " << a.mean << " vs " << b.mean;
  }
}

TEST(Simulator, RejectsBadRequests) {
  const auto model = two_class_modulated_model();
  EXPECT_THROW(prepare_network(model, 0), SimulationError);
  const auto net = prepare_network(model, 4);
  SimulationOptions options;
  EXPECT_THROW(simulate(net, static_priority_policy({0}), options), SimulationError);
  const Policy greedy("greedy", 2, [](auto, int, double, std::span<double> alloc) {
    alloc[0] = 1.0;
    alloc[1] = 1.0;
  });
  EXPECT_THROW(simulate(net, greedy, options), SimulationError);
  EXPECT_EQ(parse_engine_mode("marginalized"), EngineMode::Marginalized);
  EXPECT_THROW(parse_engine_mode("bogus"), std::invalid_argument);
}

TEST(Simulator, AutoEngineChoice) {
  const auto model = two_class_modulated_model();
  EXPECT_EQ(resolve_engine(prepare_network(model, 1), EngineMode::Auto), EngineMode::Explicit);
  EXPECT_EQ(resolve_engine(prepare_network(model, 10000), EngineMode::Auto), EngineMode::Marginalized);
  EXPECT_EQ(resolve_engine(prepare_network(model, 10000), EngineMode::Explicit), EngineMode::Explicit);
}
