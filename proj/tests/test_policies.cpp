#include <gtest/gtest.h>

#include "mmq/example_models.hpp"
#include "mmq/policies.hpp"
#include "mmq/simulator.hpp"
#include "test_support.hpp"

using namespace mmq;

namespace {

using Alloc = std::vector<double>;

Alloc decide(const Policy& p, std::vector<std::int64_t> q, int env) { return p.decide(q, env); }

PathTrace example_trace(const Policy& policy, std::uint64_t n = 25, std::uint64_t rep = 0) {
  const auto net = prepare_network(two_class_modulated_model(), n);
  SimulationOptions options;
  options.horizon = 2.0;
  options.seed = 3;
  options.replication = rep;
  return simulate(net, policy, options);
}

}  // namespace

TEST(CmuStar, Examples) {
  const auto model = two_class_modulated_model();
  const auto p = cmu_star_policy(model);
  EXPECT_EQ(p.name(), "cmu_star");
  for (int y = 0; y < 2; ++y) {
    EXPECT_EQ(decide(p, {3, 2}, y), (Alloc{0, 1}));
    EXPECT_EQ(decide(p, {0, 0}, y), (Alloc{0, 0}));
    EXPECT_EQ(decide(p, {5, 0}, y), (Alloc{1, 0}));
  }
}

TEST(DynamicCmu, ExampleAtN25) {
  const auto p = dynamic_cmu_policy(two_class_modulated_model(), 25);
  EXPECT_EQ(decide(p, {1, 1}, 0), (Alloc{1, 0}));
  EXPECT_EQ(decide(p, {1, 1}, 1), (Alloc{0, 1}));
  for (int y = 0; y < 2; ++y) EXPECT_EQ(decide(p, {0, 4}, y), (Alloc{0, 1}));
}

TEST(StaticPriority, Examples) {
  const auto p12 = static_priority_policy({0, 1});
  const auto p21 = static_priority_policy({1, 0});
  EXPECT_EQ(p21.name(), "static_2_1");
  EXPECT_EQ(decide(p12, {1, 1}, 0), (Alloc{1, 0}));
  EXPECT_EQ(decide(p21, {1, 1}, 0), (Alloc{0, 1}));
  EXPECT_EQ(decide(p12, {0, 0}, 0), (Alloc{0, 0}));
  EXPECT_THROW(static_priority_policy({0, 0}), std::invalid_argument);
  EXPECT_THROW(static_priority_policy({0, 2}), std::invalid_argument);
}

TEST(Policies, WorkConservationAndPurity) {
  testgen::Gen gen(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t K = 1 + gen.index(5);
    const std::size_t L = 1 + gen.index(4);
    Vector c(static_cast<Eigen::Index>(K));
    for (auto& x : c) x = gen.uniform(0.5, 5);
    const RateFunction mu(gen.rates(L, K, 0.1, 5));
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = K; i > 1; --i) std::swap(order[i - 1], order[gen.index(i)]);
    const std::vector<Policy> policies{dynamic_cmu_policy(c, mu), static_priority_policy(order),
                                       cmu_star_policy(PriorityOrder{order, std::vector<double>(K, 1.0)})};
    for (int draw = 0; draw < 20; ++draw) {
      std::vector<std::int64_t> q(K);
      for (auto& x : q) x = gen.coin(0.4) ? 0 : static_cast<std::int64_t>(gen.index(5));
      const int y = static_cast<int>(gen.index(L));
      const bool any = std::any_of(q.begin(), q.end(), [](auto x) { return x > 0; });
      for (const auto& p : policies) {
        const auto a = p.decide(q, y);
        double sum = 0;
        for (std::size_t i = 0; i < K; ++i) {
          sum += a[i];
          if (q[i] == 0) {
            EXPECT_EQ(a[i], 0.0);
          }
        }
        EXPECT_EQ(sum, any ? 1.0 : 0.0);
        EXPECT_EQ(a, p.decide(q, y));
      }
    }
  }
}

TEST(DynamicCmu, CostScalingInvariance) {
  testgen::Gen gen(29);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t K = 1 + gen.index(5);
    const std::size_t L = 1 + gen.index(4);
    Vector c(static_cast<Eigen::Index>(K));
    for (auto& x : c) x = gen.uniform(0.5, 5);
    const RateFunction mu(gen.rates(L, K, 0.1, 5));
    const double s = gen.uniform(0.01, 100);
    const auto a = dynamic_cmu_policy(c, mu);
    const auto b = dynamic_cmu_policy(s * c, mu);
    for (int draw = 0; draw < 20; ++draw) {
      std::vector<std::int64_t> q(K);
      for (auto& x : q) x = static_cast<std::int64_t>(gen.index(3));
      const int y = static_cast<int>(gen.index(L));
      EXPECT_EQ(a.decide(q, y), b.decide(q, y));
    }
  }
}

TEST(Admissibility, SimulatedTracesPass) {
  const auto model = two_class_modulated_model();
  for (const auto& policy : {cmu_star_policy(model), dynamic_cmu_policy(model, 25), static_priority_policy({0, 1})}) {
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      const auto report = validate_admissibility(example_trace(policy, 25, rep));
      EXPECT_TRUE(report.all_passed());
    }
  }
}

TEST(Admissibility, DecreasingBusyTimeFails) {
  auto trace = example_trace(cmu_star_policy(two_class_modulated_model()));
  ASSERT_GT(trace.size(), 10u);
  trace.busy[5 * trace.classes] = trace.busy[4 * trace.classes] - 1.0;
  const auto report = validate_admissibility(trace);
  EXPECT_FALSE(report.check("busy_time_nondecreasing").passed);
  EXPECT_FALSE(report.all_passed());
}

TEST(Admissibility, NegativeQueueFails) {
  auto trace = example_trace(cmu_star_policy(two_class_modulated_model()));
  trace.queues[3 * trace.classes] = -1;
  const auto report = validate_admissibility(trace);
  EXPECT_FALSE(report.check("queue_nonnegative").passed);
}

TEST(Admissibility, AllocationJumpBetweenEventsFails) {
  auto trace = example_trace(cmu_star_policy(two_class_modulated_model()));
  // Busy time grows at a rate the recorded allocation does not support.
  for (std::size_t k = 6; k < trace.size(); ++k) trace.busy[k * trace.classes] += 0.01;
  const auto report = validate_admissibility(trace);
  EXPECT_FALSE(report.check("allocation_constant_between_events").passed);
  EXPECT_FALSE(report.check("clock_identity").passed);
}

TEST(Admissibility, ServingEmptyClassFails) {
  auto trace = example_trace(cmu_star_policy(two_class_modulated_model()));
  trace.alloc[0] = 1.0;  // record 0 is the empty start state
  EXPECT_FALSE(validate_admissibility(trace).check("allocation_feasible").passed);
}

TEST(CmuStar, TracePriorityCompliance) {
  const auto model = two_class_modulated_model();
  const auto order = cmu_star_ordering(model.holding_costs(), limit_rates(model).mu);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const auto trace = example_trace(cmu_star_policy(model), 100, rep);
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const auto a = trace.alloc_vector(k);
      const auto q = trace.queue_vector(k);
      for (std::size_t pos = 0; pos < order.sigma.size(); ++pos) {
        if (a[order.sigma[pos]] != 1.0) continue;
        for (std::size_t higher = 0; higher < pos; ++higher) EXPECT_EQ(q[order.sigma[higher]], 0);
      }
      if (k > 0 && trace.kinds[k] == EventKind::Service) {
        EXPECT_EQ(trace.alloc_vector(k - 1)[static_cast<std::size_t>(trace.cls[k])], 1.0);
      }
    }
  }
}
