// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "mmq/mmq.hpp"
#include "test_support.hpp"

using namespace mmq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

constexpr std::size_t kThreads = 0;  // all cores; results do not depend on it

const std::vector<ScalingRegime> kRegimes{{1.0, 0.5},        {2.0 / 3.0, 0.5},  {1.0 / 3.0, 0.5},
                                          {0.0, 0.5},        {-1.0 / 3.0, 0.5}, {-1.0 / 3.0, 2.0 / 3.0}};

BrownianSpec example_spec(const NetworkModel& model) {
  const auto report = verify_heavy_traffic(model, {10000, 1000000, 100000000});
  const auto cov =
      covariance_lambda(model.generator().limit(), model.arrival_family().limit(), model.stationary_limit());
  return brownian_spec(model, cov, report);
}

Outcome heavy_traffic() {
  const auto report = verify_heavy_traffic(two_class_modulated_model(), {10000, 1000000, 100000000});
  const auto& last = report.b_estimates.back();
  const double traffic = std::abs(report.traffic_sum - 1.0);
  const double b = std::max(std::abs(last.b(0) + 0.4), std::abs(last.b(1) + 0.8));
  return {traffic <= 1e-12 && last.n == 100000000 && b <= 1e-3,
          fmt("|trafficSum - 1| = %.2e, b(1e8) = (%.6f, %.6f), max deviation %.2e", traffic, last.b(0), last.b(1), b)};
}

Outcome skorohod_suite() {
  testgen::Gen gen(2024);
  double worst_comp = 0.0;
  std::size_t dominance_fail = 0, lipschitz_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t points = 2 + gen.index(999);
    const double scale = gen.uniform(0.01, 10.0);
    const auto x1 = gen.path(points, gen.uniform(0, 2) * scale, scale);
    auto x2 = x1;
    for (auto& v : x2) v += 0.1 * scale * gen.normal();
    x2[0] = std::abs(x2[0]);
    const auto d1 = skorohod_map(x1);
    const auto d2 = skorohod_map(x2);
    worst_comp = std::max(worst_comp, std::abs(complementarity(d1)));
    double dx = 0.0, dz = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      dx = std::max(dx, std::abs(x1[k] - x2[k]));
      dz = std::max(dz, std::abs(d1.z[k] - d2.z[k]));
    }
    lipschitz_fail += dz > 2.0 * dx + 1e-12;
    std::vector<double> candidate(points);
    double extra = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      if (k && gen.coin(0.1)) extra += gen.uniform(0, scale);
      candidate[k] = d1.y[k] + (k ? extra : 0.0);
    }
    dominance_fail += !feasible_dominance_check(x1, candidate);
  }
  return {worst_comp <= 1e-9 && dominance_fail == 0 && lipschitz_fail == 0,
          fmt("1000 paths: max complementarity %.2e, dominance failures %zu, Lipschitz-2 violations %zu", worst_comp,
              dominance_fail, lipschitz_fail)};
}

Outcome poisson_suite() {
  testgen::Gen gen(4048);
  double residual = 0.0, centering = 0.0, min_eig = 0.0;
  std::size_t asymmetric = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t L = 1 + gen.index(8);
    const std::size_t K = 1 + gen.index(3);
    const GeneratorMatrix q(gen.generator(L));
    const RateFunction f(gen.rates(L, K));
    const auto pi = stationary_distribution(q);
    const auto hat = solve_poisson_equation(q, f, pi).hat;
    for (std::size_t i = 0; i < K; ++i) {
      const Vector col = f.column(i);
      const Vector r = q.rates() * hat.col(static_cast<Eigen::Index>(i)) -
                       (Vector::Constant(static_cast<Eigen::Index>(L), pi.expect(col)) - col);
      residual = std::max(residual, r.cwiseAbs().maxCoeff());
      centering = std::max(centering, std::abs(pi.expect(hat.col(static_cast<Eigen::Index>(i)))));
    }
    const auto cov = covariance_lambda(q, f, pi);
    asymmetric += !(cov.lambda_cov == cov.lambda_cov.transpose());
    min_eig = std::min(min_eig, cov.min_eigenvalue());
  }

  // Long-run variance of int_0^T (f(Y) - pi f) / sqrt(T) for a 2-state chain.
  Matrix qm(2, 2);
  qm << -2, 2, 1, -1;
  const GeneratorMatrix q(qm);
  const auto pi = stationary_distribution(q);
  const double f[2] = {1.0, 2.0};
  const double mean = pi[0] * f[0] + pi[1] * f[1];
  const double T = 1e4;
  std::vector<double> squares(200);
  for (std::size_t r = 0; r < squares.size(); ++r) {
    CounterRng rng(5, r, Stream::Test);
    std::size_t y = rng.uniform() < pi[0] ? 0 : 1;
    double t = 0.0, integral = 0.0;
    while (t < T) {
      const auto d = next_jump(q, y, rng);
      const double step = std::min(d.holding_time, T - t);
      integral += (f[y] - mean) * step;
      t += step;
      y = d.next;
    }
    squares[r] = integral * integral / T;
  }
  const auto s = summarize(squares);
  Matrix fm(2, 1);
  fm << 1, 2;
  const double lambda11 = covariance_lambda(q, RateFunction(fm), pi).lambda_cov(0, 0);
  const bool oracle = std::abs(s.mean - lambda11) <= 3.0 * s.std_error;
  return {residual <= 1e-10 && centering <= 1e-10 && asymmetric == 0 && min_eig >= -1e-10 && oracle,
          fmt("residual %.2e, centering %.2e, asymmetric %zu, min eigenvalue %.2e; MC %.5f +- %.5f vs Lambda %.5f",
              residual, centering, asymmetric, min_eig, s.mean, s.std_error, lambda11)};
}

Outcome mm1() {
  const auto model = single_server_model(2.0, 2.5);
  const auto net = prepare_network(model, 1);
  const auto policy = cmu_star_policy(model);
  std::vector<double> averages(50);
  for_each_replication(averages.size(), kThreads, [&](std::size_t r) {
    SimulationOptions options;
    options.horizon = 1e12;
    options.max_events = 10000;
    options.seed = 42;
    options.replication = r;
    const auto path = simulate_queue_path(net, policy, options);
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      area += static_cast<double>(path.queue(k, 0)) * (path.times[k + 1] - path.times[k]);
    }
    averages[r] = area / path.times.back();
  });
  const auto s = summarize(averages);
  return {std::abs(s.mean - 4.0) <= 3.0 * s.std_error,
          fmt("time-average queue %.4f +- %.4f (target 4, 50 reps x 1e4 events)", s.mean, s.std_error)};
}

Outcome trace_identities() {
  std::size_t traces = 0, failures = 0;
  double worst_decomposition = 0.0, worst_workload = 0.0;
  std::string first_failure;
  for (const auto& regime : kRegimes) {
    const auto model = two_class_modulated_model(regime);
    for (const std::uint64_t n : {25u, 100u}) {
      const auto net = prepare_network(model, n);
      for (const auto& policy : {cmu_star_policy(model), dynamic_cmu_policy(model, n)}) {
        for (std::uint64_t rep = 0; rep < 5; ++rep) {
          SimulationOptions options;
          options.horizon = 3.0;
          options.seed = 55;
          options.replication = rep;
          const auto trace = simulate(net, policy, options);
          ++traces;
          const auto report = validate_admissibility(trace);
          const auto netput = diffusion_netput(trace, model, n);
          const double decomposition = netput.decomposition_error();
          worst_decomposition = std::max(worst_decomposition, decomposition);
          bool ok = report.all_passed() && decomposition <= 1e-9;
          if (policy.name() == "cmu_star") {
            const double w = netput.workload_identity_error();
            worst_workload = std::max(worst_workload, w);
            ok = ok && w <= 1e-9;
          }
          if (!ok) {
            ++failures;
            if (first_failure.empty()) first_failure = policy.name() + " n=" + std::to_string(n);
          }
        }
      }
    }
  }
  return {failures == 0, fmt("%zu traces, %zu failures%s; max decomposition error %.2e, max workload error %.2e",
                             traces, failures, first_failure.empty() ? "" : (" (first " + first_failure + ")").c_str(),
                             worst_decomposition, worst_workload)};
}

// Mean over replications of per-class and l1 sups of Q(nt) / n^exponent on t <= 1.
struct SupMeans {
  std::vector<double> per_class;
  double total = 0.0;
};

SupMeans sup_means(const NetworkModel& model, std::uint64_t n, double exponent, std::size_t reps, std::uint64_t seed) {
  const auto net = prepare_network(model, n);
  const auto policy = cmu_star_policy(model);
  std::vector<std::vector<double>> per(reps);
  std::vector<double> totals(reps);
  for_each_replication(reps, kThreads, [&](std::size_t r) {
    SimulationOptions options;
    options.horizon = 1.0;
    options.seed = seed;
    options.replication = r;
    SupAccumulator acc(model.classes(), n, exponent, 1.0);
    run_simulation(net, policy, options, acc);
    per[r] = acc.per_class();
    totals[r] = acc.total();
  });
  SupMeans out;
  out.total = summarize(totals).mean;
  for (std::size_t i = 0; i < model.classes(); ++i) {
    std::vector<double> column;
    for (const auto& row : per) column.push_back(row[i]);
    out.per_class.push_back(summarize(column).mean);
  }
  return out;
}

Outcome flln() {
  const auto m = sup_means(two_class_modulated_model(), 10000, 1.0, 100, 61);
  return {m.total <= 0.05, fmt("mean sup |Qbar| = %.4f (threshold 0.05)", m.total)};
}

Outcome state_space_collapse() {
  const auto model = two_class_modulated_model({1.0, 0.5});
  const auto order = cmu_star_ordering(model.holding_costs(), limit_rates(model).mu);
  const auto m = sup_means(model, 2500, 0.5, 200, 71);
  const double priority = m.per_class[order.sigma.front()];
  const double lowest = m.per_class[order.sigma.back()];
  return {priority <= 0.2 * lowest,
          fmt("mean sup Qhat: priority class %zu %.4f, class %zu %.4f, ratio %.4f (threshold 0.2)",
              order.sigma.front() + 1, priority, order.sigma.back() + 1, lowest, priority / lowest)};
}

Outcome convergence_to_j_star() {
  const auto model = two_class_modulated_model({1.0, 0.5});
  CostRunOptions options;
  options.replications = 2000;
  options.horizon = 5.0;
  options.seed = 81;
  options.threads = kThreads;
  const auto jn = monte_carlo_cost(prepare_network(model, 2500), cmu_star_policy(model), cost_spec(model), options);

  const auto spec = example_spec(model);
  JStarOptions j;
  j.replications = 10000;
  j.horizon = 5.0;
  j.threads = kThreads;
  j.dt = 1e-3;
  j.seed = 82;
  const auto coarse = estimate_J_star(spec, model, j);
  j.dt = 1e-4;
  j.seed = 83;
  const auto fine = estimate_J_star(spec, model, j);
  const auto& a = coarse.estimate;
  const auto& b = fine.estimate;
  const bool refined = std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error);
  const bool tail = jn.truncation_bound <= 0.01 * jn.mean;
  const double gap = std::abs(jn.mean - b.mean) / b.mean;
  return {refined && tail && gap <= 0.15,
          fmt("J^n(cmu*) = %.4f +- %.4f (tail %.2e); J* dt=1e-3 %.4f +- %.4f, dt=1e-4 %.4f +- %.4f (%s); "
              "relative gap %.3f (threshold 0.15)",
              jn.mean, jn.std_error, jn.truncation_bound, a.mean, a.std_error, b.mean, b.std_error,
              refined ? "refinement agrees" : "refinement disagrees", gap)};
}

Outcome policy_ordering() {
  // Reference table values for the cmu* column, (nu, alpha) rows by n = 25, 100.
  const double reference[6][2] = {{52.70, 60.18}, {72.66, 75.07}, {63.93, 81.60},
                                  {64.91, 68.22}, {79.58, 55.63}, {41.25, 25.80}};
  std::size_t ordered = 0, in_band = 0, rows = 0;
  std::ostringstream table;
  for (std::size_t g = 0; g < kRegimes.size(); ++g) {
    const auto model = two_class_modulated_model(kRegimes[g]);
    for (std::size_t j = 0; j < 2; ++j) {
      const std::uint64_t n = j == 0 ? 25 : 100;
      CostRunOptions options;
      options.replications = 2000;
      options.horizon = 6.0;
      options.seed = 91;
      options.threads = kThreads;
      options.mode = CostMode::UnweightedGrid;
      options.delta = 0.1;
      const auto net = prepare_network(model, n);
      const auto cmp =
          compare_policies(net, {cmu_star_policy(model), dynamic_cmu_policy(model, n)}, cost_spec(model), options);
      const double star = cmp.estimates[0].mean;
      const double dyn = cmp.estimates[1].mean;
      const bool order_ok = star <= dyn;
      const bool band_ok = std::abs(star - reference[g][j]) <= 0.5 * reference[g][j];
      ordered += order_ok;
      in_band += band_ok;
      ++rows;
      table << fmt("\n    n=%-3llu nu=%+.3f alpha=%.3f  cmu* %7.3f  dynamic %7.3f  diff %+.3f +- %.3f  ref %6.2f  %s %s",
                   static_cast<unsigned long long>(n), kRegimes[g].nu, kRegimes[g].alpha, star, dyn,
                   cmp.differences[0].difference.mean, cmp.differences[0].difference.std_error, reference[g][j],
                   order_ok ? "ordered" : "REVERSED", band_ok ? "in-band" : "OUT-OF-BAND");
    }
  }
  return {ordered == rows && in_band == rows,
          fmt("ordering cmu* <= dynamic in %zu/%zu rows; magnitude within +-50%% of reference in %zu/%zu rows", ordered,
              rows, in_band, rows) +
              table.str()};
}

Outcome phi_decay() {
  const auto model = two_class_modulated_model({1.0, 0.5});
  std::vector<double> means;
  for (const std::uint64_t n : {100u, 400u, 1600u}) {
    const auto net = prepare_network(model, n);
    const auto policy = cmu_star_policy(model);
    const auto f = model.service_rates(n);
    const auto pi = model.stationary(n);
    std::vector<double> sups(200);
    for_each_replication(sups.size(), kThreads, [&](std::size_t r) {
      SimulationOptions options;
      options.horizon = 1.0;
      options.seed = 101;
      options.replication = r;
      options.engine = EngineMode::Explicit;
      PhiAccumulator acc(f, pi, n, 1.0);
      run_simulation(net, policy, options, acc);
      sups[r] = acc.sup();
    });
    means.push_back(summarize(sups).mean);
  }
  const double r1 = means[1] / means[0];
  const double r2 = means[2] / means[1];
  auto ok = [](double r) { return r >= 0.25 && r <= 1.0; };
  return {ok(r1) && ok(r2), fmt("mean sup |Phi| at n=100,400,1600: %.5f, %.5f, %.5f; ratios %.3f, %.3f (band [0.25, 1])",
                                means[0], means[1], means[2], r1, r2)};
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    out[std::filesystem::relative(entry.path(), root).string()] = buffer.str();
  }
  return out;
}

Outcome determinism() {
  const char* config = R"({
    "model": {
      "classes": 2, "states": 2,
      "generator": [[-2, 2], [1, -1]],
      "arrival": {"base": [[1, 1.5], [1, 1.5]], "slope": [[0.6, 0.6], [1.2, 1.2]]},
      "service": {"base": [[2.5, 1.5], [2.5, 3]], "slope": [[3, 3], [6, 6]]},
      "holding_costs": [20, 25], "discount": 2
    },
    "regime": [{"nu": 1, "alpha": "auto"}, {"nu": "-1/3", "alpha": "2/3"}],
    "run": {
      "n": [4, 9], "policies": ["cmu_star", "dynamic_cmu", {"name": "static", "order": [2, 1]}],
      "replications": 30, "horizon": 2, "dt": 0.01, "dt_refine": 0.005, "bcp_replications": 100,
      "bcp_horizon": 2, "seed": 13, "grid": 0.25, "probe_n": [100, 10000], "trace_replications": 2
    }
  })";
  const auto base = std::filesystem::temp_directory_path() / ("mmq_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(base);
  const std::vector<std::pair<std::string, std::function<int(const CommandContext&)>>> commands{
      {"verify", cmd_verify}, {"simulate", cmd_simulate}, {"compare", cmd_compare}, {"bcp", cmd_bcp},
      {"curves", cmd_curves}};
  std::size_t files = 0, mismatches = 0;
  std::string first;
  for (const auto& [name, command] : commands) {
    std::map<std::string, std::string> runs[2];
    std::string logs[2];
    for (int k = 0; k < 2; ++k) {
      std::ostringstream log;
      CommandContext ctx{parse_config_text(config), base / (name + std::to_string(k)), &log};
      ctx.config.run.threads = k == 0 ? 1 : 3;
      command(ctx);
      runs[k] = read_tree(ctx.out);
      logs[k] = log.str();
    }
    files += runs[0].size();
    if (runs[0] != runs[1] || logs[0] != logs[1]) {
      ++mismatches;
      if (first.empty()) first = name;
    }
  }
  std::filesystem::remove_all(base);
  return {mismatches == 0 && files > 0,
          fmt("5 commands run twice (1 vs 3 threads), %zu output files compared, %zu commands differ%s", files,
              mismatches, first.empty() ? "" : (" (first " + first + ")").c_str())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "heavy traffic", 1, heavy_traffic},
      {2, "Skorohod suite", 10, skorohod_suite},
      {3, "Poisson equation / Lambda", 60, poisson_suite},
      {4, "M/M/1 sanity", 30, mm1},
      {5, "exact trace identities", 0, trace_identities},
      {6, "FLLN", 300, flln},
      {7, "state-space collapse", 300, state_space_collapse},
      {8, "convergence to J*", 900, convergence_to_j_star},
      {9, "policy ordering", 1200, policy_ordering},
      {10, "Phi decay", 300, phi_decay},
      {11, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0 || seconds < c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    failed += !pass;
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << "  "
              << outcome.detail << fmt("  [%.1f s", seconds)
              << (c.budget_seconds > 0 ? fmt(", budget %.0f s]", c.budget_seconds) : std::string("]"))
              << (in_time ? "" : " over budget") << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
