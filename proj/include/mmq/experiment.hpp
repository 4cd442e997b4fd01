#pragma once

// Subcommands of the experiment harness. Each writes fixed-layout CSV files into
// an output directory and a one-line-per-result summary to a stream.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "mmq/bcp.hpp"
#include "mmq/config.hpp"
#include "mmq/cost.hpp"
#include "mmq/ergodic.hpp"
#include "mmq/policies.hpp"
#include "mmq/scaling.hpp"
#include "mmq/simulator.hpp"
#include "mmq/table.hpp"

namespace mmq {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInvariant = 3, kExitRuntime = 4 };

struct CommandContext {
  ExperimentConfig config;
  std::filesystem::path out;
  std::ostream* log = nullptr;
};

namespace detail {

inline std::ofstream open_output(const CommandContext& ctx, const std::string& name) {
  std::filesystem::create_directories(ctx.out);
  std::ofstream file(ctx.out / name, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + (ctx.out / name).string());
  return file;
}

inline void write_resolved_config(const CommandContext& ctx) {
  auto file = open_output(ctx, "resolved_config.json");
  file << to_json(ctx.config).dump(2) << '\n';
}

inline std::string case_label(const ScalingRegime& r) {
  const auto c = r.regime_case();
  return c ? to_string(*c) : "uncovered";
}

inline std::ostream& log(const CommandContext& ctx) {
  static std::ostream null(nullptr);
  return ctx.log ? *ctx.log : null;
}

inline CostRunOptions cost_options(const RunSpec& run) {
  CostRunOptions o;
  o.replications = run.replications;
  o.horizon = run.horizon;
  o.seed = run.seed;
  o.threads = run.threads;
  o.mode = run.cost_mode;
  o.delta = run.grid;
  o.engine = run.engine;
  o.initial_env = run.initial_state;
  return o;
}

}  // namespace detail

inline int cmd_verify(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  detail::write_resolved_config(ctx);
  auto file = detail::open_output(ctx, "verify.csv");
  CsvWriter csv(file, {"regime", "nu", "alpha", "quantity", "index", "n", "value"});
  auto diag_file = detail::open_output(ctx, "regime_diagnostics.csv");
  CsvWriter diag(diag_file, {"regime", "nu", "alpha", "case", "valid", "violation"});

  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto model = cfg.model(cfg.regimes[r]);
    const double nu = cfg.regimes[r].nu;
    const double alpha = cfg.regimes[r].alpha;
    auto row = [&](const std::string& quantity, const std::string& index, std::uint64_t n, double value) {
      csv.write(r + 1, nu, alpha, quantity, index, n, value);
    };
    const auto pi = model.stationary_limit();
    for (std::size_t y = 0; y < pi.size(); ++y) row("pi", std::to_string(y + 1), 0, pi[y]);
    const auto report = verify_heavy_traffic(model, cfg.run.probe_n);
    for (std::size_t i = 0; i < model.classes(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      row("lambdaStar", std::to_string(i + 1), 0, report.lambda_star(ii));
      row("muStar", std::to_string(i + 1), 0, report.mu_star(ii));
    }
    row("trafficSum", "", 0, report.traffic_sum);
    row("trafficDeviation", "", 0, report.deviation);
    row("trafficFlagged", "", 0, report.flagged ? 1.0 : 0.0);
    for (std::size_t i = 0; i < model.classes(); ++i) row("b", std::to_string(i + 1), 0, report.b(static_cast<Eigen::Index>(i)));
    for (const auto& probe : report.b_estimates) {
      for (std::size_t i = 0; i < model.classes(); ++i) {
        row("bEstimate", std::to_string(i + 1), probe.n, probe.b(static_cast<Eigen::Index>(i)));
      }
    }
    const auto order = cmu_star_ordering(model.holding_costs(), report.mu_star);
    for (std::size_t k = 0; k < order.sigma.size(); ++k) {
      row("sigma", std::to_string(k + 1), 0, static_cast<double>(order.sigma[k] + 1));
      row("cmuStar", std::to_string(k + 1), 0, order.values[k]);
    }
    const auto cov = covariance_lambda(model.generator().limit(), model.arrival_family().limit(), pi);
    for (std::size_t i = 0; i < model.classes(); ++i) {
      for (std::size_t j = 0; j < model.classes(); ++j) {
        row("LambdaLimit", std::to_string(i + 1) + "." + std::to_string(j + 1), 0,
            cov.lambda_cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
    for (const auto n : cfg.run.n) {
      const auto cov_n = covariance_lambda(model.generator().at(n), model.arrival_rates(n), model.stationary(n));
      for (std::size_t i = 0; i < model.classes(); ++i) {
        for (std::size_t j = 0; j < model.classes(); ++j) {
          row("LambdaAtN", std::to_string(i + 1) + "." + std::to_string(j + 1), n,
              cov_n.lambda_cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
      }
    }

    const auto diagnostics = validate_regime(model);
    const auto label = detail::case_label(model.regime());
    if (diagnostics.valid()) diag.write(r + 1, nu, alpha, label, true, "");
    for (const auto& v : diagnostics.violations) diag.write(r + 1, nu, alpha, label, false, v);

    detail::log(ctx) << "regime " << r + 1 << " (nu " << format_double(nu) << ", alpha " << format_double(alpha)
                     << ", " << label << "): trafficSum " << format_double(report.traffic_sum) << ", b = (";
    for (std::size_t i = 0; i < model.classes(); ++i) {
      detail::log(ctx) << (i ? ", " : "") << format_double(report.b(static_cast<Eigen::Index>(i)));
    }
    detail::log(ctx) << ")" << (diagnostics.valid() ? "" : ", regime diagnostics reported") << '\n';
  }
  return kExitOk;
}

inline int cmd_simulate(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  detail::write_resolved_config(ctx);
  auto file = detail::open_output(ctx, "simulate.csv");
  CsvWriter csv(file, {"regime", "nu", "alpha", "n", "policy", "replication", "records", "admissible",
                       "failedCheck", "decompositionError", "workloadIdentityError"});
  bool all_ok = true;
  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto model = cfg.model(cfg.regimes[r]);
    for (const auto n : cfg.run.n) {
      const auto net = prepare_network(model, n);
      for (const auto& policy : cfg.policies(model, n)) {
        for (std::size_t rep = 0; rep < cfg.run.trace_replications; ++rep) {
          SimulationOptions sim;
          sim.horizon = cfg.run.horizon;
          sim.seed = cfg.run.seed;
          sim.replication = rep;
          sim.initial_env = cfg.run.initial_state;
          const auto trace = simulate(net, policy, sim);
          const auto report = validate_admissibility(trace);
          std::string failed;
          for (const auto& c : report.checks) {
            if (!c.passed) failed += (failed.empty() ? "" : ";") + c.name;
          }
          const auto netput = diffusion_netput(trace, model, n);
          csv.write(r + 1, cfg.regimes[r].nu, cfg.regimes[r].alpha, n, policy.name(), rep, trace.size(),
                    report.all_passed(), failed, netput.decomposition_error(), netput.workload_identity_error());
          all_ok = all_ok && report.all_passed();
          const std::string name = "trace_r" + std::to_string(r + 1) + "_n" + std::to_string(n) + "_" +
                                   policy.name() + "_rep" + std::to_string(rep) + ".csv";
          auto trace_file = detail::open_output(ctx, name);
          write_trace_csv(trace_file, trace);
          detail::log(ctx) << name << ": " << trace.size() << " records, "
                           << (report.all_passed() ? "admissible" : "NOT admissible: " + failed) << '\n';
        }
      }
    }
  }
  return all_ok ? kExitOk : kExitInvariant;
}

inline int cmd_compare(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.run.policies.size() < 2) throw ConfigError("compare needs at least two policies in run.policies");
  detail::write_resolved_config(ctx);
  auto cost_file = detail::open_output(ctx, "compare.csv");
  CsvWriter costs(cost_file, cost_header());
  auto diff_file = detail::open_output(ctx, "compare_differences.csv");
  CsvWriter diffs(diff_file, {"n", "nu", "alpha", "case", "covered", "first", "second", "meanDifference", "stdError",
                              "ciLow95", "ciHigh95"});
  std::vector<std::string> header{"n", "nu", "alpha", "case", "covered"};
  for (const auto& p : cfg.run.policies) {
    header.push_back(p.name == "static" ? "cost_static" : "cost_" + p.name);
  }
  auto table_file = detail::open_output(ctx, "compare_table.csv");
  CsvWriter table(table_file, header);

  const auto options = detail::cost_options(cfg.run);
  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto model = cfg.model(cfg.regimes[r]);
    const auto spec = cost_spec(model);
    const auto label = detail::case_label(model.regime());
    const bool covered = model.regime().covered();
    for (const auto n : cfg.run.n) {
      const auto net = prepare_network(model, n);
      const auto result = compare_policies(net, cfg.policies(model, n), spec, options);
      std::vector<std::string> table_row{CsvWriter::cell(n), CsvWriter::cell(model.regime().nu),
                                         CsvWriter::cell(model.regime().alpha), label, CsvWriter::cell(covered)};
      for (const auto& e : result.estimates) {
        write_cost_row(costs, e);
        table_row.push_back(CsvWriter::cell(e.mean));
      }
      table.row(table_row);
      for (const auto& d : result.differences) {
        diffs.write(n, model.regime().nu, model.regime().alpha, label, covered, d.first, d.second, d.difference.mean,
                    d.difference.std_error, d.difference.ci_low, d.difference.ci_high);
        detail::log(ctx) << "n " << n << ", nu " << format_double(model.regime().nu) << ", alpha "
                         << format_double(model.regime().alpha) << " (" << label << "): " << d.first << " - "
                         << d.second << " = " << format_double(d.difference.mean) << " +- "
                         << format_double(d.difference.std_error) << '\n';
      }
    }
  }
  return kExitOk;
}

inline int cmd_bcp(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  detail::write_resolved_config(ctx);
  auto cost_file = detail::open_output(ctx, "bcp.csv");
  CsvWriter rows(cost_file, cost_header());
  auto spec_file = detail::open_output(ctx, "bcp_spec.csv");
  CsvWriter dump(spec_file, {"regime", "nu", "alpha", "case", "quantity", "i", "j", "value"});
  auto refine_file = detail::open_output(ctx, "bcp_refinement.csv");
  CsvWriter refine(refine_file, {"regime", "dt", "mean", "stdError", "dtRefine", "meanRefine", "stdErrorRefine",
                                 "combinedStdError", "agree3se"});
  auto gap_file = detail::open_output(ctx, "bcp_gap.csv");
  CsvWriter gap(gap_file, {"regime", "n", "costMean", "costStdError", "jStar", "gap", "relativeGap"});

  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto model = cfg.model(cfg.regimes[r]);
    if (!model.regime().covered()) {
      detail::log(ctx) << "regime " << r + 1 << ": (nu, alpha) not covered, no Brownian benchmark\n";
      continue;
    }
    const auto report = verify_heavy_traffic(model, cfg.run.probe_n);
    const auto pi = model.stationary_limit();
    const auto cov = covariance_lambda(model.generator().limit(), model.arrival_family().limit(), pi);
    const auto spec = brownian_spec(model, cov, report);
    const auto params = workload_parameters(spec, report.mu_star);
    const auto label = detail::case_label(model.regime());
    const double nu = model.regime().nu;
    const double alpha = model.regime().alpha;
    for (std::size_t i = 0; i < model.classes(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      dump.write(r + 1, nu, alpha, label, "theta", i + 1, 0, spec.drift(ii));
      for (std::size_t j = 0; j < model.classes(); ++j) {
        dump.write(r + 1, nu, alpha, label, "Sigma", i + 1, j + 1, spec.covariance(ii, static_cast<Eigen::Index>(j)));
      }
    }
    dump.write(r + 1, nu, alpha, label, "workloadDrift", 0, 0, params.drift);
    dump.write(r + 1, nu, alpha, label, "workloadVariance", 0, 0, params.variance);

    JStarOptions options;
    options.replications = cfg.run.bcp_replications;
    options.horizon = cfg.run.bcp_horizon;
    options.seed = cfg.run.seed;
    options.threads = cfg.run.threads;
    options.dt = cfg.run.dt;
    const auto coarse = estimate_J_star(spec, model, options);
    options.dt = cfg.run.dt_refine;
    options.seed = cfg.run.seed + 1;
    const auto fine = estimate_J_star(spec, model, options);
    write_cost_row(rows, coarse.estimate);
    write_cost_row(rows, fine.estimate);
    const double combined = std::hypot(coarse.estimate.std_error, fine.estimate.std_error);
    const bool agree = std::abs(coarse.estimate.mean - fine.estimate.mean) <= 3.0 * combined;
    refine.write(r + 1, coarse.dt, coarse.estimate.mean, coarse.estimate.std_error, fine.dt, fine.estimate.mean,
                 fine.estimate.std_error, combined, agree);
    detail::log(ctx) << "regime " << r + 1 << " (" << label << "): J* = " << format_double(coarse.estimate.mean)
                     << " +- " << format_double(coarse.estimate.std_error) << " (dt " << format_double(coarse.dt)
                     << "), " << format_double(fine.estimate.mean) << " +- "
                     << format_double(fine.estimate.std_error) << " (dt " << format_double(fine.dt) << ")\n";

    // Gap against cmu* at the largest configured n.
    const auto n = *std::max_element(cfg.run.n.begin(), cfg.run.n.end());
    auto cost_opts = detail::cost_options(cfg.run);
    cost_opts.mode = CostMode::Exact;
    const auto estimate = monte_carlo_cost(prepare_network(model, n), cmu_star_policy(model), cost_spec(model), cost_opts);
    const double j_star = coarse.estimate.mean;
    gap.write(r + 1, n, estimate.mean, estimate.std_error, j_star, estimate.mean - j_star,
              (estimate.mean - j_star) / j_star);
    detail::log(ctx) << "  cmu* at n " << n << ": " << format_double(estimate.mean) << " +- "
                     << format_double(estimate.std_error) << ", gap " << format_double(estimate.mean - j_star) << '\n';
  }
  return kExitOk;
}

inline int cmd_curves(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  detail::write_resolved_config(ctx);
  auto options = detail::cost_options(cfg.run);
  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto model = cfg.model(cfg.regimes[r]);
    for (const auto n : cfg.run.n) {
      const auto net = prepare_network(model, n);
      const std::string name = "curves_r" + std::to_string(r + 1) + "_n" + std::to_string(n) + ".csv";
      auto file = detail::open_output(ctx, name);
      CsvWriter csv(file, {"time", "policy", "C1", "C2"});
      std::size_t below = 0;
      std::vector<CostCurveSeries> series;
      for (const auto& policy : cfg.policies(model, n)) {
        series.push_back(cost_curves(net, policy, model.holding_costs(), model.discount(), options));
      }
      for (const auto& s : series) {
        for (std::size_t k = 0; k < s.times.size(); ++k) csv.write(s.times[k], s.policy, s.c1[k], s.c2[k]);
      }
      if (series.size() >= 2) {
        for (std::size_t k = 0; k < series[0].times.size(); ++k) below += series[0].c1[k] <= series[1].c1[k];
        detail::log(ctx) << name << ": " << series[0].policy << " at or below " << series[1].policy << " at "
                         << below << " of " << series[0].times.size() << " grid points\n";
      } else {
        detail::log(ctx) << name << '\n';
      }
    }
  }
  return kExitOk;
}

}  // namespace mmq
