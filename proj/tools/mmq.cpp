#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mmq/mmq.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> threads;
};

int run_command(const std::string& name, const GlobalFlags& flags) {
  mmq::CommandContext ctx;
  ctx.config = mmq::load_config(flags.config);
  auto& run = ctx.config.run;
  if (flags.seed) run.seed = *flags.seed;
  if (flags.reps) {
    if (*flags.reps < 2) throw mmq::ConfigError("--reps must be at least 2");
    run.replications = *flags.reps;
    run.bcp_replications = *flags.reps;
  }
  if (flags.threads) run.threads = *flags.threads;
  ctx.out = flags.out ? *flags.out : run.output;
  ctx.log = &std::cout;
  if (name == "verify") return mmq::cmd_verify(ctx);
  if (name == "simulate") return mmq::cmd_simulate(ctx);
  if (name == "compare") return mmq::cmd_compare(ctx);
  if (name == "bcp") return mmq::cmd_bcp(ctx);
  return mmq::cmd_curves(ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-modulated multiclass queue experiments"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "experiment config (JSON)")->required();
  app.add_option("--seed", flags.seed, "master seed, overrides run.seed");
  app.add_option("--out", flags.out, "output directory, overrides run.output");
  app.add_option("--reps", flags.reps, "replications, overrides run.replications and run.bcp_replications");
  app.add_option("--threads", flags.threads, "worker threads (0 = all cores)");
  app.fallthrough();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"verify", "heavy-traffic report, stationary law and regime diagnostics"},
      {"simulate", "per-event traces with admissibility and identity checks"},
      {"compare", "paired discounted-cost comparison of the configured policies"},
      {"bcp", "Brownian control problem benchmark J*"},
      {"curves", "mean cost curves C1 and C2 on the grid"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mmq::kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, flags);
  } catch (const mmq::ConfigInvariantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mmq::kExitInvariant;
  } catch (const mmq::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mmq::kExitConfig;
  } catch (const mmq::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return mmq::kExitInvariant;
  } catch (const mmq::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return mmq::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return mmq::kExitRuntime;
  }
}
