#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cover/cli.hpp"

namespace {

std::optional<cover::Box> parse_box(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  cover::Box b;
  if (!(in >> b.min.x >> b.min.y >> b.min.z >> b.max.x >> b.max.y >> b.max.z)) {
    throw cover::ConfigError("--workspace expects six numbers: xmin,ymin,zmin,xmax,ymax,zmax");
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = cover::cli;
  CLI::App app{"Safe coverage control on raw point clouds"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one trial");
  std::string run_scenario, run_out = ".", run_policy;
  std::uint64_t run_seed = 0;
  run->add_option("--scenario", run_scenario, "Scenario file (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--out", run_out, "Output directory");
  auto* policy_opt = run->add_option("--policy", run_policy, "proposed | greedy-density | pure-cvt");

  auto* batch = app.add_subcommand("batch", "Run paired-seed trials for several policies");
  cli::BatchArgs batch_args;
  std::string batch_scenario, batch_family, batch_out = ".";
  long long batch_trials = 30;
  auto* bs = batch->add_option("--scenario", batch_scenario, "Scenario file (JSON)");
  auto* bf = batch->add_option("--family", batch_family, "Built-in scenario family: u-trap | cluttered");
  batch->add_option("--trials", batch_trials, "Trials per policy");
  batch->add_option("--seed", batch_args.seed, "Base seed; trial k uses base + k");
  batch->add_option("--policies", batch_args.policies, "Comma-separated policy list")->delimiter(',');
  batch->add_option("--out", batch_out, "Output directory");

  auto* gen = app.add_subcommand("gen-env", "Generate an obstacle point cloud (xyz)");
  cli::GenEnvArgs gen_args;
  std::string gen_out, gen_workspace, gen_scenario;
  gen->add_option("--kind", gen_args.kind, "cluttered | u-trap | corridor | forest-like")->required();
  gen->add_option("--density", gen_args.density, "Points per cubic meter");
  gen->add_option("--seed", gen_args.seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output xyz path")->required();
  gen->add_option("--workspace", gen_workspace, "xmin,ymin,zmin,xmax,ymax,zmax (default 0,0,0,80,80,16)");
  gen->add_option("--scenario-out", gen_scenario, "Also write a runnable scenario file");

  auto* plot = app.add_subcommand("plot", "Render a scenario and trajectory as SVG");
  std::string plot_scenario, plot_traj, plot_plane = "xy", plot_out = "plot.svg";
  plot->add_option("--scenario", plot_scenario, "Scenario file (JSON)")->required();
  plot->add_option("--trajectory", plot_traj, "trajectory.csv from a run");
  plot->add_option("--plane", plot_plane, "xy | xz");
  plot->add_option("--out", plot_out, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run->parsed()) {
    std::optional<std::uint64_t> seed;
    if (seed_opt->count()) seed = run_seed;
    std::optional<std::string> policy;
    if (policy_opt->count()) policy = run_policy;
    return cli::cmd_run(run_scenario, seed, run_out, policy, std::cerr);
  }
  if (batch->parsed()) {
    if (bs->count()) batch_args.scenario = batch_scenario;
    if (bf->count()) batch_args.family = batch_family;
    if (batch_trials < 1) {
      std::cerr << "error: number of trials must be at least 1\n";
      return 1;
    }
    batch_args.trials = static_cast<std::size_t>(batch_trials);
    batch_args.out_dir = batch_out;
    return cli::cmd_batch(batch_args, std::cout, std::cerr);
  }
  if (gen->parsed()) {
    gen_args.out = gen_out;
    try {
      gen_args.workspace = parse_box(gen_workspace);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    if (!gen_scenario.empty()) gen_args.scenario_out = gen_scenario;
    return cli::cmd_gen_env(gen_args, std::cerr);
  }
  if (plot->parsed()) return cli::cmd_plot(plot_scenario, plot_traj, plot_plane, plot_out, std::cerr);
  return 1;
}
