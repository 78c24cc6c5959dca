// trasonet: simulate | estimate | recommend | ahp
#include "trasonet/harness.hpp"

#include <iostream>

#include "CLI11.hpp"

int main(int argc, char **argv)
{
  using namespace trasonet;

  CLI::App app{"TrasoNET traffic-dependent network access simulator"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto *simulate = app.add_subcommand("simulate", "Run the end-to-end simulation");
  simulate->add_option("--config", sim.config_path, "Scenario JSON (default: built-in desk scenario)");
  simulate->add_option("--seed", sim.seed, "Override rng_seed");
  simulate->add_option("--mode", sim.mode, "baseline | trasonet | both")
      ->check(CLI::IsMember({"baseline", "trasonet", "both"}));
  simulate->add_option("--replicas", sim.replicas, "Independent seeds seed..seed+N-1, run concurrently")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output directory");

  EstimateOptions est;
  auto *estimate = app.add_subcommand("estimate", "Build and complete a traffic matrix");
  estimate->add_option("--reports", est.reports_path, "GPS reports CSV");
  estimate->add_flag("--synthetic", est.synthetic, "Use a synthetic low-rank matrix instead of reports");
  estimate->add_option("--config", est.config_path, "Scenario JSON giving the road network for --reports");
  estimate->add_option("--rows", est.rows, "Synthetic rows");
  estimate->add_option("--cols", est.cols, "Synthetic columns");
  estimate->add_option("--rank", est.rank, "Synthetic true rank");
  estimate->add_option("--sample-rate", est.sample_rate, "Synthetic sampling probability");
  estimate->add_option("--seed", est.seed, "Seed");
  estimate->add_option("--trials", est.trials, "Seeds averaged per sample rate")->check(CLI::PositiveNumber);
  estimate->add_option("--sweep", est.sweep, "e.g. sample_rate=0.1,0.2,0.3,0.4,0.5");
  estimate->add_option("--target-rank", est.target_rank, "Completion rank");
  estimate->add_option("--max-iter", est.max_iterations, "Completion sweeps");
  estimate->add_option("--tol", est.tol, "Completion convergence tolerance");
  estimate->add_option("--out", est.out, "Output directory");

  RecommendOptions rec;
  auto *recommend = app.add_subcommand("recommend", "Write the per-cell network recommendation map");
  recommend->add_option("--config", rec.config_path, "Scenario JSON (default: built-in default scenario)");
  recommend->add_option("--estimate", rec.estimate_path, "Traffic estimate CSV");
  recommend->add_flag("--fresh", rec.fresh, "Sense and complete the traffic matrix now");
  recommend->add_option("--seed", rec.seed, "Override rng_seed");
  recommend->add_option("--out", rec.out, "Output directory");

  AhpOptions ahp;
  auto *ahp_cmd = app.add_subcommand("ahp", "Priority vector and consistency of a comparison matrix");
  ahp_cmd->add_option("matrix", ahp.matrix_path, "Square reciprocal matrix CSV")->required();
  ahp_cmd->add_flag("--json", ahp.json, "Print JSON");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return kExitParse;
  }

  if (*simulate)
    return cmd_simulate(sim, std::cerr);
  if (*estimate)
    return cmd_estimate(est, std::cerr);
  if (*recommend)
    return cmd_recommend(rec, std::cerr);
  return cmd_ahp(ahp, std::cout, std::cerr);
}
