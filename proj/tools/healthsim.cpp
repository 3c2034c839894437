#include <iostream>

#include <CLI11.hpp>

#include "run.hpp"

int main(int argc, char** argv) {
  using namespace healthsim;
  CLI::App app{"Health economic simulation: cohort, individual and partitioned survival models"};
  app.set_version_flag("--version", std::string(HEALTHSIM_VERSION));
  app.require_subcommand(1);

  cli::RunOptions run;
  unsigned threads = default_threads();
  uint64_t seed = 0;
  auto* sim = app.add_subcommand("simulate", "run a model configuration");
  sim->add_option("--config", run.config, "JSON model configuration")->required()->check(CLI::ExistingFile);
  sim->add_option("--out-dir", run.out_dir, "directory for result tables");
  auto* seed_opt = sim->add_option("--seed", seed, "random seed (overrides the config)");
  sim->add_option("--threads", threads, "worker threads (results do not depend on this)")->check(CLI::PositiveNumber);

  cli::CeaOptions ce;
  std::string config, k;
  int comparator = 1;
  double drq = 0, drc = 0, icer_k = 0;
  auto* cea = app.add_subcommand("cea", "cost-effectiveness analysis of simulated CE tables");
  auto* cfg_opt = cea->add_option("--config", config, "JSON configuration with a 'cea' section")->check(CLI::ExistingFile);
  cea->add_option("--ce-dir", ce.ce_dir, "directory holding ce_costs.csv and ce_qalys.csv")->required();
  cea->add_option("--out-dir", ce.out_dir, "directory for result tables");
  auto* k_opt = cea->add_option("--k", k, "willingness-to-pay grid: from:to:by or a comma list");
  auto* cmp_opt = cea->add_option("--comparator", comparator, "comparator strategy_id");
  auto* drq_opt = cea->add_option("--dr-qalys", drq, "QALY discount rate");
  auto* drc_opt = cea->add_option("--dr-costs", drc, "cost discount rate");
  auto* ik_opt = cea->add_option("--icer-k", icer_k, "willingness to pay for the ICER table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      run.threads = threads;
      if (*seed_opt) run.seed = seed;
      cli::run_simulate(run);
    } else {
      if (*cfg_opt) ce.config = config;
      if (*k_opt) ce.k = cli::parse_k_list(k);
      if (*cmp_opt) ce.comparator = comparator;
      if (*drq_opt) ce.dr_qalys = drq;
      if (*drc_opt) ce.dr_costs = drc;
      if (*ik_opt) ce.icer_k = icer_k;
      cli::run_cea(ce);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
