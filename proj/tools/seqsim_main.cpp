#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "seqsim/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  long seed_override = -1;
  int threads_override = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration (json)")->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed_override, "override the configured seed");
  cmd->add_option("--threads", opts.threads_override, "override the configured thread count");
}

seqsim::RunConfig load(const CommonOpts& opts) {
  auto cfg = seqsim::load_run_config(opts.config_path);
  if (opts.seed_override >= 0)
    cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
  if (opts.threads_override > 0)
    cfg.threads = opts.threads_override;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"microsimulation of sequenced therapy strategies from published survival curves"};
  app.require_subcommand(1);

  CommonOpts reconstruct_opts, classify_opts, cif_opts, simulate_opts, calibrate_opts, ce_opts,
      run_all_opts;
  std::string simulate_strategy = "dct_first", calibrate_strategy = "dct_first";
  double theta = 1.0, omega = 1.0;

  auto* cmd_reconstruct =
      app.add_subcommand("reconstruct", "recover patient-level data from the digitized curves");
  add_common(cmd_reconstruct, reconstruct_opts);

  auto* cmd_classify =
      app.add_subcommand("classify", "split progression endpoints into progressions and deaths");
  add_common(cmd_classify, classify_opts);

  auto* cmd_cif = app.add_subcommand(
      "cif", "estimate cumulative incidence and per-cycle transition probabilities");
  add_common(cmd_cif, cif_opts);

  auto* cmd_simulate = app.add_subcommand("simulate", "simulate one strategy cohort");
  add_common(cmd_simulate, simulate_opts);
  cmd_simulate->add_option("--strategy", simulate_strategy, "dct_first or aa_first");
  cmd_simulate->add_option("--theta", theta, "dependence hazard ratio at progression time zero");
  cmd_simulate->add_option("--omega", omega, "cycle at which the dependence effect fades to 1");

  auto* cmd_calibrate =
      app.add_subcommand("calibrate", "fit the dependence parameters to the survival target");
  add_common(cmd_calibrate, calibrate_opts);
  cmd_calibrate->add_option("--strategy", calibrate_strategy, "dct_first or aa_first");

  auto* cmd_ce = app.add_subcommand("ce", "cost-effectiveness comparison of the two strategies");
  add_common(cmd_ce, ce_opts);

  auto* cmd_run_all = app.add_subcommand("run-all", "run every stage and write a manifest");
  add_common(cmd_run_all, run_all_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_reconstruct->parsed()) {
      seqsim::stage_reconstruct(load(reconstruct_opts), reconstruct_opts.out_dir);
    } else if (cmd_classify->parsed()) {
      seqsim::stage_classify(load(classify_opts), classify_opts.out_dir);
    } else if (cmd_cif->parsed()) {
      seqsim::stage_incidence(load(cif_opts), cif_opts.out_dir);
    } else if (cmd_simulate->parsed()) {
      auto cfg = load(simulate_opts);
      auto strat = seqsim::strategy_from_string(simulate_strategy);
      seqsim::stage_simulate(cfg, simulate_opts.out_dir, strat,
                             seqsim::DependenceParams(theta, omega));
    } else if (cmd_calibrate->parsed()) {
      auto cfg = load(calibrate_opts);
      auto strat = seqsim::strategy_from_string(calibrate_strategy);
      auto result = seqsim::stage_calibrate(cfg, calibrate_opts.out_dir, strat);
      std::printf("%s: theta=%.6f omega=%.6f sse=%.6g ks_p=%.4f%s\n",
                  seqsim::to_string(strat).c_str(), result.params.theta, result.params.omega,
                  result.sse, result.ks.p, result.converged ? "" : " (budget exhausted)");
    } else if (cmd_ce->parsed()) {
      seqsim::stage_ce(load(ce_opts), ce_opts.out_dir);
    } else if (cmd_run_all->parsed()) {
      auto result = seqsim::run_all(load(run_all_opts), run_all_opts.out_dir);
      if (!result.complete) {
        std::fprintf(stderr, "pipeline incomplete; see manifest.json\n");
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
