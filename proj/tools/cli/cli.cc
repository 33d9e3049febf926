#include "cli/cli.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli/commands.h"
#include "cli/run_config.h"
#include "spiro/error.h"

namespace spiro::cli {
namespace {

void AddInputs(CLI::App* cmd, RunConfig& c, bool needs_tables) {
  cmd->add_option("--cohort", c.cohort, "Cohort CSV");
  if (needs_tables) {
    cmd->add_option("--tables", c.tables, "Directory of coefficient tables");
  }
  cmd->add_option("--mapping", c.mapping,
                  "Race/ethnicity to group mapping (JSON); default uses the "
                  "cohort's group column or the NHANES categories");
  cmd->add_option("--schema", c.schema, "Column schema (JSON)");
  cmd->add_flag("!--no-adult-filter", c.adult_filter,
                "Keep participants outside ages 20-95");
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  RunConfig c;
  std::uint64_t seed = 0;
  double blend = 0.0;

  CLI::App app{"spiro: spirometry reference scoring, SDoH calibration and "
               "fairness audits"};
  app.set_config("--config", "",
                 "TOML/INI file supplying options; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  auto* seed_opt = app.add_option("--seed", seed, "Seed for stochastic steps");
  app.add_option("--threads", c.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--canonical", c.canonical,
               "Omit the provenance header (for byte-level comparisons)");

  auto* score = app.add_subcommand("score", "Score each participant against "
                                            "reference tables");
  AddInputs(score, c, true);
  score->add_option("--scores", c.scores,
                    "Comma list of references: specific, <group>, "
                    "<group>:pctpred, raw (default specific,pooled,naive)");
  score->add_option("--out", c.out, "Output file (default stdout)");

  auto* phi = app.add_subcommand("estimate-phi",
                                 "Estimate the implicit SDoH fraction");
  AddInputs(phi, c, true);
  phi->add_option("--group", c.groups, "Group(s) to calibrate")
      ->delimiter(',');
  phi->add_option("--privileged", c.privileged, "Privileged group label");
  phi->add_option("--pooled", c.pooled, "Pooled reference label");
  phi->add_option("--metric", c.metric, "z or pctpred")
      ->check(CLI::IsMember({"z", "pctpred"}));
  phi->add_option("--min-n", c.min_n, "Minimum participants per group");
  phi->add_flag("--weighted", c.weighted,
                "Use survey weights in the gap summary");
  phi->add_option("--curve-out", c.curve_out, "CSV of the objective curve");
  phi->add_option("--out", c.out, "Output file (default stdout)");

  auto* audit = app.add_subcommand("audit", "Fairness criteria panel");
  AddInputs(audit, c, true);
  audit->add_option("--scores", c.scores,
                    "Score definitions (default gli2012,gliglobal,raw)");
  audit->add_option("--criteria", c.criteria,
                    "all or a comma list of independence, separation, "
                    "sufficiency");
  audit->add_option("--outcome", c.outcomes, "Outcome, e.g. mortality@10");
  audit->add_option("--group-a", c.group_a, "First group");
  audit->add_option("--group-b", c.group_b, "Second group");
  audit->add_option("--replicates", c.replicates, "Bootstrap replicates");
  audit->add_option("--independence-tol", c.independence_tolerance,
                    "Correlation tolerance");
  audit->add_option("--separation-tol", c.separation_tolerance,
                    "Error-rate gap tolerance");
  audit->add_option("--rates-out", c.rates_out, "CSV of per-group rates");
  audit->add_option("--out", c.out, "Output file (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "AUC panel for outcomes");
  AddInputs(evaluate, c, true);
  evaluate->add_option("--scores", c.scores,
                       "Score definitions (default gli2012,gliglobal,naive)");
  evaluate->add_option("--outcomes", c.outcomes,
                       "Comma list of outcomes, e.g. mortality@10,dyspnea");
  evaluate->add_option("--replicates", c.replicates, "Bootstrap replicates");
  evaluate->add_option("--orientation", c.orientation,
                       "auto, higher or lower");
  evaluate->add_flag("!--no-at-risk-filter", c.at_risk_filter,
                     "Evaluate the whole cohort");
  evaluate->add_option("--out", c.out, "Output file (default stdout)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--spec", c.spec, "Synthetic cohort spec (JSON)");
  synth->add_option("--tables", c.tables,
                    "Ideal tables (default: spec, else built-in set)");
  synth->add_option("--out", c.out, "Output cohort CSV (default stdout)");

  auto* pool = app.add_subcommand("pool-tables",
                                  "Build pooled or blended tables");
  pool->add_option("--tables", c.tables, "Input table directory");
  pool->add_option("--group", c.groups, "Groups to pool, or the blend group")
      ->delimiter(',');
  pool->add_option("--weights", c.weights, "Pooling weights (default equal)")
      ->delimiter(',');
  pool->add_option("--label", c.label, "Group label of the result");
  auto* blend_opt = pool->add_option(
      "--blend", blend, "Blend M_k + phi (M_p - M_k) at this phi");
  pool->add_option("--privileged", c.privileged, "Privileged group (blend)");
  pool->add_option("--ls-from", c.ls_from,
                   "Group supplying L and S (blend; default privileged)");
  pool->add_option("--out", c.out, "Output table directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitConfig;
  }

  c.command = app.get_subcommands().front()->get_name();
  if (seed_opt->count() > 0) c.seed = seed;
  if (blend_opt->count() > 0) c.blend = blend;

  try {
    Validate(c);
    if (c.command == "score") {
      RunScore(c, out, err);
    } else if (c.command == "estimate-phi") {
      RunEstimatePhi(c, out, err);
    } else if (c.command == "audit") {
      RunAudit(c, out, err);
    } else if (c.command == "evaluate") {
      RunEvaluate(c, out, err);
    } else if (c.command == "synth") {
      RunSynth(c, out, err);
    } else {
      RunPoolTables(c, out, err);
    }
  } catch (const Error& e) {
    err << fmt::format("error [{}]: {}\n", e.module(), e.what());
    switch (e.kind()) {
      case ErrorKind::kConfig:
        return kExitConfig;
      case ErrorKind::kData:
        return kExitData;
      case ErrorKind::kNumerical:
        return kExitNumerical;
    }
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace spiro::cli
