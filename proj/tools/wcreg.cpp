#include "wcreg/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
  using wcreg::cli::RunOptions;
  CLI::App app{"wcreg: weakly convex regularisation experiments"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string config, out = "out", trace, phantom_kind;
  std::uint64_t seed = 0;
  std::size_t phantom_n = 0;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config)
      sub->add_option("--config", config, "config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
  };

  auto* solve = app.add_subcommand("solve", "primal-dual reconstruction with per-iteration diagnostics");
  common(solve, true);
  solve->add_flag("--override-constraints", opt.override_constraints,
                  "run even when the step sizes violate the descent conditions");
  auto* regpath = app.add_subcommand("regpath", "solve along a vanishing-noise schedule");
  common(regpath, true);
  auto* train = app.add_subcommand("train-toy", "train the learned regulariser on the two-arm spiral");
  common(train, true);
  auto* counter = app.add_subcommand("counterexample", "critical-point tables for the unbounded constructions");
  common(counter, true);
  auto* diagnose = app.add_subcommand("diagnose", "recompute certificates from a trace CSV");
  diagnose->add_option("trace", trace, "trace.csv written by solve")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--out", out, "output directory")->capture_default_str();
  auto* phantom = app.add_subcommand("phantom", "write a test image");
  common(phantom, true);
  phantom->add_option("--kind", phantom_kind, "discs, bars or mini-shepp");
  phantom->add_option("-n", phantom_n, "image side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wcreg::cli::kExitConfig;
  }

  opt.command = app.get_subcommands().front()->get_name();
  if (!config.empty())
    opt.config = config;
  opt.out = out;
  opt.trace = trace;
  for (auto* sub : app.get_subcommands()) {
    if (auto* o = sub->get_option_no_throw("--seed"); o && o->count())
      opt.seed = seed;
    if (sub == phantom) {
      if (sub->count("--kind"))
        opt.phantom_kind = phantom_kind;
      if (sub->count("-n"))
        opt.phantom_n = phantom_n;
    }
  }
  return wcreg::cli::run(opt);
}
