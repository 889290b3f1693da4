#include <CLI11.hpp>

#include "eft/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional 1|1 Euclidean field theory toolkit"};
  app.require_subcommand(1);
  eft::cli::RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "validation tolerance");
    sub->add_option("--seed", cfg.seed, "seed for randomized suites");
  };

  auto* verify = app.add_subcommand("verify", "validate a family file");
  verify->add_option("family", cfg.input, "family JSON")->required();
  add_common(verify);

  auto* extract = app.add_subcommand("extract", "family -> cocycle");
  extract->add_option("family", cfg.input, "family JSON")->required();
  extract->add_option("--min-margin", cfg.min_margin, "resolvent gap margin");
  extract->add_option("--p-max", cfg.p_max, "maximal subdivision depth");
  extract->add_option("-o,--output", cfg.output, "cocycle JSON output");
  add_common(extract);

  auto* synth = app.add_subcommand("synth", "cocycle -> family");
  synth->add_option("cocycle", cfg.input, "cocycle JSON (single simplex)")
      ->required();
  synth->add_option("--m", cfg.m, "grid resolution");
  synth->add_option("-o,--output", cfg.output, "family JSON output");
  add_common(synth);

  auto* deform = app.add_subcommand("deform", "sector scan of the deformation");
  deform->add_option("family", cfg.input, "family JSON")->required();
  deform->add_option("--s-grid", cfg.s_grid, "lo:hi:step");
  deform->add_option("--report", cfg.report_path, "CSV report file");
  add_common(deform);

  auto* sd = app.add_subcommand("sd", "dump subdivision words and affine maps");
  sd->add_option("--k", cfg.k, "simplex dimension")->required();
  sd->add_option("--p", cfg.p, "subdivision depth")->required();
  sd->add_option("--csv", cfg.csv_path, "CSV output file");

  auto* spectrum = app.add_subcommand("spectrum", "per-point spectra of A(1)");
  spectrum->add_option("family", cfg.input, "family JSON")->required();
  spectrum->add_option("--csv", cfg.csv_path, "CSV output file");

  CLI11_PARSE(app, argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();
  return eft::cli::run(cfg);
}
