// Command-line front end for the cross curvature flow laboratory.

#include <iostream>
#include <locale>

#include <CLI11.hpp>

#include "xcflab/experiment.hpp"

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());

  CLI::App app{"xcflab: cross curvature flow laboratory"};
  app.require_subcommand(1);

  xcflab::ExperimentConfig cfg;
  std::string config_path;

  CLI::App* sim = app.add_subcommand("simulate", "integrate a flow and write CSV/JSON");
  sim->add_option("--flow", cfg.flow, "xcf|kxcf|nxcf|dxcf|rf|knrf")->capture_default_str();
  sim->add_option("--K", cfg.K, "normalization constant (< 0)")->capture_default_str();
  sim->add_option("--perturb", cfg.perturb, "perturbation magnitude")->capture_default_str();
  sim->add_option("--seed", cfg.seed, "perturbation seed")->capture_default_str();
  sim->add_option("--t-end", cfg.t_end, "integration horizon")->capture_default_str();
  sim->add_option("--tol", cfg.tol, "integrator tolerance")->capture_default_str();
  sim->add_option("--out-csv", cfg.out_csv, "trajectory CSV path");

  CLI::App* lin = app.add_subcommand("linearize", "restricted Jacobian at the fixed point");
  lin->add_option("--flow", cfg.flow)->capture_default_str();
  lin->add_option("--K", cfg.K)->capture_default_str();

  CLI::App* ver = app.add_subcommand("verify", "chart verification suites");
  ver->add_option("--suite", cfg.suite, "koiso|quadratic|linearization|chart")->capture_default_str();
  ver->add_option("--grid", cfg.grid_n, "nodes per axis (odd, >= 17)")->capture_default_str();
  ver->add_option("--grid-l", cfg.grid_l, "cube half-width")->capture_default_str();
  ver->add_option("--cases", cfg.cases, "number of seeded cases")->capture_default_str();
  ver->add_option("--seed", cfg.seed)->capture_default_str();
  ver->add_option("--K", cfg.K)->capture_default_str();

  CLI::App* rsc = app.add_subcommand("rescale-check", "space-time rescaling equivalence");
  rsc->add_option("--perturb", cfg.perturb)->capture_default_str();
  rsc->add_option("--cases", cfg.cases)->capture_default_str();
  rsc->add_option("--seed", cfg.seed)->capture_default_str();
  rsc->add_option("--K", cfg.K)->capture_default_str();
  rsc->add_option("--tol", cfg.tol)->capture_default_str();

  CLI::App* spm = app.add_subcommand("spectrum", "principal-symbol matrix spectrum");
  spm->add_option("--lam11", cfg.lam[0])->capture_default_str();
  spm->add_option("--lam22", cfg.lam[1])->capture_default_str();
  spm->add_option("--lam33", cfg.lam[2])->capture_default_str();
  spm->add_option("--lam12", cfg.lam[3])->capture_default_str();
  spm->add_option("--lam13", cfg.lam[4])->capture_default_str();
  spm->add_option("--lam23", cfg.lam[5])->capture_default_str();

  for (CLI::App* sub : {sim, lin, ver, rsc, spm}) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--out-json", cfg.out_json, "summary JSON path (default stdout)");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = sim->parsed() ? sim
                   : lin->parsed() ? lin
                   : ver->parsed() ? ver
                   : rsc->parsed() ? rsc
                                   : spm;
  // Config file supplies values not given on the command line: load the file
  // over defaults, then re-apply every option the user actually passed.
  if (!config_path.empty()) {
    try {
      xcflab::ExperimentConfig merged;
      xcflab::load_config_file(config_path, merged);
      merged.out_json = cfg.out_json.empty() ? merged.out_json : cfg.out_json;
      static const std::pair<const char*, const char*> overrides[] = {
          {"--flow", "flow"},     {"--K", "K"},         {"--perturb", "perturb"},
          {"--seed", "seed"},     {"--t-end", "t_end"}, {"--tol", "tol"},
          {"--out-csv", "out_csv"}, {"--suite", "suite"}, {"--grid", "grid"},
          {"--grid-l", "grid_l"}, {"--cases", "cases"}, {"--lam11", "lam11"},
          {"--lam22", "lam22"},   {"--lam33", "lam33"}, {"--lam12", "lam12"},
          {"--lam13", "lam13"},   {"--lam23", "lam23"}};
      for (const auto& [flag, key] : overrides) {
        const CLI::Option* opt = active->get_option_no_throw(flag);
        if (opt && opt->count() > 0)
          xcflab::apply_config_entry(key, opt->results().front(), merged);
      }
      cfg = merged;
    } catch (const std::exception& e) {
      std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}\n";
      return xcflab::kExitValidation;
    }
  }

  cfg.command = active == sim ? "simulate"
              : active == lin ? "linearize"
              : active == ver ? "verify"
              : active == rsc ? "rescale-check"
                              : "spectrum";

  return xcflab::run_experiment(cfg, std::cout, std::cerr);
}
