// ssm-resolve: command-line front end. Parsing only; work happens in ssmr::run.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ssmr/cli.hpp"

namespace {

void add_system(CLI::App* sub, ssmr::RunConfig& c) {
  sub->add_option("--system", c.system, "system file (ssmr-system/1 JSON)")->required();
  sub->add_option("--mode", c.mode, "master pair, 1 = slowest decaying")->check(CLI::PositiveNumber);
}

void add_sigma(CLI::App* sub, ssmr::RunConfig& c) {
  sub->add_option("--sigma", c.sigma, "order up to which non-resonance is checked");
  sub->add_flag("--full-sigma", c.full_sigma, "check non-resonance up to the full spectral quotient");
}

}  // namespace

int main(int argc, char** argv) {
  ssmr::RunConfig c;
  CLI::App app{"Spectral-submanifold reduction of forced mechanical systems", "ssm-resolve"};
  app.set_version_flag("--version", std::string(ssmr::kToolVersion));
  app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  app.require_subcommand(1);

  app.add_option("--jobs", c.jobs, "worker threads for parallel maps")->check(CLI::PositiveNumber);
  app.add_option("--seed", c.seed, "seed for randomized residual sampling");
  app.add_flag("--quiet", c.quiet, "suppress the summary on stdout");
  auto& t = c.tol;
  app.add_option("--tol-nonres", t.nonresonance, "relative non-resonance tolerance");
  app.add_option("--tol-cond", t.condition, "maximum eigenvector condition number");
  app.add_option("--tol-resonance", t.internal_resonance, "relative internal-resonance tolerance");
  app.add_option("--tol-forcing", t.near_resonance, "absolute forced near-resonance tolerance");
  app.add_option("--tol-fold", t.fold, "fold-degenerate eigenvalue tolerance");
  app.add_option("--tol-g", t.g, "frequency iteration tolerance on |G|");
  app.add_option("--tol-residual", t.residual, "accepted zero-problem residual");
  app.add_option("--tol-cauchy", t.cauchy, "root trajectory Cauchy tolerance");
  app.add_option("--tol-radius", t.radius, "non-spurious radius fraction");
  app.add_option("--tol-steady", t.steady, "steady-state relative amplitude change");
  app.add_option("--tol-rk-rel", t.rk_rel, "explicit integrator relative tolerance");
  app.add_option("--tol-rk-abs", t.rk_abs, "explicit integrator absolute tolerance");

  auto* analyze = app.add_subcommand("analyze", "modal analysis, non-resonance check and autonomous SSM");
  add_system(analyze, c);
  add_sigma(analyze, c);
  analyze->add_option("--order", c.order, "expansion order 2M+1");
  analyze->add_option("--samples", c.samples, "random residual samples");
  analyze->add_option("--sample-radius", c.sample_radius, "polydisk radius for residual samples");
  analyze->add_option("--out", c.out, "analysis JSON");
  analyze->add_option("--dump-ssm", c.dump_ssm, "coefficient dump (text)");

  auto* frc = app.add_subcommand("frc", "forced response curve of the reduced model");
  add_system(frc, c);
  add_sigma(frc, c);
  frc->add_option("--eps", c.eps, "forcing amplitude")->required();
  frc->add_option("--order", c.order, "expansion order 2M+1");
  frc->add_option("--forced-terms", c.forced_terms, "rho^(2i) forcing corrections kept (default: all)");
  frc->add_option("--rho-max", c.rho_max, "largest rho on the grid");
  frc->add_option("--n-rho", c.n_rho, "rho grid points");
  frc->add_option("--omega-min", c.omega_min, "discard points below this frequency");
  frc->add_option("--omega-max", c.omega_max, "discard points above this frequency");
  frc->add_option("--monitor", c.monitor, "'tip', a state index, or 'none'");
  frc->add_option("--n-phi", c.n_phi, "phase samples for the physical amplitude (>= 256)");
  frc->add_option("--out", c.out, "FRC CSV")->required();
  frc->add_option("--svg", c.svg, "amplitude plot");

  auto* isola = app.add_subcommand("isola", "roots of a(rho), spurious-root screening and isola criterion");
  add_system(isola, c);
  add_sigma(isola, c);
  isola->add_option("--orders", c.orders, "M range, e.g. 1..25");
  isola->add_option("--eps", c.eps, "forcing amplitude for the fold and merger report");
  isola->add_option("--out", c.out, "isola JSON")->required();
  isola->add_option("--roots-svg", c.roots_svg, "complex-plane root plot");

  auto* verify = app.add_subcommand("verify", "steady-state frequency sweep of the full system");
  add_system(verify, c);
  verify->add_option("--eps", c.eps, "forcing amplitude")->required();
  verify->add_option("--omega", c.omega_grid, "grid start:end:count")->required();
  verify->add_option("--monitor", c.monitor, "'tip' or a comma list of state indices");
  verify->add_option("--sweep", c.sweep, "up, down (warm start) or none (independent, parallel)");
  verify->add_option("--integrator", c.integrator, "auto, rk45 or etd");
  verify->add_option("--transient-factor", c.transient_factor, "transient length in units of 1/|Re lambda_1|");
  verify->add_option("--min-periods", c.min_periods, "measured periods before convergence is accepted");
  verify->add_option("--max-periods", c.max_periods, "measured periods before giving up");
  verify->add_option("--divergence-bound", c.divergence_bound, "amplitude treated as divergence");
  verify->add_option("--out", c.out, "sweep CSV")->required();

  auto* beam = app.add_subcommand("beam", "cantilever beam with tip nonlinearities");
  beam->add_option("--params", c.params, "beam parameter JSON (defaults when omitted)");
  beam->add_option("--elements", c.elements, "number of elements (overrides the parameter file)");
  beam->add_option("--mode", c.mode, "master pair used for the header eigenvalues")->check(CLI::PositiveNumber);
  beam->add_option("--out", c.out, "system file")->required();

  for (auto* sub : {analyze, frc, isola, verify, beam}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ssmr::exit_code(ssmr::ErrorKind::invalid_input);
  }
  c.command = app.get_subcommands().front()->get_name();
  return ssmr::run(c);
}
