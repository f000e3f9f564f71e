// dectrig: design event triggers, simulate, verify invariants, run sweeps.
//
// Exit codes: 0 ok, 1 validation, 2 numerical failure, 3 I/O.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dectrig.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> model, mode, out, fault;
  std::optional<double> step, horizon, scale, sigma, c, update_dwell, rho;
  std::optional<std::vector<double>> theta;
  std::optional<std::size_t> log_stride;
  bool no_centralized_dwell = false;
};

void add_flags(CLI::App* sub, Flags& f, bool with_config) {
  if (with_config) sub->add_option("--config", f.config, "JSON run configuration; flags override it");
  sub->add_option("--model", f.model, "batch_reactor, cubic_oscillator or an LTI model file");
  sub->add_option("--mode", f.mode, "decentralized | centralized | feedback");
  sub->add_option("--step", f.step, "integration step [s]");
  sub->add_option("--horizon", f.horizon, "simulated time [s]");
  sub->add_option("--scale", f.scale, "multiply x0 and xs0 by this factor");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--sigma", f.sigma, "decay margin sigma in (0,1)");
  sub->add_option("--theta", f.theta, "per-sensor budget split")->delimiter(',');
  sub->add_option("--c", f.c, "level set of the nonlinear certificate");
  sub->add_option("--update-dwell", f.update_dwell, "feedback: minimum time between broadcasts [s]");
  sub->add_option("--rho", f.rho, "feedback: required decay of the bound between broadcasts");
  sub->add_option("--log-stride", f.log_stride, "log every k-th step");
  sub->add_flag("--no-centralized-dwell", f.no_centralized_dwell,
                "centralized mode: check the trigger without waiting T_i");
}

dectrig::RunConfig resolve(const Flags& f, bool read_config) {
  dectrig::RunConfig cfg;
  if (read_config && !f.config.empty()) dectrig::apply_json(cfg, dectrig::io::read_json_file(f.config));
  if (f.model) cfg.model = *f.model;
  if (f.mode) cfg.mode = dectrig::parse_mode(*f.mode);
  if (f.step) cfg.step = *f.step;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.scale) cfg.scale = *f.scale;
  if (f.out) cfg.out = *f.out;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.theta) cfg.theta = *f.theta;
  if (f.c) cfg.c = *f.c;
  if (f.update_dwell) cfg.update_dwell = *f.update_dwell;
  if (f.rho) cfg.rho = *f.rho;
  if (f.log_stride) cfg.log_stride = *f.log_stride;
  if (f.no_centralized_dwell) cfg.centralized_dwell = false;
  if (f.fault) cfg.fault = *f.fault;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized event-triggered control: design, simulation and verification"};
  app.require_subcommand(1);

  Flags design_f, sim_f, verify_f, sweep_f;
  auto* design = app.add_subcommand("design", "compute thresholds w_i and dwells T_i");
  add_flags(design, design_f, true);
  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write traces");
  add_flags(simulate, sim_f, true);
  auto* verify = app.add_subcommand("verify", "run the invariant suite on the bundled models");
  add_flags(verify, verify_f, true);
  verify->add_option("--fault", verify_f.fault, "inject a fault: none | halve_T | double_w");
  auto* sweep = app.add_subcommand("sweep", "run many simulations concurrently");
  add_flags(sweep, sweep_f, false);
  sweep->add_option("--config", sweep_f.config, "sweep file {base, runs, jobs}")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*design) return dectrig::app::cmd_design(resolve(design_f, true), std::cout, design_f.out.has_value());
    if (*simulate) return dectrig::app::cmd_simulate(resolve(sim_f, true), std::cout);
    if (*verify) return dectrig::app::cmd_verify(resolve(verify_f, true), std::cout, verify_f.out.has_value());
    if (*sweep) {
      const auto doc = dectrig::io::read_json_file(sweep_f.config);
      return dectrig::app::cmd_sweep(doc, resolve(sweep_f, false), std::cout);
    }
  } catch (const dectrig::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
