// Prints the design and run tables for the two bundled models: dwell times and
// inter-transmission statistics under static and feedback thresholds.
//
//   reproduce_tables [horizon_seconds]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "dectrig.hpp"

using namespace dectrig;

namespace {

double ms(double s) { return s * 1e3; }

void print_run(const char* title, const SimulationTrace& tr) {
  const TraceSummary sum = summarize(tr);
  std::printf("\n%s (%s, %.0f s, %zu parameter updates)\n", title, to_string(tr.mode).c_str(), tr.horizon,
              sum.parameter_updates);
  std::printf("  sensor  count   T [ms]  min [ms]  mean [ms]  max [ms]  T/mean\n");
  for (const auto& s : sum.sensors) {
    if (s.count < 2) {
      std::printf("  %6zu  %5zu  %7.3f         -          -         -       -\n", s.sensor, s.count, ms(s.T_design));
      continue;
    }
    std::printf("  %6zu  %5zu  %7.3f  %8.3f  %9.3f  %8.3f  %6.3f\n", s.sensor, s.count, ms(s.T_design),
                ms(*s.min_gap), ms(*s.mean_gap), ms(*s.max_gap), *s.ratio);
  }
}

void print_cdf(const SimulationTrace& tr, std::size_t sensor) {
  const TraceSummary sum = summarize(tr, {0.1, 0.25, 0.5, 0.75, 0.9, 1.0});
  std::printf("  sensor %zu gap quantiles:", sensor);
  for (const auto& p : sum.sensors.at(sensor).cdf) std::printf("  %.2f->%.2f ms", p.fraction, ms(p.gap));
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    RunConfig cfg;
    if (argc > 1) cfg.horizon = io::parse_double(argv[1]);

    cfg.model = "batch_reactor";
    const Scenario br = build_scenario(cfg);
    std::printf("batch reactor design: sigma %.2f, W %.4f\n", br.sigma, br.config.W());
    std::printf("  sensor  theta      w         T [ms]\n");
    for (std::size_t i = 0; i < br.config.sensors.size(); ++i) {
      std::printf("  %6zu  %5.3f  %9.6f  %8.3f\n", i, br.theta[i], br.config.sensors[i].w,
                  ms(br.config.sensors[i].T));
    }
    const SimulationTrace br_tr = simulate(br, cfg);
    print_run("batch reactor", br_tr);
    print_cdf(br_tr, 0);

    cfg.model = "cubic_oscillator";
    const Scenario cu = build_scenario(cfg);
    std::printf("\ncubic oscillator design: c %.1f, sigma %.2f\n", cu.c, cu.sigma);
    std::printf("  sensor  theta      w         T [ms]\n");
    for (std::size_t i = 0; i < cu.config.sensors.size(); ++i) {
      std::printf("  %6zu  %5.3f  %9.6f  %8.3f\n", i, cu.theta[i], cu.config.sensors[i].w,
                  ms(cu.config.sensors[i].T));
    }
    const SimulationTrace st = simulate(cu, cfg);
    print_run("cubic oscillator, static thresholds", st);

    cfg.mode = TriggerMode::Feedback;
    const SimulationTrace fb = simulate(cu, cfg);
    print_run("cubic oscillator, feedback thresholds", fb);
    std::printf("  broadcasts:\n");
    for (const auto& u : fb.updates) {
      std::printf("    t %6.3f s  V %9.5f  T [ms] %7.3f %7.3f\n", u.t, u.V_sampled, ms(u.T[0]), ms(u.T[1]));
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  }
}
