#pragma once

// Invariant checks over the bundled models. Each check reports the measured
// quantity next to its tolerance. A fault can be injected into the designed
// triggers to confirm the checks catch it.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dectrig/controller_feedback.hpp"
#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/models.hpp"
#include "dectrig/riccati_tau.hpp"
#include "dectrig/scenario.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

inline nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name},
          {"passed", r.passed},
          {"measured", io::number(r.measured)},
          {"tolerance", io::number(r.tolerance)},
          {"detail", r.detail}};
}

enum class Fault { None, HalveT, DoubleW };

inline Fault parse_fault(const std::string& s) {
  if (s == "none") return Fault::None;
  if (s == "halve_T") return Fault::HalveT;
  if (s == "double_w") return Fault::DoubleW;
  throw ValidationError("unknown fault '" + s + "' (none | halve_T | double_w)");
}

inline TriggerConfig inject(TriggerConfig cfg, Fault f) {
  for (auto& s : cfg.sensors) {
    if (f == Fault::HalveT) s.T *= 0.5;
    if (f == Fault::DoubleW) s.w *= 2.0;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// individual checks, usable on any trace

/// Smallest observed gap minus the dwell in force, over all sensors. The
/// reference starts at `T_design` and follows the broadcasts recorded in the
/// trace. The first transmission of each sensor is measured against a
/// fictitious reference and is skipped.
inline CheckResult check_dwell(const std::string& name, const SimulationTrace& tr,
                               const Vector& T_design) {
  CheckResult r{name, true, kInfinity, 1e-9, ""};
  Vector T = T_design;
  std::vector<bool> seen(tr.n, false);
  std::size_t u = 0;
  for (const auto& e : tr.events) {
    // a broadcast at step k is applied after the triggers of step k
    while (u < tr.updates.size() && tr.updates[u].step < e.step) T = tr.updates[u++].T;
    if (!seen.at(e.sensor)) {
      seen[e.sensor] = true;
      continue;
    }
    const double margin = e.gap - T.at(e.sensor);
    if (margin < r.measured) {
      r.measured = margin;
      r.detail = "sensor " + std::to_string(e.sensor) + " at t = " + io::format_double(e.t);
    }
  }
  r.passed = r.measured >= -r.tolerance;
  return r;
}

/// Largest forward-difference excess over the certified decay, per second.
inline CheckResult check_decrease(const std::string& name, const SimulationTrace& tr,
                                  const LyapunovCertificate& cert) {
  CheckResult r{name, true, -kInfinity, 0.0, ""};
  if (tr.rows.empty()) return r;
  r.tolerance = 1e-6 * tr.rows.front().V;
  std::size_t violations = 0;
  for (const auto& row : tr.rows) {
    const double excess = row.Vdot - cert.decay_bound(row.x);
    if (excess > r.measured) r.measured = excess;
    if (excess > r.tolerance) ++violations;
  }
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " of " + std::to_string(tr.rows.size()) + " rows exceed";
  return r;
}

/// Distance of x outside the sphere and excess of V over the latched bound.
inline std::pair<CheckResult, CheckResult> check_containment(const SimulationTrace& tr,
                                                             const LyapunovCertificate& cert) {
  CheckResult sphere{"containment_sphere", true, -kInfinity, 1e-6, ""};
  CheckResult level{"containment_level", true, -kInfinity, 0.0, ""};
  if (tr.containment.size() != tr.rows.size()) {
    sphere.passed = level.passed = false;
    sphere.detail = level.detail = "containment log missing or misaligned";
    return {sphere, level};
  }
  for (std::size_t k = 0; k < tr.rows.size(); ++k) {
    const auto& c = tr.containment[k];
    const double out = norm2(tr.rows[k].x - c.center) - c.radius;
    sphere.measured = std::max(sphere.measured, out);
    level.measured = std::max(level.measured, cert.V(tr.rows[k].x) - c.V_sampled);
  }
  sphere.passed = sphere.measured <= sphere.tolerance;
  level.passed = level.measured <= level.tolerance;
  return {sphere, level};
}

/// 𝒱_s non-increasing, update gaps at least the dwell, thresholds
/// non-decreasing and dwells positive across broadcasts.
inline std::vector<CheckResult> check_updates(const SimulationTrace& tr, const UpdateSchedule& sched,
                                              double initial_level) {
  CheckResult mono{"update_level_monotone", true, 0.0, 0.0, ""};
  CheckResult gap{"update_gap_dwell", true, kInfinity, 1e-9, ""};
  CheckResult wmono{"update_threshold_monotone", true, 0.0, 0.0, ""};
  CheckResult tpos{"update_dwell_positive", true, kInfinity, 0.0, ""};
  double prev_level = initial_level;
  double prev_t = 0.0;
  Vector prev_w = tr.initial_config.w_values();
  for (const auto& u : tr.updates) {
    mono.measured = std::max(mono.measured, u.V_sampled - prev_level);
    gap.measured = std::min(gap.measured, u.t - prev_t - sched.dwell);
    for (std::size_t i = 0; i < u.w.size(); ++i) {
      wmono.measured = std::max(wmono.measured, prev_w[i] - u.w[i]);
      tpos.measured = std::min(tpos.measured, u.T[i]);
    }
    prev_level = u.V_sampled;
    prev_t = u.t;
    prev_w = u.w;
  }
  mono.passed = mono.measured <= 0.0;
  gap.passed = gap.measured >= -gap.tolerance;
  wmono.passed = wmono.measured <= 0.0;
  tpos.passed = tpos.measured > 0.0;
  const std::string n = std::to_string(tr.updates.size()) + " updates";
  mono.detail = gap.detail = wmono.detail = tpos.detail = n;
  return {mono, gap, wmono, tpos};
}

/// Exact equality of two event sequences (sensor, step).
inline CheckResult check_same_events(const std::string& name, const SimulationTrace& a,
                                     const SimulationTrace& b) {
  CheckResult r{name, true, 0.0, 0.0, ""};
  std::size_t mismatches = a.events.size() == b.events.size() ? 0 : 1;
  for (std::size_t k = 0; k < std::min(a.events.size(), b.events.size()); ++k) {
    if (a.events[k].sensor != b.events[k].sensor || a.events[k].step != b.events[k].step) ++mismatches;
  }
  r.measured = static_cast<double>(mismatches);
  r.passed = mismatches == 0;
  r.detail = std::to_string(a.events.size()) + " vs " + std::to_string(b.events.size()) + " events";
  return r;
}

/// Per-sensor sequences agree within `steps` integration steps and have equal
/// counts.
inline CheckResult check_events_within(const std::string& name, const SimulationTrace& a,
                                       const SimulationTrace& b, long steps) {
  CheckResult r{name, true, 0.0, static_cast<double>(steps), ""};
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto ea = a.events_of(i);
    const auto eb = b.events_of(i);
    if (ea.size() != eb.size()) {
      r.passed = false;
      r.detail = "sensor " + std::to_string(i) + ": " + std::to_string(ea.size()) + " vs " +
                 std::to_string(eb.size()) + " events";
      r.measured = kInfinity;
      return r;
    }
    for (std::size_t k = 0; k < ea.size(); ++k) {
      r.measured = std::max(r.measured, static_cast<double>(std::abs(ea[k].step - eb[k].step)));
    }
  }
  r.passed = r.measured <= r.tolerance;
  return r;
}

inline CheckResult check_tau_oracle(std::size_t samples, unsigned seed) {
  CheckResult r{"tau_closed_form_vs_numeric", true, 0.0, 1e-6, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < samples; ++k) {
    RiccatiCoefficients c{0.1 + 5.0 * u(rng), 10.0 * u(rng), 5.0 * u(rng)};
    if (k % 5 == 0) c.a2 = 0.0;
    if (k % 5 == 1) c.a2 = c.a1 * c.a1 / (4.0 * c.a0);
    const double w = 0.01 + 0.5 * u(rng);
    const double exact = tau(w, c);
    const auto num = tau_numeric(w, c, 1e-3 * w);
    const double rel = std::abs(num.time - exact) / exact;
    if (!num.converged || !(rel <= r.measured)) {
      if (!num.converged) {
        r.passed = false;
        r.detail = num.diagnostic;
      }
      r.measured = std::max(r.measured, num.converged ? rel : kInfinity);
    }
  }
  r.passed = r.passed && r.measured <= r.tolerance;
  if (r.detail.empty()) r.detail = std::to_string(samples) + " tuples";
  return r;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  Fault fault = Fault::None;
  double step = 1e-4;
  double horizon = 10.0;
};

inline std::vector<CheckResult> run_invariant_suite(const VerifyOptions& opt) {
  std::vector<CheckResult> out;

  // LTI design and linear algebra
  const LtiProblem br = batch_reactor();
  const LtiDesign d = design_lti(br.A, br.B, br.K, br.Q, br.theta, br.sigma);
  {
    const double res = lyapunov_residual(d.A_cl, br.Q, d.P);
    const double tol = 1e-10 * spectral_norm(br.Q);
    out.push_back({"lyapunov_residual", res <= tol, res, tol, "batch reactor"});
    out.push_back({"closed_loop_hurwitz", is_hurwitz(d.A_cl), 0.0, 0.0, "batch reactor"});
  }
  const TriggerConfig br_cfg = inject(d.config, opt.fault);
  auto threshold_check = [](const std::string& name, const TriggerConfig& cfg, const Vector& bound) {
    CheckResult r{name, true, 0.0, 0.0, ""};
    try {
      validate_thresholds(cfg.w_values(), bound);
      for (std::size_t i = 0; i < cfg.size(); ++i) {
        r.measured = std::max(r.measured, cfg.sensors[i].w - bound[i]);
        if (!(cfg.sensors[i].T > 0.0)) throw ValidationError("non-positive dwell");
      }
    } catch (const ValidationError& e) {
      r.passed = false;
      r.detail = e.what();
    }
    return r;
  };
  out.push_back(threshold_check("lti_thresholds_within_bound", br_cfg, d.w_bound));
  out.push_back(check_tau_oracle(200, 7));

  RunConfig base;
  base.step = opt.step;
  base.horizon = opt.horizon;

  // LTI runs
  {
    Scenario s = build_scenario(base);
    s.config = br_cfg;
    const SimulationTrace dec = simulate(s, base);
    out.push_back(check_dwell("lti_min_gap_respects_dwell", dec, d.config.T_values()));
    out.push_back(check_decrease("lti_lyapunov_decrease", dec, s.cert));

    RunConfig cen = base;
    cen.mode = TriggerMode::Centralized;
    cen.centralized_dwell = true;
    const SimulationTrace with = simulate(s, cen);
    cen.centralized_dwell = false;
    const SimulationTrace without = simulate(s, cen);
    out.push_back(check_same_events("centralized_dwell_equivalence", with, without));

    RunConfig scaled = base;
    scaled.scale = 1e3;
    Scenario s2 = build_scenario(scaled);
    s2.config = br_cfg;
    out.push_back(check_events_within("lti_scale_invariance", dec, simulate(s2, scaled), 1));
  }

  // nonlinear model
  const NonlinearProblem np = cubic_oscillator();
  {
    const double v0 = np.cert.V(np.x0);
    out.push_back({"cubic_initial_level", std::abs(v0 - 8.574) <= 1e-3, v0, 1e-3, "V(x0)"});
    const Vector bound = evaluate_bounds(np.cert, np.c);
    TriggerConfig cfg = inject(design_nonlinear(np.cert, np.lip, np.c), opt.fault);
    out.push_back(threshold_check("cubic_thresholds_within_bound", cfg, bound));

    RunConfig nl = base;
    nl.model = "cubic_oscillator";
    Scenario s = build_scenario(nl);
    const Vector T_design = s.config.T_values();
    s.config = cfg;
    const SimulationTrace st = simulate(s, nl);
    out.push_back(check_dwell("cubic_min_gap_respects_dwell", st, T_design));
    out.push_back(check_decrease("cubic_lyapunov_decrease", st, s.cert));

    // the controller itself rejects inconsistent thresholds; report that as a check
    nl.mode = TriggerMode::Feedback;
    SimulationTrace fb;
    try {
      fb = simulate(s, nl);
    } catch (const Error& e) {
      out.push_back({"feedback_run_completed", false, 0.0, 0.0, e.what()});
      return out;
    }
    out.push_back({"feedback_run_completed", true, 0.0, 0.0, ""});
    out.push_back(check_dwell("feedback_min_gap_respects_dwell", fb, T_design));
    auto [sphere, level] = check_containment(fb, s.cert);
    out.push_back(sphere);
    out.push_back(level);
    for (auto& c : check_updates(fb, {nl.update_dwell, nl.rho}, s.c)) out.push_back(c);
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace dectrig
