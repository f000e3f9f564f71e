// Acceptance suite: one PASS/FAIL line per criterion for the batch-reactor
// and cubic-oscillator reference runs at h = 1e-4.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dectrig.hpp"

using namespace dectrig;

namespace {

int failures = 0;

void report(int id, const std::string& what, bool ok, const std::string& detail) {
  std::printf("%s  criterion %2d  %s  [%s]\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

bool within_rel(double v, double ref, double rel) { return std::abs(v - ref) <= rel * std::abs(ref); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr double kStep = 1e-4;
constexpr double kEps = 1e-9;  // roundoff in k*h timestamps

RunConfig config(const std::string& model, TriggerMode mode) {
  RunConfig c;
  c.model = model;
  c.mode = mode;
  c.step = kStep;
  return c;
}

void criterion_1() {
  LtiDesign d;
  const double dt = seconds([&] {
    const LtiProblem p = batch_reactor();
    d = design_lti(p.A, p.B, p.K, p.Q, p.theta, p.sigma);
  });
  const double ref[] = {11.0, 15.4, 12.6, 19.9};
  bool ok = dt < 1.0;
  std::ostringstream os;
  os << "T [ms] =";
  for (int i = 0; i < 4; ++i) {
    const double T = d.config.sensors[i].T * 1e3;
    ok = ok && within_rel(T, ref[i], 0.05);
    os << ' ' << fmt("%.3f", T);
  }
  os << ", design " << fmt("%.4f", dt) << " s";
  report(1, "batch reactor dwells", ok, os.str());
}

void criterion_2(const SimulationTrace& tr) {
  const TraceSummary s = summarize(tr);
  const double mean_ref[] = {24.9, 27.7, 34.5, 34.2};
  const double ratio_ref[] = {0.44, 0.55, 0.36, 0.58};
  bool ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& ss = s.sensors[i];
    if (!ss.min_gap) {
      ok = false;
      continue;
    }
    const bool min_ok = *ss.min_gap >= ss.T_design - kEps && *ss.min_gap <= ss.T_design + kStep + kEps;
    ok = ok && min_ok && within_rel(*ss.mean_gap * 1e3, mean_ref[i], 0.15) &&
         std::abs(*ss.ratio - ratio_ref[i]) <= 0.08;
    os << (i ? "; " : "") << "s" << i + 1 << " min-T " << fmt("%.2e", *ss.min_gap - ss.T_design)
       << " mean " << fmt("%.2f", *ss.mean_gap * 1e3) << " ms ratio " << fmt("%.3f", *ss.ratio);
  }
  report(2, "batch reactor gaps", ok, os.str());
}

void criterion_3(const Scenario& s) {
  const double w_ref[] = {0.0045, 0.0832};
  const double T_ref[] = {4.0, 3.4};
  bool ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& st = s.config.sensors[i];
    ok = ok && within_rel(st.w, w_ref[i], 0.05) && within_rel(st.T * 1e3, T_ref[i], 0.10);
    os << (i ? "; " : "") << "w" << i + 1 << " " << fmt("%.5f", st.w) << " T" << i + 1 << " "
       << fmt("%.3f", st.T * 1e3) << " ms";
  }
  report(3, "cubic oscillator design", ok, os.str());
}

void criterion_4(const Scenario& s, const SimulationTrace& tr) {
  const double v0 = s.cert.V(s.x0);
  const TraceSummary sum = summarize(tr);
  const double count_ref[] = {2366, 382};
  const double mean_ref[] = {4.2, 26.2};
  bool ok = std::abs(v0 - 8.574) <= 1e-3;
  std::ostringstream os;
  os << "V(x0) " << fmt("%.4f", v0);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& ss = sum.sensors[i];
    ok = ok && ss.mean_gap && within_rel(static_cast<double>(ss.count), count_ref[i], 0.15) &&
         within_rel(*ss.mean_gap * 1e3, mean_ref[i], 0.15);
    os << "; s" << i + 1 << " count " << ss.count << " mean "
       << fmt("%.2f", ss.mean_gap.value_or(NAN) * 1e3) << " ms";
  }
  report(4, "cubic oscillator static run", ok, os.str());
}

void criterion_5(const SimulationTrace& tr) {
  const TraceSummary sum = summarize(tr);
  const double count_ref[] = {198, 322};
  const double min_ref[] = {4.2e-3, 9e-3};
  const double mean_ref[] = {50.5, 31.1};
  const auto updates = static_cast<long>(sum.parameter_updates);
  bool ok = std::abs(updates - 16) <= 3;
  std::ostringstream os;
  os << "updates " << updates;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& ss = sum.sensors[i];
    ok = ok && ss.min_gap && within_rel(static_cast<double>(ss.count), count_ref[i], 0.20) &&
         *ss.min_gap >= min_ref[i] - kStep - kEps && within_rel(*ss.mean_gap * 1e3, mean_ref[i], 0.20);
    os << "; s" << i + 1 << " count " << ss.count << " min " << fmt("%.2f", ss.min_gap.value_or(NAN) * 1e3)
       << " ms mean " << fmt("%.2f", ss.mean_gap.value_or(NAN) * 1e3) << " ms";
  }
  report(5, "feedback run", ok, os.str());
}

void criterion_6(const Scenario& br, const SimulationTrace& br_tr, const Scenario& cu,
                 const SimulationTrace& cu_tr) {
  const CheckResult a = check_decrease("lti", br_tr, br.cert);
  const CheckResult b = check_decrease("cubic", cu_tr, cu.cert);
  report(6, "Lyapunov decrease", a.passed && b.passed,
         "lti " + a.detail + " (max excess " + fmt("%.3e", a.measured) + "), cubic " + b.detail +
             " (max excess " + fmt("%.3e", b.measured) + ")");
}

void criterion_7(const SimulationTrace& base) {
  bool ok = true;
  std::ostringstream os;
  std::vector<SimulationTrace> traces;
  for (double b : {1e-3, 1e3}) {
    RunConfig c = config("batch_reactor", TriggerMode::Decentralized);
    c.scale = b;
    traces.push_back(simulate(build_scenario(c), c));
  }
  const SimulationTrace* all[] = {&traces[0], &base, &traces[1]};
  const char* names[] = {"1e-3", "1", "1e3"};
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const CheckResult r = check_events_within("scale", *all[a], *all[b], 1);
      ok = ok && r.passed;
      os << (a + b > 1 ? "; " : "") << names[a] << "/" << names[b] << " max shift "
         << fmt("%.0f", r.measured) << " steps" << (r.detail.empty() ? "" : " " + r.detail);
    }
  }
  report(7, "scale invariance", ok, os.str());
}

void criterion_8() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int branches[3] = {0, 0, 0};  // negative, zero, positive discriminant
  int linear = 0;
  bool converged = true;
  const double dt = seconds([&] {
    for (int k = 0; k < 1000; ++k) {
      RiccatiCoefficients c{0.05 + 10.0 * u(rng), 20.0 * u(rng), 10.0 * u(rng)};
      switch (k % 4) {
        case 0: c.a2 = 0.0; break;
        case 1: c.a2 = c.a1 * c.a1 / (4.0 * c.a0); break;
        default: break;
      }
      const double w = 1e-3 + u(rng);
      if (c.a2 == 0.0) {
        ++linear;
      } else {
        const double d = c.discriminant();
        ++branches[d < 0 ? 0 : (d == 0 ? 1 : 2)];
      }
      const double exact = tau(w, c);
      const CrossingResult num = tau_numeric(w, c, 1e-3 * w);
      converged = converged && num.converged;
      worst = std::max(worst, std::abs(num.time - exact) / exact);
    }
  });
  const bool spans = linear > 0 && branches[0] > 0 && branches[1] > 0 && branches[2] > 0;
  std::ostringstream os;
  os << "max rel " << fmt("%.2e", worst) << ", branches (a2=0, <0, =0, >0) = (" << linear << ", "
     << branches[0] << ", " << branches[1] << ", " << branches[2] << "), " << fmt("%.2f", dt) << " s";
  report(8, "tau oracle equivalence", converged && spans && worst <= 1e-6 && dt < 5.0, os.str());
}

void criterion_9() {
  const LtiProblem p = batch_reactor();
  const Matrix a_cl = p.A + p.B * p.K;
  double worst = lyapunov_residual(a_cl, p.Q, solve_lyapunov(a_cl, p.Q)) / spectral_norm(p.Q);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 3);
    Matrix A(n, n), M(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        A(r, c) = g(rng);
        M(r, c) = g(rng);
      }
    // Gershgorin shift makes A Hurwitz
    double radius = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += std::abs(A(r, c));
      radius = std::max(radius, s);
    }
    A = A - (radius + 0.1) * Matrix::identity(n);
    const Matrix Q = M * M.transpose() + static_cast<double>(n) * Matrix::identity(n);
    const Matrix P = solve_lyapunov(A, Q);
    worst = std::max(worst, lyapunov_residual(A, Q, P) / spectral_norm(Q));
  }
  report(9, "Lyapunov solver residual", worst <= 1e-10, "max residual/|Q| " + fmt("%.2e", worst));
}

void criterion_10(const Scenario& s, const SimulationTrace& fb) {
  auto [sphere, level] = check_containment(fb, s.cert);
  report(10, "containment soundness", sphere.passed && level.passed,
         "max |x-xc|-R " + fmt("%.3e", sphere.measured) + ", max V-Vs " + fmt("%.3e", level.measured));
}

void criterion_11(const Scenario& br) {
  RunConfig c = config("batch_reactor", TriggerMode::Centralized);
  c.centralized_dwell = false;
  const SimulationTrace without = simulate(br, c);
  c.centralized_dwell = true;
  const SimulationTrace with = simulate(br, c);
  const CheckResult r = check_same_events("centralized", with, without);
  report(11, "centralized trigger equivalence", r.passed,
         r.detail + ", " + fmt("%.0f", r.measured) + " mismatches");
}

}  // namespace

int main() {
  try {
    criterion_1();

    const RunConfig br_cfg = config("batch_reactor", TriggerMode::Decentralized);
    const Scenario br = build_scenario(br_cfg);
    const SimulationTrace br_tr = simulate(br, br_cfg);
    criterion_2(br_tr);

    const RunConfig cu_cfg = config("cubic_oscillator", TriggerMode::Decentralized);
    const Scenario cu = build_scenario(cu_cfg);
    criterion_3(cu);
    const SimulationTrace cu_tr = simulate(cu, cu_cfg);
    criterion_4(cu, cu_tr);

    const RunConfig fb_cfg = config("cubic_oscillator", TriggerMode::Feedback);
    const SimulationTrace fb_tr = simulate(cu, fb_cfg);
    criterion_5(fb_tr);
    criterion_6(br, br_tr, cu, cu_tr);
    criterion_7(br_tr);
    criterion_8();
    criterion_9();
    criterion_10(cu, fb_tr);
    criterion_11(br);
  } catch (const std::exception& e) {
    std::printf("FAIL  aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
