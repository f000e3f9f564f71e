#pragma once

// Controller-side refinement of the sensor triggers. From the sampled data the
// controller bounds the true state inside a sphere, bounds V on that sphere,
// and broadcasts fresh (w_i, T_i) designed for the smaller level set when the
// bound has dropped by a factor rho since the last broadcast.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig {

struct Sphere {
  Vector center;
  double radius = 0.0;
};

struct ContainmentEstimate {
  Vector center;
  double radius = 0.0;
  double V_bound = 0.0;    // current bound on V over the sphere
  double V_sampled = 0.0;  // bound latched at the last broadcast
  double last_update = 0.0;
};

struct UpdateSchedule {
  double dwell = 0.5;
  double rho = 0.5;

  void validate() const {
    if (!(dwell > 0.0)) throw ValidationError("update schedule: dwell must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("update schedule: rho must lie in (0,1)");
  }
};

/// If |x_{i,e}| <= w_i |x| for all i then |x - x_c| <= R with
/// x_c = x_s / (1 - W²) and R = W |x_s| / (1 - W²).
inline Sphere containment_sphere(const Vector& xs, double W) {
  if (!(W >= 0.0)) throw ValidationError("containment sphere: W must be non-negative");
  if (W >= 1.0) {
    std::ostringstream os;
    os << "containment sphere: W = " << W << " >= 1; constant control k(0) already suffices";
    throw ValidationError(os.str());
  }
  const double g = 1.0 - W * W;
  return {(1.0 / g) * xs, W * norm2(xs) / g};
}

/// Exact max of xᵀPx over |x - center| = radius for symmetric positive
/// definite P, via the secular equation in the eigenbasis of P.
inline double max_quadratic_on_sphere(const SymmetricEigen& eig, const Vector& center,
                                      double radius) {
  if (!(radius >= 0.0)) throw ValidationError("sphere radius must be non-negative");
  const std::size_t n = eig.values.size();
  const double lmax = eig.values.back();
  // center in the eigenbasis
  Vector g(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = dot(eig.vectors.col(j), center);
    b[j] = eig.values[j] * g[j];
  }
  const double tie = 1e-12 * std::abs(lmax);
  double top_mass = 0.0;
  double b_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    b_norm += b[j] * b[j];
    if (eig.values[j] >= lmax - tie) top_mass += b[j] * b[j];
  }
  b_norm = std::sqrt(b_norm);

  auto secular = [&](double mu) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = mu - eig.values[j];
      s += b[j] * b[j] / (d * d);
    }
    return s;
  };
  auto value_at = [&](const Vector& z) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) v += eig.values[j] * (g[j] + z[j]) * (g[j] + z[j]);
    return v;
  };

  const double r2 = radius * radius;
  Vector z(n, 0.0);
  const bool degenerate = top_mass <= 1e-30 * std::max(1.0, b_norm * b_norm);
  if (degenerate) {
    // try the multiplier at lmax: the non-top components are fixed and the
    // remaining norm goes into the top eigenspace
    double used = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (eig.values[j] >= lmax - tie) continue;
      z[j] = b[j] / (lmax - eig.values[j]);
      used += z[j] * z[j];
    }
    if (used <= r2) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (eig.values[j] < lmax - tie) v += eig.values[j] * (g[j] + z[j]) * (g[j] + z[j]);
      double top_center = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (eig.values[j] >= lmax - tie) top_center += g[j] * g[j];
      // the fill direction is orthogonal to the (vanishing) top component of the center
      return v + lmax * (top_center + (r2 - used));
    }
  }

  // secular(mu) decreases on (lmax, inf); the root lies below lmax + |b| / R
  double lo = lmax;
  double hi = lmax + b_norm / radius;
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (secular(mid) > r2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  for (std::size_t j = 0; j < n; ++j) z[j] = b[j] / (hi - eig.values[j]);
  // rescale onto the sphere to remove the bisection residual
  const double zn = norm2(z);
  if (zn > 0.0) z = (radius / zn) * z;
  return value_at(z);
}

inline double max_quadratic_on_sphere(const Matrix& P, const Vector& center, double radius) {
  if (!(radius >= 0.0)) throw ValidationError("sphere radius must be non-negative");
  if (radius == 0.0) return quad_form(P, center);
  return max_quadratic_on_sphere(sym_eig_decompose(P), center, radius);
}

struct SphereSamplingOptions {
  std::size_t angle_points = 3600;  // n = 2
  std::size_t points_per_axis = 24;  // n > 2 grid on the cube surface
  int golden_iterations = 60;
};

/// Sampled max of an arbitrary V over a sphere. For n = 2 a uniform angle grid
/// followed by golden-section refinement around the best sample.
inline double max_sampled_on_sphere(const StateFn& V, const Vector& center, double radius,
                                    const SphereSamplingOptions& opt = {}) {
  const std::size_t n = center.size();
  if (radius == 0.0 || n == 0) return V(center);
  if (n == 1) return std::max(V({center[0] - radius}), V({center[0] + radius}));
  if (n == 2) {
    auto at = [&](double a) { return V({center[0] + radius * std::cos(a), center[1] + radius * std::sin(a)}); };
    const double da = 2.0 * std::numbers::pi / static_cast<double>(opt.angle_points);
    std::size_t best = 0;
    double best_v = -kInfinity;
    for (std::size_t k = 0; k < opt.angle_points; ++k) {
      const double v = at(da * static_cast<double>(k));
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = da * (static_cast<double>(best) - 1.0);
    double b = da * (static_cast<double>(best) + 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = at(c), fd = at(d);
    for (int it = 0; it < opt.golden_iterations; ++it) {
      if (fc > fd) {
        b = d; d = c; fd = fc;
        c = b - phi * (b - a); fc = at(c);
      } else {
        a = c; c = d; fc = fd;
        d = a + phi * (b - a); fd = at(d);
      }
    }
    return std::max({best_v, fc, fd});
  }
  // n > 2: normalized grid points on the surface of [-1,1]^n
  const std::size_t m = opt.points_per_axis;
  double best_v = -kInfinity;
  std::vector<std::size_t> idx(n, 0);
  Vector dir(n), x(n);
  while (true) {
    bool on_surface = false;
    for (std::size_t j = 0; j < n; ++j) {
      dir[j] = -1.0 + 2.0 * static_cast<double>(idx[j]) / static_cast<double>(m - 1);
      if (idx[j] == 0 || idx[j] == m - 1) on_surface = true;
    }
    if (on_surface) {
      const double dn = norm2(dir);
      for (std::size_t j = 0; j < n; ++j) x[j] = center[j] + radius * dir[j] / dn;
      best_v = std::max(best_v, V(x));
    }
    std::size_t j = 0;
    while (j < n && ++idx[j] == m) idx[j++] = 0;
    if (j == n) break;
  }
  return best_v;
}

/// Upper bound on V over the sphere; exact for quadratic certificates.
inline double max_V_on_sphere(const LyapunovCertificate& cert, const Vector& center, double radius) {
  if (!(radius >= 0.0)) throw ValidationError("sphere radius must be non-negative");
  if (radius == 0.0) return cert.V(center);
  if (cert.quadratic) return max_quadratic_on_sphere(*cert.quadratic, center, radius);
  return max_sampled_on_sphere(cert.V, center, radius);
}

inline bool update_trigger(const ContainmentEstimate& est, const UpdateSchedule& sched, double t) {
  return t - est.last_update >= sched.dwell && est.V_bound <= sched.rho * est.V_sampled;
}

/// New configuration for level V_fresh: w_i = M_i(V_fresh), T_i at c = V_fresh.
/// Latches V_fresh into the estimate.
inline TriggerConfig apply_update(const LyapunovCertificate& cert, const LipschitzData& lip,
                                  ContainmentEstimate& est, double V_fresh,
                                  const TriggerConfig& previous) {
  if (!(V_fresh <= est.V_sampled)) {
    std::ostringstream os;
    os << "parameter update rejected: sampled bound would increase from " << est.V_sampled
       << " to " << V_fresh;
    throw ValidationError(os.str());
  }
  TriggerConfig next = design_nonlinear(cert, lip, V_fresh);
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (next.sensors[i].w < previous.sensors.at(i).w * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "sensor " << i << ": threshold decreased on update (" << previous.sensors[i].w << " -> "
         << next.sensors[i].w << "); M_i(c) must be non-increasing in c";
      throw ValidationError(os.str());
    }
  }
  est.V_sampled = V_fresh;
  return next;
}

/// Scheduler that recomputes the containment bound at every step boundary
/// and broadcasts synchronously with zero latency.
class FeedbackController final : public ParameterScheduler {
 public:
  FeedbackController(LyapunovCertificate cert, LipschitzData lip, UpdateSchedule schedule,
                     double initial_level)
      : cert_(std::move(cert)), lip_(std::move(lip)), schedule_(schedule) {
    schedule_.validate();
    if (cert_.quadratic) eig_ = sym_eig_decompose(*cert_.quadratic);
    if (!(initial_level > 0.0) || !std::isfinite(initial_level)) {
      throw ValidationError("feedback: initial level must be positive and finite");
    }
    est_.V_sampled = initial_level;
    est_.V_bound = initial_level;
    est_.last_update = 0.0;
  }

  bool on_step(const SimState& s, TriggerConfig& cfg, ParamUpdateEvent& ev) override {
    const Sphere sph = containment_sphere(s.xs, cfg.W());
    est_.center = sph.center;
    est_.radius = sph.radius;
    est_.V_bound = bound(sph);
    if (!update_trigger(est_, schedule_, s.t)) return false;
    cfg = apply_update(cert_, lip_, est_, est_.V_bound, cfg);
    est_.last_update = s.t;
    // the broadcast changes W, so the sphere is re-derived for logging
    const Sphere fresh = containment_sphere(s.xs, cfg.W());
    est_.center = fresh.center;
    est_.radius = fresh.radius;
    est_.V_bound = bound(fresh);
    ev.V_sampled = est_.V_sampled;
    ev.w = cfg.w_values();
    ev.T = cfg.T_values();
    return true;
  }

  std::optional<ContainmentRow> containment() const override {
    return ContainmentRow{est_.center, est_.radius, est_.V_bound, est_.V_sampled};
  }

  const ContainmentEstimate& estimate() const noexcept { return est_; }

 private:
  double bound(const Sphere& s) const {
    if (eig_ && s.radius > 0.0) return max_quadratic_on_sphere(*eig_, s.center, s.radius);
    return max_V_on_sphere(cert_, s.center, s.radius);
  }

  LyapunovCertificate cert_;
  std::optional<SymmetricEigen> eig_;
  LipschitzData lip_;
  UpdateSchedule schedule_;
  ContainmentEstimate est_;
};

}  // namespace dectrig
