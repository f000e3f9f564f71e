#pragma once

// First-crossing time of the scalar comparison ODE
//   phi' = a0 + a1 phi + a2 phi^2,  phi(0) = 0
// at level w. The closed form is the separable integral
//   t(w) = int_0^w dphi / (a0 + a1 phi + a2 phi^2).

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "dectrig/errors.hpp"

namespace dectrig {

struct RiccatiCoefficients {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  double rate(double phi) const { return a0 + a1 * phi + a2 * phi * phi; }
  double discriminant() const { return a1 * a1 - 4.0 * a0 * a2; }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void validate_tau_inputs(double w, const RiccatiCoefficients& k) {
  if (!std::isfinite(w) || w < 0.0) {
    std::ostringstream os;
    os << "tau: level must be finite and non-negative, got " << w;
    throw ValidationError(os.str());
  }
  for (double a : {k.a0, k.a1, k.a2}) {
    if (!std::isfinite(a) || a < 0.0) {
      std::ostringstream os;
      os << "tau: coefficients must be finite and non-negative, got (" << k.a0 << ", " << k.a1
         << ", " << k.a2 << ")";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace detail

/// Closed-form crossing time. Returns 0 for w = 0 and +inf when a0 = 0 (phi
/// stays at the equilibrium 0).
///
/// With a2 > 0 the integral reduces to (2/s)·atan(s·w/(2a0 + a1·w)) for
/// s² = −Δ > 0 and to (2/d)·atanh(d·w/(2a0 + a1·w)) for d² = Δ > 0; both tend
/// to 2w/(2a0 + a1·w) as Δ → 0 without cancellation, so the branch boundary
/// needs no special handling.
inline double tau(double w, const RiccatiCoefficients& k) {
  detail::validate_tau_inputs(w, k);
  if (w == 0.0) return 0.0;
  if (k.a0 == 0.0) return kInfinity;

  if (k.a2 == 0.0) {
    if (k.a1 == 0.0) return w / k.a0;
    return std::log1p(k.a1 * w / k.a0) / k.a1;
  }

  const double delta = k.discriminant();
  const double denom = 2.0 * k.a0 + k.a1 * w;
  if (delta == 0.0) return 2.0 * w / denom;
  if (delta < 0.0) {
    const double s = std::sqrt(-delta);
    const double z = s * w / denom;
    return z < 1e-8 ? 2.0 * w / denom * (1.0 - z * z / 3.0) : 2.0 * std::atan(z) / s;
  }
  const double d = std::sqrt(delta);
  const double z = d * w / denom;
  return z < 1e-8 ? 2.0 * w / denom * (1.0 + z * z / 3.0) : 2.0 * std::atanh(z) / d;
}

struct CrossingResult {
  double time = kInfinity;
  bool converged = false;
  long steps = 0;
  std::string diagnostic;
};

struct TauNumericOptions {
  double horizon = 1e6;
  long max_steps = 50'000'000;
  /// Each step is capped so that phi advances by at most this fraction of w.
  double max_level_fraction = 1e-3;
};

/// Forward RK4 integration of the comparison ODE. `step` is the largest step
/// the integrator may take; near the crossing the step is halved until the
/// crossing is bracketed to roundoff.
inline CrossingResult tau_numeric(double w, const RiccatiCoefficients& k, double step,
                                  const TauNumericOptions& opts = {}) {
  detail::validate_tau_inputs(w, k);
  if (!(step > 0.0)) throw ValidationError("tau_numeric: step must be positive");

  CrossingResult out;
  if (w == 0.0) {
    out.time = 0.0;
    out.converged = true;
    return out;
  }

  // the largest rate on [0, w] is attained at w since all coefficients are >= 0
  const double peak_rate = k.rate(w);
  if (peak_rate > 0.0) step = std::min(step, opts.max_level_fraction * w / peak_rate);

  auto rk4 = [&](double phi, double h) {
    const double k1 = k.rate(phi);
    const double k2 = k.rate(phi + 0.5 * h * k1);
    const double k3 = k.rate(phi + 0.5 * h * k2);
    const double k4 = k.rate(phi + h * k3);
    return phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  double t = 0.0;
  double phi = 0.0;
  double h = step;
  while (true) {
    if (k.rate(phi) == 0.0) {
      out.diagnostic = "comparison flow is at an equilibrium below the level";
      return out;
    }
    if (t > opts.horizon || out.steps >= opts.max_steps) {
      std::ostringstream os;
      os << "no crossing within horizon " << opts.horizon << " s (" << out.steps << " steps)";
      out.diagnostic = os.str();
      return out;
    }
    const double next = rk4(phi, h);
    ++out.steps;
    if (next < w) {
      t += h;
      phi = next;
      continue;
    }
    if (next == w || h <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(t, 1e-300)) {
      out.time = t + h;
      out.converged = true;
      return out;
    }
    h *= 0.5;
  }
}

}  // namespace dectrig
