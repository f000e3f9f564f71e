#pragma once

// Per-sensor trigger parameters (w_i, T_i) from ISS certificates and
// Lipschitz data, plus the LTI specialization built on a quadratic Lyapunov
// function.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dectrig/errors.hpp"
#include "dectrig/linalg.hpp"
#include "dectrig/riccati_tau.hpp"

namespace dectrig {

using ScalarFn = std::function<double(double)>;
using LevelFn = std::function<double(double)>;  // level c -> constant
using StateFn = std::function<double(const Vector&)>;

struct SensorTrigger {
  /// Threshold on |x_{i,e}| / |x_i|; +inf marks a sensor whose error never
  /// enters the Lyapunov derivative (it never needs to transmit).
  double w = 0.0;
  /// Dwell time before the threshold is even checked.
  double T = 0.0;
};

struct TriggerConfig {
  std::vector<SensorTrigger> sensors;

  std::size_t size() const noexcept { return sensors.size(); }

  /// sqrt(sum w_j^2) over sensors with finite thresholds.
  double W() const {
    double s = 0.0;
    for (const auto& st : sensors)
      if (std::isfinite(st.w)) s += st.w * st.w;
    return std::sqrt(s);
  }

  /// sqrt(sum_{j != i} w_j^2), summed directly rather than as W² − w_i².
  double W_except(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < sensors.size(); ++j)
      if (j != i && std::isfinite(sensors[j].w)) s += sensors[j].w * sensors[j].w;
    return std::sqrt(s);
  }

  Vector w_values() const {
    Vector v;
    for (const auto& s : sensors) v.push_back(s.w);
    return v;
  }
  Vector T_values() const {
    Vector v;
    for (const auto& s : sensors) v.push_back(s.T);
    return v;
  }
};

/// Bounds |f(x,k(x+x_e))| <= L(c)|x| + D(c)|x_e| and the per-component
/// versions on S(c) for admissible errors.
struct LipschitzData {
  LevelFn L;
  LevelFn D;
  std::vector<LevelFn> L_i;
  std::vector<LevelFn> D_i;
};

struct LyapunovCertificate {
  StateFn V;
  ScalarFn alpha1;
  ScalarFn alpha2;
  ScalarFn alpha;
  std::vector<ScalarFn> gamma;
  /// Linear-bound constants M_i(c) on gamma_i over the admissible error set.
  std::vector<LevelFn> M_of_c;
  /// Set when V(x) = xᵀPx; enables exact maximization over spheres.
  std::optional<Matrix> quadratic;
  /// Right-hand side of the certified decrease V̇ <= decay_bound(x).
  StateFn decay_bound;
  /// Region of attraction S(level); +inf for global certificates.
  double level = kInfinity;
};

enum class ThetaRule {
  Linear,     // sum theta_i <= 1 (quadratic-Lyapunov LTI design)
  Quadratic,  // sum theta_i^2 <= 1 (splitting a single ISS gain)
};

/// Throws on theta_i outside (0,1) or a violated sum rule; returns warnings
/// when the vector satisfies its own rule but not the other one.
inline std::vector<std::string> check_theta(const Vector& theta, ThetaRule rule) {
  double lin = 0.0;
  double sq = 0.0;
  for (double t : theta) {
    if (!(t > 0.0 && t < 1.0)) {
      std::ostringstream os;
      os << "theta entries must lie in (0,1), got " << t;
      throw ValidationError(os.str());
    }
    lin += t;
    sq += t * t;
  }
  constexpr double slack = 1e-12;
  std::vector<std::string> warnings;
  if (rule == ThetaRule::Linear) {
    if (lin > 1.0 + slack) {
      std::ostringstream os;
      os << "theta must satisfy sum(theta) <= 1, got " << lin;
      throw ValidationError(os.str());
    }
  } else {
    if (sq > 1.0 + slack) {
      std::ostringstream os;
      os << "theta must satisfy sum(theta^2) <= 1, got " << sq;
      throw ValidationError(os.str());
    }
    if (lin > 1.0 + slack) {
      std::ostringstream os;
      os << "sum(theta) = " << lin
         << " exceeds 1: accepted under the sum-of-squares rule but not under the linear "
            "rule used by the quadratic-Lyapunov LTI design";
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

/// Rejects any sensor with w_i <= 0 or w_i > bound_i.
inline void validate_thresholds(const Vector& w, const Vector& bound) {
  if (w.size() != bound.size()) throw ValidationError("threshold/bound size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) {
      std::ostringstream os;
      os << "sensor " << i << ": threshold w must be positive, got " << w[i];
      throw ValidationError(os.str());
    }
    if (w[i] > bound[i] * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "sensor " << i << ": threshold w = " << w[i] << " exceeds its bound M = " << bound[i];
      throw ValidationError(os.str());
    }
  }
}

inline RiccatiCoefficients nonlinear_coefficients(std::size_t i, const TriggerConfig& cfg,
                                                  const LipschitzData& lip, double c) {
  const double Wi = cfg.W_except(i);
  const double L = lip.L(c);
  const double D = lip.D(c);
  const double Li = lip.L_i.at(i)(c);
  const double Di = lip.D_i.at(i)(c);
  for (double v : {L, D, Li, Di})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("Lipschitz constants must be finite and non-negative");
  return {Li + Di * Wi, L + Di + D * Wi, D};
}

/// T_i = tau(w_i, L_i + D_i W_i, L + D_i + D W_i, D) at level c. When
/// `bounds` is given, every w_i must satisfy 0 < w_i <= bounds_i.
inline Vector design_Ti(const Vector& w, const LipschitzData& lip, double c,
                        const std::optional<Vector>& bounds = std::nullopt) {
  if (!(c >= 0.0)) throw ValidationError("design_Ti: level c must be non-negative");
  if (lip.L_i.size() != w.size() || lip.D_i.size() != w.size()) {
    throw ValidationError("design_Ti: Lipschitz data does not match sensor count");
  }
  if (bounds) validate_thresholds(w, *bounds);
  TriggerConfig cfg;
  for (double wi : w) cfg.sensors.push_back({wi, 0.0});
  Vector T(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    T[i] = tau(w[i], nonlinear_coefficients(i, cfg, lip, c));
    if (!(T[i] > 0.0)) {
      std::ostringstream os;
      os << "sensor " << i << ": dwell time is not positive (" << T[i] << ")";
      throw NumericalError(os.str());
    }
  }
  return T;
}

inline Vector evaluate_bounds(const LyapunovCertificate& cert, double c) {
  Vector m;
  for (const auto& fn : cert.M_of_c) m.push_back(fn(c));
  return m;
}

/// Thresholds at their largest admissible values w_i = M_i(c), dwell times
/// from design_Ti.
inline TriggerConfig design_nonlinear(const LyapunovCertificate& cert, const LipschitzData& lip,
                                      double c) {
  const Vector w = evaluate_bounds(cert, c);
  const Vector T = design_Ti(w, lip, c, w);
  TriggerConfig cfg;
  for (std::size_t i = 0; i < w.size(); ++i) cfg.sensors.push_back({w[i], T[i]});
  return cfg;
}

// ---------------------------------------------------------------------------
// LTI systems x' = Ax + BK(x + x_e), V = xᵀPx.

struct LtiDesign {
  TriggerConfig config;
  Matrix P;
  double Q_m = 0.0;
  double sigma = 0.0;
  Vector theta;
  Matrix A_cl;
  Matrix BK;
  /// Upper bounds for the thresholds: w_i may not exceed these.
  Vector w_bound;
  std::vector<RiccatiCoefficients> coefficients;
  std::vector<std::string> warnings;
};

inline RiccatiCoefficients lti_coefficients(std::size_t i, const TriggerConfig& cfg,
                                            const Matrix& a_cl, const Matrix& bk) {
  const double Wi = cfg.W_except(i);
  const double row_acl = norm2(a_cl.row(i));
  const double row_bk = norm2(bk.row(i));
  const double n_bk = spectral_norm(bk);
  return {row_acl + row_bk * Wi, spectral_norm(a_cl) + row_bk + n_bk * Wi, n_bk};
}

/// w_i = sigma·theta_i·Q_m / |c_i(2PBK)| and T_i = tau(w_i, a0, a1, a2) with
/// the row/column norm coefficients of A+BK and BK.
inline LtiDesign design_lti(const Matrix& A, const Matrix& B, const Matrix& K, const Matrix& Q,
                            const Vector& theta, double sigma) {
  if (!A.square()) throw ValidationError("design_lti: A must be square");
  const std::size_t n = A.rows();
  if (B.rows() != n || K.cols() != n || K.rows() != B.cols()) {
    throw ValidationError("design_lti: inconsistent shapes A " + A.shape_string() + ", B " +
                          B.shape_string() + ", K " + K.shape_string());
  }
  if (Q.rows() != n || Q.cols() != n) throw ValidationError("design_lti: Q has the wrong shape");
  if (theta.size() != n) throw ValidationError("design_lti: need one theta per sensor");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ValidationError("design_lti: sigma must lie in (0,1)");

  LtiDesign d;
  d.warnings = check_theta(theta, ThetaRule::Linear);
  d.theta = theta;
  d.sigma = sigma;
  d.BK = B * K;
  d.A_cl = A + d.BK;
  require_symmetric(Q);
  d.P = solve_lyapunov(d.A_cl, Q);
  d.Q_m = spectral_summary(Q).min_eigenvalue;

  const Matrix two_pbk = 2.0 * (d.P * d.BK);
  d.config.sensors.resize(n);
  d.w_bound.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cn = norm2(two_pbk.col(i));
    d.w_bound[i] = cn == 0.0 ? kInfinity : sigma * theta[i] * d.Q_m / cn;
    d.config.sensors[i].w = d.w_bound[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto coeffs = lti_coefficients(i, d.config, d.A_cl, d.BK);
    d.coefficients.push_back(coeffs);
    auto& s = d.config.sensors[i];
    if (!std::isfinite(s.w)) {
      s.T = kInfinity;
      d.warnings.push_back("sensor " + std::to_string(i) +
                           ": column of 2PBK is zero; sensor never transmits");
      continue;
    }
    s.T = tau(s.w, coeffs);
    if (!(s.T > 0.0)) throw NumericalError("design_lti: non-positive dwell time");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Certificate constants of the cubic example x2' = -x2 + x1^3 + u with
// u = K(x + x_e) - (x1 + x1e)^3.

/// max over |x1| <= mu1 of |3 x1^2 - k1|; attained at x1 = 0 or |x1| = mu1.
inline double cubic_slope_bound(double k1, double mu1) {
  return std::max(std::abs(k1), std::abs(3.0 * mu1 * mu1 - k1));
}

struct CubicCertificateParams {
  Matrix P;   // 2x2 Lyapunov matrix of the closed-loop linear part
  Vector B;   // input column
  double k1 = 0.0;
  double k2 = 0.0;
  double Q_m = 1.0;
  double sigma = 0.9;
  double theta1 = 0.9;
  double theta2 = 0.1;
  /// Bound on |x1| over S(c); defaults to mu = sqrt(c / p_m).
  std::optional<double> mu1;
};

struct CubicBounds {
  double M1 = 0.0;
  double M2 = 0.0;
  double mu = 0.0;
  double mu1 = 0.0;
  /// mu^2 + 3 mu1 mu + max|3 x1^2 - k1|: the gain of the x1e error channel.
  double gain1 = 0.0;
};

inline double norm_2PB(const CubicCertificateParams& p) {
  return norm2(2.0 * (p.P * p.B));
}

inline CubicBounds cubic_bounds(double c, const CubicCertificateParams& p) {
  if (!(c >= 0.0)) throw ValidationError("cubic bounds: level c must be non-negative");
  const double p_m = spectral_summary(p.P).min_eigenvalue;
  CubicBounds b;
  b.mu = std::sqrt(c / p_m);
  b.mu1 = p.mu1.value_or(b.mu);
  b.gain1 = b.mu * b.mu + 3.0 * b.mu1 * b.mu + cubic_slope_bound(p.k1, b.mu1);
  const double n2pb = norm_2PB(p);
  b.M1 = p.sigma * p.theta1 * p.Q_m / (n2pb * b.gain1);
  b.M2 = p.sigma * p.theta2 * p.Q_m / (n2pb * std::abs(p.k2));
  return b;
}

inline std::pair<double, double> compute_Mi_polynomial(double c, const CubicCertificateParams& p) {
  const CubicBounds b = cubic_bounds(c, p);
  return {b.M1, b.M2};
}

}  // namespace dectrig
