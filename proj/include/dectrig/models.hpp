#pragma once

// Bundled systems: the linearized batch reactor (LTI, four sensors) and a
// second-order plant with a cubic nonlinearity (two sensors).

#include <cmath>
#include <string>
#include <utility>

#include "dectrig/linalg.hpp"
#include "dectrig/sim_engine.hpp"
#include "dectrig/trigger_design.hpp"

namespace dectrig {

struct LtiProblem {
  SystemModel model;
  Matrix A, B, K, Q;
  Vector theta;
  double sigma = 0.95;
  Vector x0, xs0;
  double horizon = 10.0;
};

/// x' = Ax + Bu, u = K x_s. K multiplies the sampled state directly.
inline SystemModel make_lti_model(std::string name, const Matrix& A, const Matrix& B,
                                  const Matrix& K) {
  if (!A.square() || B.rows() != A.rows() || K.rows() != B.cols() || K.cols() != A.rows()) {
    throw ValidationError("LTI model: inconsistent shapes A " + A.shape_string() + ", B " +
                          B.shape_string() + ", K " + K.shape_string());
  }
  SystemModel m;
  m.name = std::move(name);
  m.n = A.rows();
  m.m = B.cols();
  m.A = A;
  m.B = B;
  m.K = K;
  m.f = [A, B](const Vector& x, const Vector& u) { return A * x + B * u; };
  m.k = [K](const Vector& xs) { return K * xs; };
  return m;
}

/// Quadratic certificate V = xᵀPx with V̇ <= -(1-sigma) xᵀQx inside the
/// threshold family; global, so the level is +inf.
inline LyapunovCertificate lti_certificate(const LtiDesign& d, const Matrix& Q) {
  LyapunovCertificate c;
  const Matrix P = d.P;
  const auto sp = spectral_summary(P);
  c.V = [P](const Vector& x) { return quad_form(P, x); };
  c.quadratic = P;
  c.alpha1 = [pm = sp.min_eigenvalue](double r) { return pm * r * r; };
  c.alpha2 = [pM = sp.max_eigenvalue](double r) { return pM * r * r; };
  c.alpha = [k = (1.0 - d.sigma) * d.Q_m](double r) { return k * r * r; };
  for (double wb : d.w_bound) {
    c.gamma.push_back([wb](double r) { return r / wb; });
    c.M_of_c.push_back([wb](double) { return wb; });
  }
  c.decay_bound = [Q, s = d.sigma](const Vector& x) { return -(1.0 - s) * quad_form(Q, x); };
  c.level = kInfinity;
  return c;
}

/// The linearized batch reactor with the stabilizing gain that places the
/// closed-loop eigenvalues near {-2.98 ± 1.19i, -3.89, -3.62}.
///
/// The (2,4) entry of A is +0.67 and K enters as u = K x_s with the listed
/// signs; the opposite signs give an unstable closed loop.
inline LtiProblem batch_reactor() {
  LtiProblem p;
  p.A = Matrix{{1.38, -0.20, 6.71, -5.67},
               {-0.58, -4.29, 0.0, 0.67},
               {1.06, 4.27, -6.65, 5.89},
               {0.04, 4.27, 1.34, -2.10}};
  p.B = Matrix{{0.0, 0.0}, {5.67, 0.0}, {1.13, -3.14}, {1.13, 0.0}};
  p.K = Matrix{{0.1006, -0.2469, -0.0952, -0.2447}, {1.4099, -0.1966, 0.0139, 0.0823}};
  p.Q = Matrix::identity(4);
  p.theta = {0.6, 0.17, 0.08, 0.15};
  p.sigma = 0.95;
  p.x0 = {4.0, 7.0, -4.0, 3.0};
  p.xs0 = {4.1, 7.2, -4.5, 2.0};
  p.horizon = 10.0;
  p.model = make_lti_model("batch_reactor", p.A, p.B, p.K);
  return p;
}

// ---------------------------------------------------------------------------

/// h1 = -(e^3 + 3 x1 e^2 + (3 x1^2 - k1) e), the x1e channel of the closed loop.
inline double cubic_h1(double x1, double e1, double k1) {
  return -(e1 * e1 * e1 + 3.0 * x1 * e1 * e1 + (3.0 * x1 * x1 - k1) * e1);
}

inline double cubic_h2(double e2, double k2) { return k2 * e2; }

struct NonlinearProblem {
  SystemModel model;
  LyapunovCertificate cert;
  LipschitzData lip;
  CubicCertificateParams params;
  Matrix A, B, K, A_bar, Q, P;
  Vector theta;
  double sigma = 0.9;
  double c = 10.0;
  Vector x0, xs0;
  double horizon = 10.0;
};

/// L_1 = |r_1(Ā)|, D_1 = 0, L_2 = |r_2(Ā)|, D_2 = sqrt(gain1(c)^2 + k2^2); the
/// whole-vector pair is L = |Ā| and D = D_2, since only the second row
/// carries error terms.
inline LipschitzData lipschitz_bounds_cubic(const Matrix& A_bar, const CubicCertificateParams& p) {
  LipschitzData lip;
  const double L = spectral_norm(A_bar);
  const double L1 = norm2(A_bar.row(0));
  const double L2 = norm2(A_bar.row(1));
  auto D2 = [p](double c) {
    const double g = cubic_bounds(c, p).gain1;
    return std::sqrt(g * g + p.k2 * p.k2);
  };
  lip.L = [L](double) { return L; };
  lip.D = D2;
  lip.L_i = {[L1](double) { return L1; }, [L2](double) { return L2; }};
  lip.D_i = {[](double) { return 0.0; }, D2};
  return lip;
}

/// x' = Ax + [0, x1^3]ᵀ + Bu with u = K x_s - x_{s,1}^3, A = [[0,1],[0,-1]],
/// B = [0,1]ᵀ and K = [-5, -3]; certificate V = xᵀPx from PĀ + ĀᵀP = -Q.
inline NonlinearProblem cubic_oscillator(double c = 10.0, double sigma = 0.9,
                                         Vector theta = {0.9, 0.1}) {
  if (!(c > 0.0)) throw ValidationError("cubic oscillator: level c must be positive");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ValidationError("cubic oscillator: sigma must lie in (0,1)");
  if (theta.size() != 2) throw ValidationError("cubic oscillator: need two theta values");
  check_theta(theta, ThetaRule::Linear);
  NonlinearProblem p;
  p.A = Matrix{{0.0, 1.0}, {0.0, -1.0}};
  p.B = Matrix{{0.0}, {1.0}};
  p.K = Matrix{{-5.0, -3.0}};
  p.A_bar = p.A + p.B * p.K;
  p.Q = Matrix::identity(2);
  p.P = solve_lyapunov(p.A_bar, p.Q);
  p.theta = std::move(theta);
  p.sigma = sigma;
  p.c = c;
  p.x0 = {2.8, -2.6};
  p.xs0 = {2.9, -2.7};
  p.horizon = 10.0;

  const double k1 = p.K(0, 0);
  const double k2 = p.K(0, 1);
  p.params.P = p.P;
  p.params.B = p.B.col(0);
  p.params.k1 = k1;
  p.params.k2 = k2;
  p.params.Q_m = spectral_summary(p.Q).min_eigenvalue;
  p.params.sigma = p.sigma;
  p.params.theta1 = p.theta[0];
  p.params.theta2 = p.theta[1];

  SystemModel& m = p.model;
  m.name = "cubic_oscillator";
  m.n = 2;
  m.m = 1;
  m.f = [](const Vector& x, const Vector& u) {
    return Vector{x[1], -x[1] + x[0] * x[0] * x[0] + u[0]};
  };
  m.k = [k1, k2](const Vector& xs) {
    return Vector{k1 * xs[0] + k2 * xs[1] - xs[0] * xs[0] * xs[0]};
  };

  const auto sp = spectral_summary(p.P);
  const CubicCertificateParams params = p.params;
  const double n2pb = norm_2PB(params);
  const double qm = params.Q_m;
  const CubicBounds at_c = cubic_bounds(c, params);

  LyapunovCertificate& cert = p.cert;
  const Matrix P = p.P;
  cert.V = [P](const Vector& x) { return quad_form(P, x); };
  cert.quadratic = P;
  cert.alpha1 = [pm = sp.min_eigenvalue](double r) { return pm * r * r; };
  cert.alpha2 = [pM = sp.max_eigenvalue](double r) { return pM * r * r; };
  cert.alpha = [k = (1.0 - sigma) * qm](double r) { return k * r * r; };
  cert.gamma = {
      [=](double r) {
        const double slope = cubic_slope_bound(k1, at_c.mu1);
        return n2pb * (r * r * r + 3.0 * at_c.mu1 * r * r + slope * r) /
               (sigma * params.theta1 * qm);
      },
      [=](double r) { return n2pb * std::abs(k2) * r / (sigma * params.theta2 * qm); },
  };
  cert.M_of_c = {[params](double lvl) { return cubic_bounds(lvl, params).M1; },
                 [params](double lvl) { return cubic_bounds(lvl, params).M2; }};
  cert.decay_bound = [k = (1.0 - sigma) * qm](const Vector& x) {
    const double r = norm2(x);
    return -k * r * r;
  };
  cert.level = c;

  p.lip = lipschitz_bounds_cubic(p.A_bar, params);
  return p;
}

}  // namespace dectrig
