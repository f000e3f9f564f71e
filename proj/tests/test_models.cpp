#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dectrig/models.hpp"
#include "dectrig/trigger_design.hpp"

using namespace dectrig;

TEST(BatchReactor, DynamicsMatchMatrices) {
  const LtiProblem p = batch_reactor();
  const Vector u = p.model.k(p.xs0);
  const Vector f = p.model.f(p.x0, u);
  const Vector ref = p.A * p.x0 + (p.B * p.K) * p.xs0;
  ASSERT_TRUE(all_finite(f));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(f[i], ref[i], 1e-13);
  EXPECT_EQ(p.model.f(Vector(4, 0.0), Vector(2, 0.0)), Vector(4, 0.0));
  EXPECT_TRUE(p.model.is_lti());
  EXPECT_EQ(p.model.f_i(2, p.x0, u), f[2]);
}

TEST(BatchReactor, ClosedLoopEigenvalues) {
  const LtiProblem p = batch_reactor();
  const Matrix a_cl = p.A + p.B * p.K;
  Eigen::Matrix4d e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = a_cl(r, c);
  Eigen::EigenSolver<Eigen::Matrix4d> es(e);
  std::vector<std::complex<double>> got(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  const std::vector<std::complex<double>> want{{-2.98, 1.19}, {-2.98, -1.19}, {-3.89, 0}, {-3.62, 0}};
  for (const auto& w : want) {
    const auto it = std::min_element(got.begin(), got.end(), [&](auto a, auto b) {
      return std::abs(a - w) < std::abs(b - w);
    });
    EXPECT_LT(std::abs(*it - w), 0.05) << w;
  }
  EXPECT_TRUE(is_hurwitz(a_cl));
}

TEST(CubicOscillator, InitialLevel) {
  const NonlinearProblem p = cubic_oscillator();
  EXPECT_NEAR(p.cert.V(p.x0), 8.574, 1e-3);
  EXPECT_LE(p.cert.V(p.x0), p.cert.level);
  EXPECT_EQ(p.cert.level, 10.0);
  EXPECT_EQ(p.model.f({0, 0}, p.model.k({0, 0})), (Vector{0, 0}));
}

TEST(CubicOscillator, ClosedLoopIdentity) {
  const NonlinearProblem p = cubic_oscillator();
  const double k1 = p.params.k1, k2 = p.params.k2;
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const Vector x{g(rng), g(rng)};
    const Vector e{0.1 * g(rng), 0.1 * g(rng)};
    const Vector f = p.model.f(x, p.model.k(x + e));
    const Vector lin = p.A_bar * x;
    EXPECT_NEAR(f[0], lin[0], 1e-12);
    const double h = cubic_h1(x[0], e[0], k1) + cubic_h2(e[1], k2);
    EXPECT_NEAR(f[1], lin[1] + h, 1e-10 * (1 + std::abs(f[1])));
  }
  EXPECT_EQ(cubic_h1(1.7, 0.0, k1), 0.0);
  EXPECT_EQ(cubic_h2(0.0, k2), 0.0);
}

TEST(CubicOscillator, LipschitzBoundsOnRandomSamples) {
  const NonlinearProblem p = cubic_oscillator();
  const double c = p.c;
  const double mu = std::sqrt(c / spectral_summary(p.P).min_eigenvalue);
  const double L = p.lip.L(c), D = p.lip.D(c);
  const double L1 = p.lip.L_i[0](c), L2 = p.lip.L_i[1](c);
  const double D1 = p.lip.D_i[0](c), D2 = p.lip.D_i[1](c);
  EXPECT_EQ(D1, 0.0);
  EXPECT_NEAR(L1, 1.0, 1e-15);
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int violations = 0;
  for (int k = 0; k < 10000; ++k) {
    Vector x{u(rng), u(rng)};
    x = (mu * std::abs(u(rng)) / norm2(x)) * x;
    const Vector e{mu * u(rng), 10.0 * u(rng)};
    const Vector f = p.model.f(x, p.model.k(x + e));
    const double nx = norm2(x), ne = norm2(e);
    const double slack = 1e-9 * (1 + nx + ne);
    violations += std::abs(f[0]) > L1 * nx + D1 * ne + slack;
    violations += std::abs(f[1]) > L2 * nx + D2 * ne + slack;
    violations += norm2(f) > L * nx + D * ne + slack;
  }
  EXPECT_EQ(violations, 0);
}

TEST(CubicOscillator, CertificateInequalities) {
  const NonlinearProblem p = cubic_oscillator();
  const double c = p.c;
  const CubicBounds b = cubic_bounds(c, p.params);
  const Vector M = evaluate_bounds(p.cert, c);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    Vector x{u(rng), u(rng)};
    x = (b.mu * std::abs(u(rng)) / norm2(x)) * x;
    const double nx = norm2(x);
    const double V = p.cert.V(x);
    EXPECT_LE(p.cert.alpha1(nx), V * (1 + 1e-12) + 1e-15);
    EXPECT_GE(p.cert.alpha2(nx) * (1 + 1e-12) + 1e-15, V);
    if (V > c) continue;
    // admissible errors |e_i| <= M_i |x|
    const Vector e{M[0] * nx * u(rng), M[1] * nx * u(rng)};
    const Vector f = p.model.f(x, p.model.k(x + e));
    const double vdot = 2.0 * dot(p.P * x, f);
    EXPECT_LE(vdot, p.cert.decay_bound(x) + 1e-12);
  }
  // gamma_i monotone, zero at zero, and linearly bounded by r / M_i on [0, mu]
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(p.cert.gamma[i](0.0), 0.0);
    double prev = 0.0;
    for (int j = 1; j <= 1000; ++j) {
      const double r = b.mu * j / 1000.0;
      const double gr = p.cert.gamma[i](r);
      EXPECT_GT(gr, prev);
      EXPECT_LE(gr, r / M[i] * (1 + 1e-12));
      prev = gr;
    }
  }
}

TEST(CubicOscillator, RejectsBadParameters) {
  EXPECT_THROW(cubic_oscillator(-1.0), ValidationError);
  EXPECT_THROW(cubic_oscillator(10.0, 1.2), ValidationError);
  EXPECT_THROW(cubic_oscillator(10.0, 0.9, {0.9, 0.2}), ValidationError);
  EXPECT_THROW(cubic_oscillator(10.0, 0.9, {0.9}), ValidationError);
}

TEST(LtiModel, RejectsInconsistentShapes) {
  EXPECT_THROW(make_lti_model("bad", Matrix::identity(2), Matrix(3, 1), Matrix(1, 2)), ValidationError);
  EXPECT_THROW(make_lti_model("bad", Matrix::identity(2), Matrix(2, 1), Matrix(1, 3)), ValidationError);
}
