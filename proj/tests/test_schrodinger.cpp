#include <bergkern/schrodinger.hpp>

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <random>

using namespace bergkern;

namespace {

using poly = polynomial<exact_rational>;

poly x_pow(int k) { return poly::monomial(1, {k}, exact_rational(1)); }

poly_matrix<exact_rational> v0() {
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = x_pow(4);
  m(0, 1) = x_pow(5);
  m(1, 0) = x_pow(5);
  m(1, 1) = x_pow(6);
  return m;
}

sparse_matrix laplacian_1d(int n, double h) {
  auto g = interior_grid({0.0}, {1.0}, {n});
  g.h[0] = h;
  return assemble_operator(zero_potential(1, 1), {}, g).matrix;
}

TEST(CubeIntegral, MatchesGaussOracle) {
  // p(x, y) = 3 x^2 y - x y^3 + 5 over a random cube
  poly p = poly::monomial(2, {2, 1}, 3) - poly::monomial(2, {1, 3}, 1) + poly::constant(2, 5);
  const std::vector<exact_rational> c{exact_rational(3, 7), exact_rational(-5, 4)};
  const exact_rational side(2, 3);
  const double exact = static_cast<double>(p.integrate_cube(c, side));
  using G = boost::math::quadrature::gauss<double, 10>;
  const double cx = static_cast<double>(c[0]), cy = static_cast<double>(c[1]), s = 1.0 / 3;
  const double q = G::integrate([&](double x) {
    return G::integrate([&](double y) { return p(std::vector<double>{x, y}); }, cy - s, cy + s);
  }, cx - s, cx + s);
  EXPECT_NEAR(exact, q, 1e-12 * std::abs(q));
}

TEST(Discreteness, CounterexampleAtOrigin) {
  const auto V = polynomial_potential(v0());
  const auto prof = discreteness_profile(V, exact_rational(1), {{exact_rational(0)}});
  ASSERT_EQ(prof.size(), 1u);
  const auto& e = prof[0].exact;
  EXPECT_EQ(e[0], exact_rational(1, 80));
  EXPECT_EQ(e[1], exact_rational(0));
  EXPECT_EQ(e[2], exact_rational(0));
  EXPECT_EQ(e[3], exact_rational(1, 448));
  EXPECT_DOUBLE_EQ(prof[0].lambda, 1.0 / 448);
}

TEST(Discreteness, CounterexampleFarOut) {
  const auto V = polynomial_potential(v0());
  const auto prof = discreteness_profile(V, exact_rational(1), {{exact_rational(100)}});
  EXPECT_NEAR(prof[0].normalized * 12, 1.0, 0.02);
  EXPECT_GE(prof[0].normalized, 0.98 / 12);
}

TEST(Discreteness, IsotropicQuadratic) {
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = x_pow(2);
  m(1, 1) = x_pow(2);
  const auto V = polynomial_potential(m);
  for (int x : {0, 1, 7, 50}) {
    const auto prof = discreteness_profile(V, exact_rational(1), {{exact_rational(x)}});
    EXPECT_NEAR(prof[0].lambda, x * x + 1.0 / 12, 1e-12 * (x * x + 1.0));
    EXPECT_EQ(prof[0].exact[0], exact_rational(x * x) + exact_rational(1, 12));
  }
}

TEST(Eigensolver, IdentityGivesOnes) {
  const int n = 1000;
  sparse_matrix I(n, n);
  I.setIdentity();
  const auto rep = extremal_eigenvalues(I, 3);
  ASSERT_EQ(rep.eigenvalues.size(), 3u);
  for (double l : rep.eigenvalues) EXPECT_NEAR(l, 1.0, 1e-12);
  EXPECT_GT(rep.iterations, 0);
}

TEST(Eigensolver, DiscreteLaplacianClosedForm) {
  const int n = 1000;
  const double h = 1.0 / (n + 1);
  const auto rep = extremal_eigenvalues(laplacian_1d(n, h), 4);
  for (int k = 1; k <= 4; ++k) {
    const double exact = 2 * (1 - std::cos(k * M_PI / (n + 1))) / (h * h);
    EXPECT_NEAR(rep.eigenvalues[k - 1], exact, 1e-10 * exact) << k;
    EXPECT_LE(rep.residuals[k - 1], 1e-8);
  }
}

TEST(Eigensolver, HarmonicOscillator) {
  auto g = interior_grid_spacing({-8.0}, {8.0}, 0.02);
  auto op = assemble_operator(scalar_potential(1, [](const std::vector<double>& x) { return x[0] * x[0]; }),
                              {}, g);
  const auto rep = extremal_eigenvalues(op.matrix, 2);
  EXPECT_NEAR(rep.eigenvalues[0], 1.0, 0.003);
  EXPECT_NEAR(rep.eigenvalues[1], 3.0, 0.01);
  eigen_options dense;
  dense.dense_limit = 1 << 20;
  const auto oracle = extremal_eigenvalues(op.matrix, 2, nullptr, dense);
  EXPECT_NEAR(rep.eigenvalues[0], oracle.eigenvalues[0], 1e-9);
  EXPECT_NEAR(rep.eigenvalues[1], oracle.eigenvalues[1], 1e-9);
}

TEST(Eigensolver, GeneralizedMatchesDense) {
  const int n = 80;
  auto g = interior_grid({-3.0}, {3.0}, {n});
  auto op = assemble_operator(scalar_potential(1, [](const std::vector<double>& x) { return 1 + x[0] * x[0]; }),
                              {}, g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m(i) = u(rng);
  eigen_options lanczos;
  lanczos.dense_limit = 0;
  const auto rep = extremal_eigenvalues(op.matrix, 3, &m, lanczos);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXcd(op.matrix).real(),
                                                               Eigen::MatrixXd(m.asDiagonal()));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(rep.eigenvalues[k], es.eigenvalues()(k), 1e-9 * es.eigenvalues()(k));
}

TEST(Eigensolver, DeterministicUnderSeed) {
  auto g = interior_grid({0.0}, {1.0}, {900});
  auto op = assemble_operator(zero_potential(1, 1), {}, g);
  const auto a = extremal_eigenvalues(op.matrix, 2);
  const auto b = extremal_eigenvalues(op.matrix, 2);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Operator, HermitianAndNonNegative) {
  auto g = interior_grid({-2.0, -2.0}, {2.0, 2.0}, {15, 15});
  poly_matrix<exact_rational> pm(2, 2);
  pm(0, 0) = poly::monomial(2, {2, 0}, 1);
  pm(0, 1) = poly::monomial(2, {1, 1}, 1);
  pm(1, 0) = pm(0, 1);
  pm(1, 1) = poly::monomial(2, {0, 2}, 1);
  const auto V = polynomial_potential(pm);  // (x, y)^T (x, y) >= 0
  magnetic_fn A = [](int k, const std::vector<double>& x) { return k == 0 ? std::sin(x[1]) : x[0] * x[0]; };
  const auto op = assemble_operator(V, A, g);
  EXPECT_LE(hermitian_defect(op.matrix), 1e-12);
  const auto noA = assemble_operator(V, {}, g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXcd psi(op.matrix.rows());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = {n(rng), n(rng)};
    EXPECT_GE(rayleigh_quotient(noA, psi), 0.0);
    EXPECT_GE(rayleigh_quotient(op, psi), 0.0);
  }
  eigen_options o;
  o.dense_limit = 0;
  EXPECT_GE(extremal_eigenvalues(op.matrix, 1, nullptr, o).eigenvalues[0], -1e-10);
}

TEST(Operator, QuadraticFormMatchesLinkEnergy) {
  auto g = interior_grid({0.0, 0.0}, {1.0, 1.0}, {6, 5});
  magnetic_fn A = [](int k, const std::vector<double>& x) { return k == 0 ? 3 * x[1] : -x[0] * x[1]; };
  const auto op = assemble_operator(scalar_potential(2, [](const std::vector<double>& x) { return x[0]; }), A, g);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  Eigen::VectorXcd psi(g.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = {n(rng), n(rng)};
  // direct sum over edges, with zero Dirichlet values beyond the boundary
  double e = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    int ix[2];
    g.unravel(i, ix);
    auto x = g.coords(i);
    e += x[0] * std::norm(psi(i));
    for (int k = 0; k < 2; ++k) {
      for (int side : {-1, 1}) {
        int jx[2] = {ix[0], ix[1]};
        jx[k] += side;
        if (g.inside(jx)) continue;
        e += std::norm(psi(i)) / (g.h[k] * g.h[k]);  // edge to a boundary node
      }
      int jx[2] = {ix[0], ix[1]};
      jx[k] += 1;
      if (!g.inside(jx)) continue;
      auto mid = x;
      mid[k] += 0.5 * g.h[k];
      const auto link = std::polar(1.0, -g.h[k] * A(k, mid));
      e += std::norm(psi(g.ravel(jx)) * link - psi(i)) / (g.h[k] * g.h[k]);
    }
  }
  EXPECT_NEAR(rayleigh_quotient(op, psi) * psi.squaredNorm(), e, 1e-10 * e);
}

TEST(Operator, BudgetExceeded) {
  auto g = interior_grid({0.0, 0.0}, {1.0, 1.0}, {100, 100});
  try {
    assemble_operator(zero_potential(2, 1), {}, g, 1.0, 5000);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::budget_exceeded);
  }
}

TEST(Operator, ScalarizedPotentialIsBelow) {
  auto g = interior_grid({-4.0}, {4.0}, {300});
  poly_matrix<exact_rational> pm(1, 2);
  pm(0, 0) = poly::constant(1, 1) + x_pow(2);
  pm(0, 1) = x_pow(1);
  pm(1, 0) = x_pow(1);
  pm(1, 1) = poly::constant(1, 2) + x_pow(2);
  const auto V = polynomial_potential(pm);
  const auto lam = scalar_potential(1, [&](const std::vector<double>& x) { return lambda_min(V.eval(x)); });
  const double full = extremal_eigenvalues(assemble_operator(V, {}, g).matrix, 1).eigenvalues[0];
  const double scal = extremal_eigenvalues(assemble_operator(lam, {}, g).matrix, 1).eigenvalues[0];
  EXPECT_GE(full, scal - 1e-10);
}

TEST(Landau, LowestLevelOfQuarterOperator) {
  auto g = interior_grid_spacing({-6.0, -6.0}, {6.0, 6.0}, 0.1);
  magnetic_fn A = [](int k, const std::vector<double>& x) { return k == 0 ? -2 * x[1] : 2 * x[0]; };
  const auto op = assemble_operator(scalar_potential(2, [](const std::vector<double>&) { return 4.0; }), A, g, 0.25);
  const auto rep = extremal_eigenvalues(op.matrix, 1);
  EXPECT_NEAR(rep.eigenvalues[0], 2.0, 0.1);
  // the ground state e^{-|z|^2} of the continuum problem
  Eigen::VectorXcd psi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.coords(i);
    psi(i) = std::exp(-(x[0] * x[0] + x[1] * x[1]));
  }
  EXPECT_NEAR(rayleigh_quotient(op, psi), 2.0, 0.1);
  EXPECT_GE(rayleigh_quotient(op, psi), rep.eigenvalues[0] - 1e-9);
}

TEST(Diamagnetic, RealFunctionWithoutField) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<std::vector<double>> pts(1000);
  for (auto& p : pts) p = {u(rng), u(rng)};
  auto f = [](const std::vector<double>& x) {
    const double v = std::sin(x[0]) * std::cos(2 * x[1]) + 0.3 * x[0];
    return function_sample{v, {std::cos(x[0]) * std::cos(2 * x[1]) + 0.3, -2 * std::sin(x[0]) * std::sin(2 * x[1])}};
  };
  magnetic_fn zero = [](int, const std::vector<double>&) { return 0.0; };
  EXPECT_NEAR(diamagnetic_check(f, zero, pts), 0.0, 1e-12);
}

TEST(Diamagnetic, GaugeAlignedPhaseIsEquality) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<std::vector<double>> pts(1000);
  for (auto& p : pts) p = {u(rng), u(rng)};
  // f = r e^{i theta}, theta = x y + x^3, r = 2 + cos x + y^2
  auto f = [](const std::vector<double>& x) {
    const double th = x[0] * x[1] + std::pow(x[0], 3), r = 2 + std::cos(x[0]) + x[1] * x[1];
    const std::complex<double> e = std::polar(1.0, th), I(0, 1);
    const double tx = x[1] + 3 * x[0] * x[0], ty = x[0];
    return function_sample{r * e, {e * (-std::sin(x[0]) + I * r * tx), e * (2 * x[1] + I * r * ty)}};
  };
  magnetic_fn A = [](int k, const std::vector<double>& x) { return k == 0 ? x[1] + 3 * x[0] * x[0] : x[0]; };
  EXPECT_NEAR(diamagnetic_check(f, A, pts), 0.0, 1e-10);
}

TEST(Diamagnetic, RandomFieldsNeverViolate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  std::normal_distribution<double> n;
  double worst = -1;
  for (int trial = 0; trial < 10; ++trial) {
    double a[6], c[4];
    for (double& v : a) v = n(rng);
    for (double& v : c) v = n(rng);
    // f = (c0 + c1 x) + i (c2 y + c3 x y), A = (a0 + a1 y + a2 x^2, a3 x + a4 + a5 y^2)
    auto f = [c](const std::vector<double>& x) {
      const std::complex<double> I(0, 1);
      return function_sample{c[0] + c[1] * x[0] + I * (c[2] * x[1] + c[3] * x[0] * x[1]),
                             {c[1] + I * c[3] * x[1], I * (c[2] + c[3] * x[0])}};
    };
    magnetic_fn A = [a](int k, const std::vector<double>& x) {
      return k == 0 ? a[0] + a[1] * x[1] + a[2] * x[0] * x[0] : a[3] * x[0] + a[4] + a[5] * x[1] * x[1];
    };
    std::vector<std::vector<double>> pts(1000);
    for (auto& p : pts) p = {u(rng), u(rng)};
    worst = std::max(worst, diamagnetic_check(f, A, pts));
  }
  EXPECT_LE(worst, 1e-8);
}

}  // namespace
