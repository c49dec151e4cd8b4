#include <bergkern/muckenhoupt.hpp>
#include <bergkern/oscillation.hpp>

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

using namespace bergkern;

namespace {

Eigen::MatrixXcd e(int m, int k) {
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(m, 1);
  v(k, 0) = 1;
  return v;
}

Eigen::MatrixXcd random_span(std::mt19937_64& rng, int m, int k) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd v(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) v(i, j) = {g(rng), g(rng)};
  return v;
}

subspace_partition random_partition(std::mt19937_64& rng) {
  const int m = std::uniform_int_distribution<int>(2, 3)(rng);
  const int pieces = std::uniform_int_distribution<int>(2, 4)(rng);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::vector<double> ws;
  std::vector<Eigen::MatrixXcd> spans;
  for (int j = 0; j < pieces; ++j) {
    ws.push_back(w(rng));
    spans.push_back(random_span(rng, m, std::uniform_int_distribution<int>(1, m - 1)(rng)));
  }
  return make_partition(ws, spans);
}

TEST(Oscillation, SinglePieceIsZero) {
  std::mt19937_64 rng(1);
  for (int m : {1, 2, 3})
    for (int k = 1; k <= m; ++k) {
      const auto p = make_partition({1.0}, {random_span(rng, m, k)});
      EXPECT_NEAR(oscillation(p).omega, 0.0, 1e-6);
      // omega = sqrt(1 - f^2) turns a 1e-9 error in f into about 4e-5 in omega
      EXPECT_NEAR(oscillation_oracle(p), 0.0, 1e-3);
    }
}

TEST(Oscillation, OrthogonalLinesEqualWeights) {
  const auto p = make_partition({0.5, 0.5}, {e(2, 0), e(2, 1)});
  oscillation_options o;
  o.certify = true;
  const auto r = oscillation(p, o);
  EXPECT_NEAR(r.omega, 1 / std::sqrt(2.0), 1e-9);
  EXPECT_LE(r.oracle_gap, 1e-3);
  EXPECT_NEAR(oscillation_oracle(p), 1 / std::sqrt(2.0), 1e-3);
  // omega^2 = 1 - (sum w_j |P_j u*|)^2 at the reported maximizer
  const auto& u = r.maximizer;
  const double f = 0.5 * std::abs(u(0)) + 0.5 * std::abs(u(1));
  EXPECT_NEAR(r.omega * r.omega, 1 - f * f, 1e-9);
  const auto d = delta_bound(p);
  EXPECT_NEAR(d.delta, 1.0, 1e-12);
  EXPECT_NEAR(d.bound, r.omega, 1e-9);
}

TEST(Oscillation, OrthogonalLinesUnequalWeights) {
  const auto p = make_partition({2.0, 1.0}, {e(2, 0), e(2, 1)});
  EXPECT_NEAR(oscillation(p).omega, 2.0 / 3, 1e-9);
  EXPECT_NEAR(oscillation_oracle(p), 2.0 / 3, 1e-3);
}

TEST(Oscillation, OracleRejectsLargeDimension) {
  const auto p = make_partition({1.0, 1.0}, {e(4, 0), e(4, 1)});
  try {
    oscillation_oracle(p);
    FAIL();
  } catch (const error& err) {
    EXPECT_EQ(err.code(), errc::dimension_too_large);
  }
  EXPECT_NEAR(oscillation(p).omega, 1 / std::sqrt(2.0), 1e-9);
}

TEST(Oscillation, SolverMatchesOracleAndDeltaBound) {
  std::mt19937_64 rng(7);
  double worst_gap = 0, worst_bound = -1;
  for (int t = 0; t < 100; ++t) {
    const auto p = random_partition(rng);
    const double w = oscillation(p).omega;
    worst_gap = std::max(worst_gap, std::abs(w - oscillation_oracle(p)));
    worst_bound = std::max(worst_bound, delta_bound(p).bound - w);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
  }
  EXPECT_LE(worst_gap, 1e-3);
  EXPECT_LE(worst_bound, 1e-9);
}

TEST(Oscillation, ZeroExactlyWhenSubspacesShareAVector) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXcd v = random_span(rng, 3, 1);
    std::vector<double> ws;
    std::vector<Eigen::MatrixXcd> spans, lines;
    for (int j = 0; j < 3; ++j) {
      ws.push_back(w(rng));
      Eigen::MatrixXcd s(3, 2);
      s << v, random_span(rng, 3, 1);
      spans.push_back(j == 0 ? v : s);
      lines.push_back(random_span(rng, 3, 2));
    }
    const auto shared = make_partition(ws, spans);
    EXPECT_LT(oscillation(shared).omega, 1e-4);
    EXPECT_LT(oscillation_oracle(shared), 1e-3);
    // three generic planes in C^3 meet only in 0
    const auto generic = make_partition(ws, lines);
    EXPECT_GT(oscillation(generic).omega, 1e-3);
    EXPECT_GT(oscillation_oracle(generic), 1e-3);
  }
}

TEST(Oscillation, RearrangementInvariance) {
  std::mt19937_64 rng(9);
  oscillation_options o;
  o.tol = 1e-14;
  for (int t = 0; t < 10; ++t) {
    const auto p = random_partition(rng);
    auto q = p;
    std::reverse(q.pieces.begin(), q.pieces.end());
    auto split = q;
    split.pieces[0].weight *= 0.5;
    split.pieces.push_back(split.pieces[0]);
    const double w = oscillation(p, o).omega;
    EXPECT_NEAR(oscillation(q, o).omega, w, 1e-10);
    EXPECT_NEAR(oscillation(split, o).omega, w, 1e-10);
  }
}

TEST(Oscillation, RejectsBadPartition) {
  subspace_partition p;
  p.m = 2;
  p.pieces.push_back({0.7, e(2, 0)});
  EXPECT_THROW(oscillation(p), error);
  p.pieces[0].weight = 1;
  p.pieces[0].basis *= 2;
  EXPECT_THROW(oscillation(p), error);
}

tiled_field two_line_field(int dim) {
  return tiled_field{checkerboard_pattern(dim, 2, e(2, 0), e(2, 1))};
}

TEST(Tiling, PatternPartitionOfCheckerboard) {
  const auto p = pattern_partition(two_line_field(2).pattern);
  ASSERT_EQ(p.pieces.size(), 2u);
  EXPECT_DOUBLE_EQ(p.pieces[0].weight, 0.5);
}

TEST(Tiling, ShellsRecoverPatternOscillation) {
  const auto field = two_line_field(2);
  for (int k : {1, 2}) {
    const auto rep = asymptotic_oscillation(field, k, {30.0, 100.0});
    EXPECT_NEAR(rep.pattern_omega, 1 / std::sqrt(2.0), 1e-9);
    for (const auto& sh : rep.shells) {
      EXPECT_TRUE(sh.matches_pattern) << "k=" << k << " r=" << sh.radius << " omega=" << sh.omega;
      EXPECT_EQ(sh.sampled, sh.cubes);
      EXPECT_GT(sh.cubes, 0u);
    }
  }
}

TEST(Tiling, NearOriginCubesSeeOnePiece) {
  // scale 1/9 near the origin lies inside a single pattern cell of the level-0 copy
  const auto rep = asymptotic_oscillation(two_line_field(2), 2, {0.5});
  EXPECT_NEAR(rep.shells[0].omega, 0.0, 1e-6);
}

TEST(Tiling, ConstantFieldHasNoOscillation) {
  cell_pattern t;
  t.dim = 2;
  t.res = 3;
  t.m = 2;
  t.subspaces = {e(2, 0)};
  t.cells.assign(9, 0);
  const auto rep = asymptotic_oscillation(tiled_field{t}, 1, {5.0, 20.0});
  for (const auto& sh : rep.shells) EXPECT_NEAR(sh.omega, 0.0, 1e-6);
}

TEST(Tiling, LatticeWeightsMatchPointSampling) {
  const auto field = two_line_field(2);
  std::mt19937_64 rng(4);
  for (const std::vector<std::int64_t>& x : {std::vector<std::int64_t>{0, 0}, {1, 2}, {40, -7}, {-100, 3}}) {
    const int k = 2;
    const double ell = 1.0 / 9;
    const auto w = field.lattice_weights(x, k);
    std::vector<double> count(2, 0);
    const int n = 90;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::vector<double> p{x[0] * ell + ((i + 0.5) / n - 0.5) * ell, x[1] * ell + ((j + 0.5) / n - 0.5) * ell};
        count[field.piece_at(p)] += 1.0 / (n * n);
      }
    EXPECT_NEAR(count[0], w[0], 1e-9);
    EXPECT_NEAR(count[1], w[1], 1e-9);
  }
}

TEST(Potential, ConstantLineGivesDiagonal) {
  cell_pattern t;
  t.dim = 1;
  t.res = 1;
  t.m = 2;
  t.subspaces = {e(2, 0)};
  t.cells = {0};
  const auto V = build_potential(tiled_field{t}, [](const std::vector<double>&) { return 1.0; });
  for (double x : {-3.2, 0.0, 0.4, 17.0}) {
    const auto v = V.eval({x});
    EXPECT_NEAR((v - Eigen::Matrix2cd{{0, 0}, {0, 1}}).norm(), 0.0, 1e-15);
  }
}

TEST(Potential, TwoSubspaceTilingHasRankOneAndZeroLambda) {
  const auto field = two_line_field(2);
  const auto V = build_potential(field, [](const std::vector<double>& x) { return 1 + x[0] * x[0] + x[1] * x[1]; });
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 2000; ++t) {
    const std::vector<double> x{u(rng), u(rng)};
    const auto v = V.eval(x);
    EXPECT_NEAR(lambda_min(v), 0.0, 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(v);
    EXPECT_GT(es.eigenvalues()(1), 0.5);
    EXPECT_LE((v - v.adjoint()).norm(), 1e-14);
  }
}

poly_matrix<exact_rational> w0() {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = poly::constant(1, 1);
  m(0, 1) = poly::monomial(1, {1}, 1);
  m(1, 0) = m(0, 1);
  m(1, 1) = poly::monomial(1, {2}, 1);
  return m;
}

TEST(Muckenhoupt, IdentityIsInEveryClass) {
  const auto I = polynomial_potential([] {
    poly_matrix<exact_rational> m(2, 2);
    m(0, 0) = m(1, 1) = polynomial<exact_rational>::constant(2, 1);
    return m;
  }());
  muckenhoupt_options o;
  o.delta = o.c = 1;
  o.cells_per_axis = 8;
  o.a2 = true;
  const auto rep = muckenhoupt_diagnostics(I, {{{0.0, 0.0}, 1.0}, {{3.0, -1.0}, 0.25}}, o);
  EXPECT_TRUE(rep.level_condition);
  EXPECT_TRUE(rep.subset_condition);
  EXPECT_NEAR(rep.a2, 1.0, 1e-12);
}

TEST(Muckenhoupt, RankDeficientPolynomialSeparatesTheClasses) {
  const auto W = polynomial_potential(w0());
  const std::vector<cube> cubes{{{0.5}, 1.0}, {{0.25}, 0.5}, {{0.75}, 0.5}, {{0.375}, 0.25}, {{-2.0}, 0.125}};
  for (double delta : {0.5, 0.1, 1e-2, 1e-3}) {
    muckenhoupt_options o;
    o.delta = delta;
    o.c = 1e-3;
    // worst half-measure subset ratio is about 0.067, reached for (W u, u) = (x - 0.2)^2
    o.alpha = 0.5;
    o.beta = 0.05;
    const auto rep = muckenhoupt_diagnostics(W, cubes, o);
    EXPECT_FALSE(rep.level_condition) << delta;
    for (const auto& c : rep.cubes) EXPECT_EQ(c.level_fraction, 0.0);
    EXPECT_TRUE(rep.subset_condition) << delta;
  }
  muckenhoupt_options tight;
  tight.beta = 0.08;
  EXPECT_FALSE(muckenhoupt_diagnostics(W, {{{0.5}, 1.0}}, tight).subset_condition);
}

TEST(Muckenhoupt, RankDeficientAverageOnUnitInterval) {
  std::vector<exact_rational> ex;
  const auto m = cube_integral(w0(), {exact_rational(1, 2)}, exact_rational(1), &ex);
  EXPECT_EQ(ex[0], exact_rational(1));
  EXPECT_EQ(ex[1], exact_rational(1, 2));
  EXPECT_EQ(ex[3], exact_rational(1, 3));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  EXPECT_NEAR(es.eigenvalues()(0), (4 - std::sqrt(13.0)) / 6, 1e-15);
  EXPECT_NEAR(es.eigenvalues()(0), 0.06574, 1e-5);
}

TEST(Muckenhoupt, SingularWeightHasNoA2Constant) {
  try {
    a2_constant(polynomial_potential(w0()), {{0.5}, 1.0});
    FAIL();
  } catch (const error& err) {
    EXPECT_EQ(err.code(), errc::singular_inverse);
  }
}

TEST(Muckenhoupt, LevelConditionImpliesSubsetCondition) {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = poly::constant(1, 1) + poly::monomial(1, {2}, 1);
  m(0, 1) = poly::monomial(1, {1}, 1);
  m(1, 0) = m(0, 1);
  m(1, 1) = poly::constant(1, exact_rational(1, 2)) + poly::monomial(1, {4}, 1);
  const auto V = polynomial_potential(m);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-3, 3), s(0.1, 2);
  std::vector<cube> cubes;
  for (int t = 0; t < 20; ++t) cubes.push_back({{c(rng)}, s(rng)});
  for (double delta : {0.3, 0.6}) {
    muckenhoupt_options o;
    o.delta = delta;
    o.c = 1e-9;
    const auto first = muckenhoupt_diagnostics(V, cubes, o);
    double cmin = 1;
    for (const auto& q : first.cubes) cmin = std::min(cmin, q.level_fraction);
    ASSERT_GT(cmin, 0.0);
    o.c = cmin;
    o.alpha = 1 - cmin / 2;
    o.beta = cmin * delta / 2;
    const auto rep = muckenhoupt_diagnostics(V, cubes, o);
    EXPECT_TRUE(rep.level_condition);
    EXPECT_TRUE(rep.subset_condition);
  }
}

TEST(Muckenhoupt, ScalarPolynomialDoubling) {
  // int_Q x^2 <= D int_{Q'} x^2 for Q' of half the side inside Q
  using poly = polynomial<exact_rational>;
  const auto p = poly::monomial(1, {2}, 1);
  double D = 0;
  for (int c = -40; c <= 40; ++c)
    for (int side : {1, 2, 4}) {
      const exact_rational center(c, 8), sd(side, 4);
      const auto big = p.integrate_cube({center}, sd);
      for (int off : {-1, 1}) {
        const auto small = p.integrate_cube({center + exact_rational(off) * sd / 4}, sd / 2);
        D = std::max(D, static_cast<double>(big / small));
      }
    }
  EXPECT_LT(D, 20.0);
  EXPECT_GE(D, 2.0);
}

TEST(Muckenhoupt, GaussCellsMatchExactAverage) {
  const auto W = polynomial_potential(w0());
  const auto cells = detail::cell_values(W, {{0.5}, 1.0}, 4, cell_rule::gauss);
  Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(2, 2);
  for (const auto& c : cells) avg += c / 4.0;
  EXPECT_NEAR(avg(1, 1).real(), 1.0 / 3, 1e-14);
  EXPECT_NEAR(avg(0, 1).real(), 0.5, 1e-14);
}

poly_matrix<exact_rational> iso_quadratic() {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = m(1, 1) = poly::monomial(1, {2}, 1);
  return m;
}

TEST(ClassifyCube, IsotropicQuadraticIsGood) {
  const auto r = classify_cube(iso_quadratic(), {{3.0}, 1.0});
  EXPECT_EQ(r.kind, cube_kind::good);
  EXPECT_GE(r.min_ratio, 1.0 / 8);
  // the origin forces a subdivision
  const auto r0 = classify_cube(iso_quadratic(), {{0.0}, 1.0});
  EXPECT_EQ(r0.kind, cube_kind::good);
  EXPECT_GT(r0.depth, 0);
}

poly_matrix<exact_rational> v0() {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(1, 2);
  m(0, 0) = poly::monomial(1, {4}, 1);
  m(0, 1) = m(1, 0) = poly::monomial(1, {5}, 1);
  m(1, 1) = poly::monomial(1, {6}, 1);
  return m;
}

TEST(ClassifyCube, CounterexampleIsBad) {
  const auto r = classify_cube(v0(), {{0.0}, 1.0});
  EXPECT_EQ(r.kind, cube_kind::bad);
  EXPECT_LE(r.mu_spread, 4.0);
  EXPECT_LE(r.min_ratio, 0.5);
  EXPECT_GT(r.depth, 0);
  EXPECT_GE(r.witness.center[0] - r.witness.side / 2, -0.5);
  EXPECT_LE(r.witness.center[0] + r.witness.side / 2, 0.5);
}

TEST(ClassifyCube, ConstantDiagonalIsGood) {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(2, 2);
  m(0, 0) = poly::constant(2, 1);
  m(1, 1) = poly::constant(2, 2);
  const auto r = classify_cube(m, {{0.0, 0.0}, 1.0});
  EXPECT_EQ(r.kind, cube_kind::good);
  EXPECT_EQ(r.depth, 0);
  EXPECT_NEAR(r.min_ratio, 0.5, 1e-15);
}

TEST(ClassifyCube, ZeroPotentialIsIsotropic) {
  EXPECT_EQ(classify_cube(poly_matrix<exact_rational>(1, 2), {{0.0}, 1.0}).kind, cube_kind::isotropic);
}

TEST(ClassifyCube, DepthExhausted) {
  classify_options o;
  o.max_depth = 0;
  try {
    classify_cube(v0(), {{0.0}, 1.0}, o);
    FAIL();
  } catch (const error& err) {
    EXPECT_EQ(err.code(), errc::no_clean_subcube);
  }
}

}  // namespace
