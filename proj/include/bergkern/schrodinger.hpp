#pragma once

// Lattice magnetic matrix Schrodinger operators and spectral diagnostics of matrix potentials.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "eigensolver.hpp"
#include "grid.hpp"
#include "matrix_potential.hpp"

namespace bergkern {

/// Component k of the magnetic potential A at x.
using magnetic_fn = std::function<double(int k, const std::vector<double>& x)>;

struct grid_operator {
  box_grid grid;
  int components = 1;
  double factor = 1;
  sparse_matrix matrix;
};

inline constexpr std::size_t kOperatorBudget = 4'000'000;

/// factor * (-Delta_A + V) on the interior nodes of `g` with Dirichlet data outside.
/// Each edge carries the link phase exp(-i h A_k(midpoint)), so the quadratic form is
/// sum over edges of |psi(x+h e_k) e^{-i h A_k} - psi(x)|^2 / h^2 plus sum (V psi, psi).
inline grid_operator assemble_operator(const matrix_potential& V, const magnetic_fn& A,
                                       const box_grid& g, double factor = 1.0,
                                       std::size_t budget = kOperatorBudget) {
  const int d = g.dim(), m = V.size;
  const std::size_t nodes = g.size();
  if (V.dim != d) throw error(errc::invalid_argument, "potential dimension differs from grid");
  if (nodes * static_cast<std::size_t>(m) > budget)
    throw error(errc::budget_exceeded, "operator size " + std::to_string(nodes * m) +
                                           " exceeds budget " + std::to_string(budget));
  using trip = Eigen::Triplet<std::complex<double>>;
  std::vector<std::vector<trip>> per(nodes);
  parallel_for(nodes, [&](std::size_t i) {
    std::vector<int> ix(d);
    g.unravel(i, ix.data());
    auto x = g.coords(i);
    auto& out = per[i];
    double lap = 0;
    for (int k = 0; k < d; ++k) lap += 2.0 / (g.h[k] * g.h[k]);
    const Eigen::MatrixXcd v = V.eval(x);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        std::complex<double> val = factor * v(a, b);
        if (a == b) val += factor * lap;
        if (val != 0.0) out.emplace_back(i * m + a, i * m + b, val);
      }
    for (int k = 0; k < d; ++k) {
      if (ix[k] + 1 >= g.n[k]) continue;
      ix[k] += 1;
      const std::size_t j = g.ravel(ix.data());
      ix[k] -= 1;
      auto mid = x;
      mid[k] += 0.5 * g.h[k];
      const double theta = g.h[k] * (A ? A(k, mid) : 0.0);
      const std::complex<double> link = -factor * std::polar(1.0, -theta) / (g.h[k] * g.h[k]);
      for (int a = 0; a < m; ++a) {
        out.emplace_back(i * m + a, j * m + a, link);
        out.emplace_back(j * m + a, i * m + a, std::conj(link));
      }
    }
  });
  std::vector<trip> all;
  for (auto& p : per) all.insert(all.end(), p.begin(), p.end());
  grid_operator op;
  op.grid = g;
  op.components = m;
  op.factor = factor;
  op.matrix.resize(nodes * m, nodes * m);
  op.matrix.setFromTriplets(all.begin(), all.end());
  return op;
}

/// psi^* H psi / psi^* psi.
inline double rayleigh_quotient(const grid_operator& op, const Eigen::VectorXcd& psi) {
  return (psi.adjoint() * (op.matrix * psi))(0).real() / psi.squaredNorm();
}

/// Largest deviation from Hermitian symmetry.
inline double hermitian_defect(const sparse_matrix& H) {
  sparse_matrix D = H - sparse_matrix(H.adjoint());
  double worst = 0;
  for (int c = 0; c < D.outerSize(); ++c)
    for (sparse_matrix::InnerIterator it(D, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

struct discreteness_entry {
  std::vector<exact_rational> center;
  Eigen::MatrixXd integral;             // of V over Q(center, side)
  std::vector<exact_rational> exact;    // same, row-major, exact
  double lambda = 0;                    // smallest eigenvalue of the integral
  double normalized = 0;                // lambda / |center|^2, 0 at the origin
};

/// lambda of the integral of V over Q(x, side) for each center, exactly integrated.
inline std::vector<discreteness_entry> discreteness_profile(const matrix_potential& V,
                                                            const exact_rational& side,
                                                            const std::vector<std::vector<exact_rational>>& centers) {
  if (!V.exact) throw error(errc::invalid_argument, "discreteness profile needs polynomial entries");
  std::vector<discreteness_entry> out;
  for (const auto& c : centers) {
    discreteness_entry e;
    e.center = c;
    e.integral = cube_integral(*V.exact, c, side, &e.exact);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.integral, Eigen::EigenvaluesOnly);
    e.lambda = es.eigenvalues()(0);
    double r2 = 0;
    for (const auto& ck : c) r2 += static_cast<double>(ck) * static_cast<double>(ck);
    e.normalized = r2 > 0 ? e.lambda / r2 : 0.0;
    out.push_back(std::move(e));
  }
  return out;
}

/// A complex function with its gradient, evaluated at a point of R^d.
struct function_sample {
  std::complex<double> value;
  std::vector<std::complex<double>> gradient;
};

/// max over samples of |grad |f|| - |grad_A f| with grad_A = grad - iA; positive values violate
/// the diamagnetic inequality. Points with |f| below `zero_tol` are skipped.
inline double diamagnetic_check(const std::function<function_sample(const std::vector<double>&)>& f,
                                const magnetic_fn& A, const std::vector<std::vector<double>>& points,
                                double zero_tol = 1e-12) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const auto s = f(x);
    const double mod = std::abs(s.value);
    if (mod < zero_tol) continue;
    double ga = 0, gm = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const std::complex<double> da = s.gradient[k] - std::complex<double>(0, 1) * A(static_cast<int>(k), x) * s.value;
      ga += std::norm(da);
      const double dm = (std::conj(s.value) * s.gradient[k]).real() / mod;
      gm += dm * dm;
    }
    worst = std::max(worst, std::sqrt(gm) - std::sqrt(ga));
  }
  return worst;
}

}  // namespace bergkern
