#pragma once

// Kohn energy of (0,1)-forms for model weights on C^N (N = 1, 2), the equivalent magnetic
// Schrodinger energy, and coercivity scans over seeded test forms.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "grid.hpp"
#include "newton_diagram.hpp"
#include "quadrature.hpp"
#include "schrodinger.hpp"

namespace bergkern {

/// phi(z) = sum over exponent tuples e of prod_k |z_k|^{2 e_k}.
template <int N>
struct model_weight {
  using point = std::array<std::complex<double>, N>;
  using matrix = Eigen::Matrix<std::complex<double>, N, N>;
  std::vector<std::array<int, N>> exps;

  double value(const point& z) const {
    double s = 0;
    for (const auto& e : exps) {
      double t = 1;
      for (int k = 0; k < N; ++k) t *= ipow_abs2(z[k], e[k]);
      s += t;
    }
    return s;
  }

  /// d phi / d zbar_k.
  point dbar(const point& z) const {
    point g{};
    for (const auto& e : exps)
      for (int k = 0; k < N; ++k) {
        if (e[k] == 0) continue;
        std::complex<double> t = static_cast<double>(e[k]) * z[k] * ipow_abs2(z[k], e[k] - 1);
        for (int l = 0; l < N; ++l)
          if (l != k) t *= ipow_abs2(z[l], e[l]);
        g[k] += t;
      }
    return g;
  }

  /// H_jk = d^2 phi / dz_j dzbar_k.
  matrix hessian(const point& z) const {
    matrix h = matrix::Zero();
    for (const auto& e : exps)
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) {
          if (e[j] == 0 || e[k] == 0) continue;
          std::complex<double> t;
          if (j == k) {
            t = static_cast<double>(e[k]) * e[k] * ipow_abs2(z[k], e[k] - 1);
          } else {
            t = static_cast<double>(e[j]) * e[k] * std::conj(z[j]) * z[k] *
                ipow_abs2(z[j], e[j] - 1) * ipow_abs2(z[k], e[k] - 1);
          }
          for (int l = 0; l < N; ++l)
            if (l != j && l != k) t *= ipow_abs2(z[l], e[l]);
          h(j, k) += t;
        }
    return h;
  }

 private:
  static double ipow_abs2(const std::complex<double>& z, int e) {
    const double x = std::norm(z);
    double r = 1;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }
};

inline model_weight<2> weight_from_set(const monomial_set& g) {
  model_weight<2> w;
  for (const auto& e : g) w.exps.push_back({e.alpha, e.beta});
  return w;
}

/// Real coordinates (x_1, y_1, ..., x_N, y_N) to complex ones.
template <int N>
std::array<std::complex<double>, N> to_complex(const double* t) {
  std::array<std::complex<double>, N> z;
  for (int k = 0; k < N; ++k) z[k] = {t[2 * k], t[2 * k + 1]};
  return z;
}

/// u_j = (c_j0 + sum_r c_jr xi_r) prod_r (1 - xi_r^2)^3 with xi_r = (t_r - center_r)/half_r,
/// supported on the cube |xi| <= 1.
template <int N>
struct test_form {
  static constexpr int R = 2 * N;
  std::array<double, R> center{};
  std::array<double, R> half{};
  std::array<std::array<std::complex<double>, R + 1>, N> coef{};

  struct sample {
    std::array<std::complex<double>, N> u;
    std::array<std::array<std::complex<double>, R>, N> grad;  // real partials d/dt_r
  };

  sample eval(const double* t) const {
    std::array<double, R> xi, b, db;
    double bump = 1;
    for (int r = 0; r < R; ++r) {
      xi[r] = (t[r] - center[r]) / half[r];
      const double s = 1 - xi[r] * xi[r];
      b[r] = s * s * s;
      db[r] = -6 * xi[r] * s * s / half[r];
      bump *= b[r];
    }
    sample out;
    for (int j = 0; j < N; ++j) {
      std::complex<double> p = coef[j][0];
      for (int r = 0; r < R; ++r) p += coef[j][r + 1] * xi[r];
      out.u[j] = p * bump;
      for (int r = 0; r < R; ++r) {
        double others = 1;
        for (int q = 0; q < R; ++q)
          if (q != r) others *= b[q];
        out.grad[j][r] = coef[j][r + 1] / half[r] * bump + p * db[r] * others;
      }
    }
    return out;
  }

  /// d u_j / d zbar_k = (d/dx_k + i d/dy_k) u_j / 2.
  static std::complex<double> dbar(const sample& s, int j, int k) {
    return 0.5 * (s.grad[j][2 * k] + std::complex<double>(0, 1) * s.grad[j][2 * k + 1]);
  }
};

/// Tensor Gauss-Legendre nodes over the support cube of a form.
template <int N, class F>
void for_form_nodes(const test_form<N>& u, int panels, F&& visit) {
  constexpr int R = 2 * N;
  std::array<rule1d, R> rules;
  for (int r = 0; r < R; ++r)
    rules[r] = composite_gauss<15>(u.center[r] - u.half[r], u.center[r] + u.half[r], panels);
  const std::size_t q = rules[0].x.size();
  std::array<std::size_t, R> ix{};
  std::array<double, R> t;
  for (;;) {
    double w = 1;
    for (int r = 0; r < R; ++r) {
      t[r] = rules[r].x[ix[r]];
      w *= rules[r].w[ix[r]];
    }
    visit(t.data(), w);
    int r = 0;
    while (r < R && ++ix[r] == q) ix[r] = 0, ++r;
    if (r == R) break;
  }
}

struct energy_parts {
  double dbar = 0;      // sum_jk int |d u_j / d zbar_k|^2 e^{-2(phi - shift)}
  double hessian = 0;   // 2 int (H u, u) e^{-2(phi - shift)}
  double mass = 0;      // int |u|^2 e^{-2(phi - shift)}
  double mu_mass = 0;   // int mu^2 |u|^2 e^{-2(phi - shift)}
  double shift = 0;     // every integral carries the factor e^{2 shift}
  double energy() const { return dbar + hessian; }
};

template <int N>
void check_support(const test_form<N>& u, double box) {
  for (int r = 0; r < 2 * N; ++r)
    if (std::abs(u.center[r]) + u.half[r] > box)
      throw error(errc::support_escapes_box, "form support leaves the quadrature box");
}

/// Morrey-Kohn-Hormander energy sum_jk ||dbar_k u_j||^2 + 2 (H u, u) in L^2(e^{-2 phi}),
/// all integrals scaled by e^{2 shift} with shift = phi(center) to avoid underflow.
template <int N>
energy_parts energy_form(const model_weight<N>& phi, const test_form<N>& u, double box,
                         int panels = 1,
                         const std::function<double(const std::array<std::complex<double>, N>&)>& mu = {}) {
  check_support(u, box);
  energy_parts e;
  e.shift = phi.value(to_complex<N>(u.center.data()));
  for_form_nodes(u, panels, [&](const double* t, double w) {
    const auto z = to_complex<N>(t);
    const double weight = w * std::exp(-2 * (phi.value(z) - e.shift));
    if (weight == 0) return;
    const auto s = u.eval(t);
    const auto H = phi.hessian(z);
    double d = 0, m = 0;
    Eigen::Matrix<std::complex<double>, N, 1> uv;
    for (int j = 0; j < N; ++j) {
      uv(j) = s.u[j];
      m += std::norm(s.u[j]);
      for (int k = 0; k < N; ++k) d += std::norm(test_form<N>::dbar(s, j, k));
    }
    e.dbar += weight * d;
    e.hessian += weight * 2 * (uv.adjoint() * H * uv)(0).real();
    e.mass += weight * m;
    if (mu) {
      const double mv = mu(z);
      e.mu_mass += weight * mv * mv * m;
    }
  });
  return e;
}

struct equivalence_report {
  double kohn = 0;         // sum |dbar_k u_j + (dbar_k phi) u_j|^2 + 2 (H u, u), unweighted
  double schrodinger = 0;  // (1/4)(|grad_A u|^2 + (V u, u)), unweighted
  double discrepancy = 0;  // relative
};

/// Compares the Kohn energy of e^{phi} u in L^2(e^{-2phi}) with the quarter magnetic
/// Schrodinger energy of u, with A = (-phi_y, phi_x) in each coordinate plane and
/// V = 8H - 4 tr(H) I. All integrands are polynomial, so the quadrature is exact.
template <int N>
equivalence_report equivalence_check(const model_weight<N>& phi, const test_form<N>& u, double box,
                                     int panels = 1) {
  check_support(u, box);
  const std::complex<double> I(0, 1);
  equivalence_report rep;
  for_form_nodes(u, panels, [&](const double* t, double w) {
    const auto z = to_complex<N>(t);
    const auto s = u.eval(t);
    const auto g = phi.dbar(z);
    const auto H = phi.hessian(z);
    Eigen::Matrix<std::complex<double>, N, 1> uv;
    for (int j = 0; j < N; ++j) uv(j) = s.u[j];
    double lhs = 2 * (uv.adjoint() * H * uv)(0).real();
    double kin = 0;
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        lhs += std::norm(test_form<N>::dbar(s, j, k) + g[k] * s.u[j]);
        const double phx = 2 * g[k].real(), phy = 2 * g[k].imag();
        kin += std::norm(s.grad[j][2 * k] + I * phy * s.u[j]);   // d/dx - i A_x with A_x = -phi_y
        kin += std::norm(s.grad[j][2 * k + 1] - I * phx * s.u[j]);  // d/dy - i A_y with A_y = phi_x
      }
    const auto V = (8.0 * H - 4.0 * H.trace() * decltype(H)::Identity()).eval();
    const double pot = (uv.adjoint() * V * uv)(0).real();
    rep.kohn += w * lhs;
    rep.schrodinger += w * 0.25 * (kin + pot);
  });
  rep.discrepancy = std::abs(rep.kohn - rep.schrodinger) /
                    std::max({std::abs(rep.kohn), std::abs(rep.schrodinger), 1e-300});
  return rep;
}

/// Quarter of the lattice magnetic Schrodinger operator equivalent to the Kohn Laplacian,
/// on a grid over R^{2N} with coordinates (x_1, y_1, ..., x_N, y_N).
template <int N>
grid_operator kohn_operator(const model_weight<N>& phi, const box_grid& g,
                            std::size_t budget = kOperatorBudget) {
  if (g.dim() != 2 * N) throw error(errc::invalid_argument, "grid must have dimension 2N");
  matrix_potential V;
  V.dim = 2 * N;
  V.size = N;
  V.eval = [phi](const std::vector<double>& x) {
    const auto H = phi.hessian(to_complex<N>(x.data()));
    Eigen::MatrixXcd v = 8.0 * H - 4.0 * H.trace() * Eigen::MatrixXcd::Identity(N, N);
    return v;
  };
  magnetic_fn A = [phi](int k, const std::vector<double>& x) {
    const auto gz = phi.dbar(to_complex<N>(x.data()));
    const int plane = k / 2;
    return k % 2 == 0 ? -2 * gz[plane].imag() : 2 * gz[plane].real();
  };
  return assemble_operator(V, A, g, 0.25, budget);
}

struct coercivity_options {
  int family = 64;
  std::uint64_t seed = 1;
  double center_box = 1.5;   // centers uniform in [-center_box, center_box]^{2N}
  double half_min = 0.4;
  double half_max = 1.2;
  int panels = 1;
};

struct coercivity_report {
  double min_ratio = 0;
  std::size_t argmin = 0;
  std::vector<double> ratios;
};

/// Seeded family of test forms; the first k forms do not depend on the family size.
template <int N>
std::vector<test_form<N>> make_test_family(const coercivity_options& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> c(-o.center_box, o.center_box), h(o.half_min, o.half_max);
  std::normal_distribution<double> g;
  std::vector<test_form<N>> out(o.family);
  for (auto& u : out) {
    for (int r = 0; r < 2 * N; ++r) u.center[r] = c(rng);
    const double half = h(rng);
    for (int r = 0; r < 2 * N; ++r) u.half[r] = half;
    for (auto& row : u.coef)
      for (auto& a : row) a = {g(rng), g(rng)};
  }
  return out;
}

/// min over the family of E(u) / int mu^2 |u|^2 e^{-2 phi}, mu = 1 + |z|^sigma + |w|^tau.
inline coercivity_report coercivity_scan(const homogeneous_profile& pr, const coercivity_options& o) {
  // the profile may be swapped; the weight and mu are expressed in profile coordinates
  const auto phi = weight_from_set(pr.gamma);
  const double s = to_double(pr.sigma), t = to_double(pr.tau);
  auto mu = [s, t](const std::array<std::complex<double>, 2>& z) {
    return 1 + std::pow(std::abs(z[0]), s) + std::pow(std::abs(z[1]), t);
  };
  const auto family = make_test_family<2>(o);
  coercivity_report rep;
  rep.ratios.resize(family.size());
  const double box = o.center_box + o.half_max;
  parallel_for(family.size(), [&](std::size_t i) {
    const auto e = energy_form<2>(phi, family[i], box, o.panels, mu);
    rep.ratios[i] = e.energy() / e.mu_mass;
  });
  rep.argmin = 0;
  for (std::size_t i = 0; i < rep.ratios.size(); ++i)
    if (rep.ratios[i] < rep.ratios[rep.argmin]) rep.argmin = i;
  rep.min_ratio = rep.ratios[rep.argmin];
  if (!(rep.min_ratio > 0))
    throw error(errc::non_positive_ratio, "form " + std::to_string(rep.argmin) + " has ratio " +
                                              std::to_string(rep.min_ratio));
  return rep;
}

}  // namespace bergkern
