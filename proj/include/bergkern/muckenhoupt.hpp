#pragma once

// Cell-based checks of the matrix A-infinity conditions, the local A2 constant, and the
// good/bad cube dichotomy for 2x2 polynomial potentials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"
#include "grid.hpp"
#include "matrix_potential.hpp"

namespace bergkern {

struct cube {
  std::vector<double> center;
  double side = 1;
};

enum class cell_rule { midpoint, gauss };

struct muckenhoupt_options {
  double delta = 0.5;
  double c = 0.5;
  double alpha = 0.5;
  double beta = 0.1;
  int cells_per_axis = 64;
  cell_rule rule = cell_rule::midpoint;
  int random_subsets = 200;
  int directions = 64;
  std::uint64_t seed = 1;
  double order_tol = 1e-10;  // A >= B iff lambda_min(A - B) >= -order_tol ||A||
  bool a2 = false;
};

struct muckenhoupt_cube {
  cube q;
  double level_fraction = 0;   // |{V >= delta avg V}| / |Q|
  bool level_pass = false;
  double subset_margin = 0;    // min over tested A of lambda_min(int_A V - beta int_Q V) / ||int_Q V||
  bool subset_pass = false;
  double a2 = std::numeric_limits<double>::quiet_NaN();
};

struct muckenhoupt_report {
  std::vector<muckenhoupt_cube> cubes;
  bool level_condition = true;   // every cube passes the level-set condition
  bool subset_condition = true;  // every cube passes the large-subset condition
  double a2 = std::numeric_limits<double>::quiet_NaN();  // sup over cubes when requested
};

namespace detail {

inline double hermitian_lambda_min(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Cell values V(center) (midpoint) or 3-point Gauss cell averages, all cells of equal measure.
inline std::vector<Eigen::MatrixXcd> cell_values(const matrix_potential& V, const cube& q, int n, cell_rule rule) {
  const int d = V.dim;
  std::size_t count = 1;
  for (int k = 0; k < d; ++k) count *= n;
  std::vector<Eigen::MatrixXcd> out(count);
  const double h = q.side / n;
  using G = boost::math::quadrature::gauss<double, 3>;
  std::vector<double> gx, gw;
  for (double a : G::abscissa()) {
    gx.push_back(a), gw.push_back(a == 0 ? G::weights()[0] : G::weights()[1]);
    if (a != 0) gx.push_back(-a), gw.push_back(G::weights()[1]);
  }
  parallel_for(count, [&](std::size_t i) {
    std::vector<double> c(d);
    std::size_t r = i;
    for (int k = 0; k < d; ++k) {
      c[k] = q.center[k] - q.side / 2 + (static_cast<double>(r % n) + 0.5) * h;
      r /= n;
    }
    if (rule == cell_rule::midpoint) {
      out[i] = V.eval(c);
      return;
    }
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(V.size, V.size);
    std::size_t nodes = 1;
    for (int k = 0; k < d; ++k) nodes *= gx.size();
    std::vector<double> x(d);
    for (std::size_t t = 0; t < nodes; ++t) {
      std::size_t rr = t;
      double w = 1;
      for (int k = 0; k < d; ++k) {
        const std::size_t g = rr % gx.size();
        rr /= gx.size();
        x[k] = c[k] + 0.5 * h * gx[g];
        w *= 0.5 * gw[g];
      }
      s += w * V.eval(x);
    }
    out[i] = s;
  });
  return out;
}

inline bool matrix_geq(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, double tol) {
  const double scale = std::max(a.norm(), b.norm());
  return hermitian_lambda_min(a - b) >= -tol * scale;
}

inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// ||avg(W)^{1/2} avg(W^{-1})^{1/2}|| over the cells of Q.
inline double a2_constant(const matrix_potential& W, const cube& q, int cells_per_axis = 64,
                          cell_rule rule = cell_rule::midpoint) {
  const auto vals = detail::cell_values(W, q, cells_per_axis, rule);
  Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(W.size, W.size), inv = avg;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto& v = vals[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (v + v.adjoint()));
    const double lo = es.eigenvalues()(0), hi = std::abs(es.eigenvalues()(W.size - 1));
    if (!(lo > 1e-13 * std::max(hi, 1e-300)))
      throw error(errc::singular_inverse, "potential not invertible in cell " + std::to_string(i));
    avg += v;
    inv += es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  }
  avg /= static_cast<double>(vals.size());
  inv /= static_cast<double>(vals.size());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(detail::psd_sqrt(avg) * detail::psd_sqrt(inv));
  return svd.singularValues()(0);
}

/// Both A-infinity conditions on each cube. The level-set condition counts cells with
/// V(cell) >= delta avg_Q V; the large-subset condition tries random unions of at least
/// alpha|Q| cells and, for sampled directions u, the cells with the smallest (V u, u).
/// A failure is definitive at the cell resolution; a pass is evidence only.
inline muckenhoupt_report muckenhoupt_diagnostics(const matrix_potential& V, const std::vector<cube>& cubes,
                                                  const muckenhoupt_options& o = {}) {
  if (!(o.alpha > 0 && o.alpha < 1 && o.beta > 0 && o.beta < 1 && o.delta > 0 && o.c > 0))
    throw error(errc::invalid_argument, "A-infinity parameters out of range");
  muckenhoupt_report rep;
  std::mt19937_64 rng(o.seed);
  const int m = V.size;
  for (const auto& q : cubes) {
    if (static_cast<int>(q.center.size()) != V.dim) throw error(errc::invalid_argument, "cube dimension mismatch");
    muckenhoupt_cube r;
    r.q = q;
    const auto vals = detail::cell_values(V, q, o.cells_per_axis, o.rule);
    const std::size_t n = vals.size();
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(m, m);
    for (const auto& v : vals) total += v;
    const Eigen::MatrixXcd avg = total / static_cast<double>(n);

    std::size_t good = 0;
    for (const auto& v : vals)
      if (detail::matrix_geq(v, o.delta * avg, o.order_tol)) ++good;
    r.level_fraction = static_cast<double>(good) / n;
    r.level_pass = r.level_fraction >= o.c;

    const std::size_t need = static_cast<std::size_t>(std::ceil(o.alpha * n - 1e-9));
    const double scale = std::max(total.norm(), 1e-300);
    r.subset_margin = std::numeric_limits<double>::infinity();
    auto test = [&](const std::vector<std::size_t>& idx) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(m, m);
      for (std::size_t i : idx) s += vals[i];
      r.subset_margin = std::min(r.subset_margin, detail::hermitian_lambda_min(s - o.beta * total) / scale);
    };
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < o.random_subsets; ++t) {
      std::shuffle(perm.begin(), perm.end(), rng);
      test({perm.begin(), perm.begin() + need});
    }
    std::normal_distribution<double> g;
    std::vector<double> score(n);
    for (int t = 0; t < o.directions; ++t) {
      Eigen::VectorXcd u(m);
      for (int a = 0; a < m; ++a) u(a) = {g(rng), g(rng)};
      u.normalize();
      for (std::size_t i = 0; i < n; ++i) score[i] = (u.adjoint() * vals[i] * u)(0).real();
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
      test({idx.begin(), idx.begin() + need});
    }
    r.subset_pass = r.subset_margin >= -o.order_tol;
    if (o.a2) r.a2 = a2_constant(V, q, o.cells_per_axis, o.rule);
    rep.level_condition = rep.level_condition && r.level_pass;
    rep.subset_condition = rep.subset_condition && r.subset_pass;
    if (o.a2) rep.a2 = std::isnan(rep.a2) ? r.a2 : std::max(rep.a2, r.a2);
    rep.cubes.push_back(std::move(r));
  }
  return rep;
}

enum class cube_kind { good, bad, isotropic };

inline const char* cube_kind_name(cube_kind k) {
  switch (k) {
    case cube_kind::good: return "Good";
    case cube_kind::bad: return "Bad";
    case cube_kind::isotropic: return "Isotropic";
  }
  return "Unknown";
}

struct cube_classification {
  cube_kind kind = cube_kind::good;
  cube witness;
  int depth = 0;             // dyadic depth of the witness relative to the input cube
  double min_ratio = 0;      // min over witness samples of lambda / mu
  double mu_spread = 0;      // sup mu / inf mu over witness samples
};

struct classify_options {
  int max_depth = 10;
  int samples_per_axis = 9;  // includes the corners
};

/// Finds a dyadic subcube on which p1 = tr^2/8 - det has a strict sign at every sample. Good
/// when p1 < 0 (then mu <= 8 lambda). Bad when p1 > 0 (then 2 lambda <= mu), refined further
/// until sup mu <= 4 inf mu. Isotropic only for the zero potential.
inline cube_classification classify_cube(const poly_matrix<exact_rational>& V, const cube& q,
                                         const classify_options& o = {}) {
  if (V.size != 2) throw error(errc::invalid_argument, "classification needs a 2x2 potential");
  if (!V.symmetric()) throw error(errc::invalid_argument, "potential not symmetric");
  const int d = V.dim();
  if (static_cast<int>(q.center.size()) != d) throw error(errc::invalid_argument, "cube dimension mismatch");
  const auto tr = V.trace();
  const auto det = V.det2();
  const auto p1 = exact_rational(1, 8) * tr * tr - det;
  cube_classification out;
  bool zero = true;
  for (const auto& e : V.entries) zero = zero && e.is_zero();
  if (zero) {
    out.kind = cube_kind::isotropic;
    out.witness = q;
    out.mu_spread = 1;
    out.min_ratio = 1;
    return out;
  }

  struct stats {
    bool neg = true, pos = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    double mu_lo = std::numeric_limits<double>::infinity(), mu_hi = 0;
  };
  auto sample = [&](const cube& c) {
    stats s;
    const int n = o.samples_per_axis;
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= n;
    std::vector<double> x(d);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t r = t;
      for (int k = 0; k < d; ++k) {
        x[k] = c.center[k] - c.side / 2 + c.side * static_cast<double>(r % n) / (n - 1);
        r /= n;
      }
      const double v = p1(x);
      s.neg = s.neg && v < 0;
      s.pos = s.pos && v > 0;
      const double trv = tr(x), detv = det(x);
      const double disc = std::sqrt(std::max(trv * trv - 4 * detv, 0.0));
      const double mu = 0.5 * (trv + disc), lam = mu > 0 ? detv / mu : 0.0;
      s.min_ratio = std::min(s.min_ratio, mu > 0 ? lam / mu : 0.0);
      s.mu_lo = std::min(s.mu_lo, mu);
      s.mu_hi = std::max(s.mu_hi, mu);
    }
    return s;
  };
  auto children = [&](const cube& c) {
    std::vector<cube> kids;
    const std::size_t count = std::size_t(1) << d;
    for (std::size_t t = 0; t < count; ++t) {
      cube k{c.center, c.side / 2};
      for (int a = 0; a < d; ++a) k.center[a] += ((t >> a) & 1 ? 0.25 : -0.25) * c.side;
      kids.push_back(std::move(k));
    }
    return kids;
  };

  std::vector<cube> level{q};
  for (int depth = 0; depth <= o.max_depth; ++depth) {
    for (const auto& c : level) {
      const auto s = sample(c);
      if (s.neg) {
        out.kind = cube_kind::good;
        out.witness = c;
        out.depth = depth;
        out.min_ratio = s.min_ratio;
        out.mu_spread = s.mu_hi / s.mu_lo;
        return out;
      }
      if (!s.pos) continue;
      // mu is within a factor 2 of tr here; search for a subcube where it varies by at most 4
      std::vector<std::pair<cube, int>> stack{{c, depth}};
      for (std::size_t i = 0; i < stack.size(); ++i) {
        const auto [b, bd] = stack[i];
        const auto bs = sample(b);
        if (bs.mu_lo > 0 && bs.mu_hi <= 4 * bs.mu_lo) {
          out.kind = cube_kind::bad;
          out.witness = b;
          out.depth = bd;
          out.min_ratio = bs.min_ratio;
          out.mu_spread = bs.mu_hi / bs.mu_lo;
          return out;
        }
        if (bd < o.max_depth)
          for (auto& k : children(b)) stack.emplace_back(std::move(k), bd + 1);
      }
    }
    std::vector<cube> next;
    for (const auto& c : level)
      for (auto& k : children(c)) next.push_back(std::move(k));
    level = std::move(next);
    if (level.size() > (std::size_t(1) << 20)) break;
  }
  throw error(errc::no_clean_subcube, "no subcube with a strict sign of tr^2/8 - det up to depth " +
                                          std::to_string(o.max_depth));
}

}  // namespace bergkern
