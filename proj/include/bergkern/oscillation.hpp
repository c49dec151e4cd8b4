#pragma once

// Oscillation of piecewise-constant subspace-valued maps, its brute-force oracle, triadic
// tilings built from a pattern on the unit cube, and the potentials they induce.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "grid.hpp"
#include "matrix_potential.hpp"

namespace bergkern {

struct subspace_piece {
  double weight = 0;
  Eigen::MatrixXcd basis;  // m x k, orthonormal columns
};

struct subspace_partition {
  int m = 0;
  std::vector<subspace_piece> pieces;
};

/// Orthonormal basis of the span of the columns; rank decided at 1e-10 relative.
inline Eigen::MatrixXcd orthonormal_span(const Eigen::MatrixXcd& vectors) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(vectors);
  qr.setThreshold(1e-10);
  const auto r = qr.rank();
  if (r == 0) throw error(errc::invalid_argument, "subspace spanned by zero vectors");
  Eigen::MatrixXcd q = qr.householderQ();
  return q.leftCols(r);
}

/// Partition from raw weights (normalized to sum 1) and spanning vectors per piece.
inline subspace_partition make_partition(const std::vector<double>& weights,
                                         const std::vector<Eigen::MatrixXcd>& spans) {
  if (weights.size() != spans.size() || weights.empty())
    throw error(errc::invalid_argument, "one spanning set per weight required");
  double total = 0;
  for (double w : weights) {
    if (!(w > 0)) throw error(errc::invalid_argument, "piece weights must be positive");
    total += w;
  }
  subspace_partition p;
  p.m = static_cast<int>(spans.front().rows());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (spans[j].rows() != p.m) throw error(errc::invalid_argument, "subspaces live in different dimensions");
    p.pieces.push_back({weights[j] / total, orthonormal_span(spans[j])});
  }
  return p;
}

inline void validate(const subspace_partition& p) {
  double total = 0;
  for (const auto& piece : p.pieces) {
    if (!(piece.weight > 0)) throw error(errc::invalid_argument, "piece weight not positive");
    total += piece.weight;
    const auto k = piece.basis.cols();
    if (piece.basis.rows() != p.m || k < 1 || k > p.m)
      throw error(errc::invalid_argument, "piece subspace has invalid shape");
    if (!(piece.basis.adjoint() * piece.basis).isIdentity(1e-12))
      throw error(errc::invalid_argument, "piece basis not orthonormal");
  }
  if (p.pieces.empty() || std::abs(total - 1) > 1e-12)
    throw error(errc::invalid_argument, "piece weights must sum to 1");
}

namespace detail {

// f(u) = sum_j w_j |P_j u| with the projections stored densely.
struct section_objective {
  int m = 0;
  std::vector<double> w;
  std::vector<Eigen::MatrixXcd> proj;

  explicit section_objective(const subspace_partition& p) : m(p.m) {
    for (const auto& piece : p.pieces) {
      w.push_back(piece.weight);
      proj.push_back(piece.basis * piece.basis.adjoint());
    }
  }

  double operator()(const std::complex<double>* u) const {
    double s = 0;
    for (std::size_t j = 0; j < proj.size(); ++j) {
      const auto& P = proj[j];
      double q = 0;
      for (int a = 0; a < m; ++a) {
        std::complex<double> acc = 0;
        for (int b = 0; b < m; ++b) acc += P(a, b) * u[b];
        q += (std::conj(u[a]) * acc).real();
      }
      s += w[j] * std::sqrt(std::max(q, 0.0));
    }
    return s;
  }
};

inline double omega_from_section(double f) { return std::sqrt(std::max(0.0, 1 - f * f)); }

}  // namespace detail

struct oscillation_options {
  int starts = 16;
  double tol = 1e-10;
  int max_iter = 500;
  std::uint64_t seed = 1;
  bool certify = false;  // fill oracle_gap when m <= 3
};

struct oscillation_result {
  double omega = 0;
  Eigen::VectorXcd maximizer;
  int iterations = 0;
  double oracle_gap = std::numeric_limits<double>::quiet_NaN();
};

inline double oscillation_oracle(const subspace_partition& p);

/// omega^2 = 1 - (max over unit u of sum_j w_j |P_j u|)^2. The maximum of this convex,
/// degree-one homogeneous function is found by the ascent u <- grad f(u) / |grad f(u)|.
inline oscillation_result oscillation(const subspace_partition& p, const oscillation_options& o = {}) {
  validate(p);
  const detail::section_objective f(p);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> g;
  oscillation_result best;
  double best_f = -1;
  for (int s = 0; s < o.starts; ++s) {
    Eigen::VectorXcd u(p.m);
    for (int a = 0; a < p.m; ++a) u(a) = {g(rng), g(rng)};
    u.normalize();
    double fu = f(u.data());
    for (int it = 0; it < o.max_iter; ++it) {
      Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(p.m);
      for (std::size_t j = 0; j < f.proj.size(); ++j) {
        const Eigen::VectorXcd pu = f.proj[j] * u;
        grad += f.w[j] * pu / std::max(pu.norm(), o.tol);
      }
      ++best.iterations;
      const double n = grad.norm();
      if (n == 0) break;
      u = grad / n;
      const double next = f(u.data());
      const bool done = std::abs(next - fu) <= o.tol;
      fu = next;
      if (done) break;
    }
    if (fu > best_f) {
      best_f = fu;
      best.maximizer = u;
    }
  }
  best.omega = detail::omega_from_section(std::min(best_f, 1.0));
  if (o.certify && p.m <= 3) best.oracle_gap = std::abs(best.omega - oscillation_oracle(p));
  return best;
}

namespace detail {

// Phase-reduced coordinates of the unit sphere of C^m for m = 2, 3.
inline void sphere_point(int m, const double* t, std::complex<double>* u) {
  if (m == 2) {
    u[0] = std::cos(t[0]);
    u[1] = std::polar(std::sin(t[0]), t[1]);
  } else {
    u[0] = std::cos(t[0]);
    u[1] = std::polar(std::sin(t[0]) * std::cos(t[1]), t[2]);
    u[2] = std::polar(std::sin(t[0]) * std::sin(t[1]), t[3]);
  }
}

}  // namespace detail

/// Brute-force omega for m <= 3: a coarse grid over the phase-reduced sphere, a 0.015 rad grid
/// around the best coarse points, then coordinatewise golden-section polishing to stagnation.
inline double oscillation_oracle(const subspace_partition& p) {
  validate(p);
  if (p.m > 3) throw error(errc::dimension_too_large, "oracle supports m <= 3, got " + std::to_string(p.m));
  if (p.m == 1) return 0.0;  // every piece is all of C
  const detail::section_objective f(p);
  const int nt = p.m == 2 ? 2 : 4;
  std::vector<double> hi(nt), lo(nt, 0.0);
  std::vector<bool> periodic(nt);
  for (int k = 0; k < nt; ++k) {
    const bool angle = p.m == 2 ? k == 0 : k < 2;
    hi[k] = angle ? M_PI / 2 : 2 * M_PI;
    periodic[k] = !angle;
  }
  auto eval = [&](const double* t) {
    std::complex<double> u[3];
    detail::sphere_point(p.m, t, u);
    return f(u);
  };

  const double coarse = 0.15;
  std::vector<int> count(nt);
  std::size_t total = 1;
  for (int k = 0; k < nt; ++k) {
    count[k] = periodic[k] ? static_cast<int>(std::ceil(hi[k] / coarse))
                           : static_cast<int>(std::ceil(hi[k] / coarse)) + 1;
    total *= count[k];
  }
  auto coarse_point = [&](std::size_t idx, double* t) {
    for (int k = 0; k < nt; ++k) {
      const int i = static_cast<int>(idx % count[k]);
      idx /= count[k];
      t[k] = periodic[k] ? i * hi[k] / count[k] : i * hi[k] / (count[k] - 1);
    }
  };
  std::vector<double> values(total);
  parallel_for(total, [&](std::size_t i) {
    double t[4];
    coarse_point(i, t);
    values[i] = eval(t);
  });
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  const std::size_t keep = std::min<std::size_t>(8, total);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });

  auto clamp = [&](int k, double v) { return periodic[k] ? v : std::clamp(v, lo[k], hi[k]); };
  double best = 0;
  const double fine = 0.015;
  const int half = 5;  // +- 5 fine steps covers half a coarse step
  for (std::size_t c = 0; c < keep; ++c) {
    double t0[4], t[4], bt[4];
    coarse_point(order[c], t0);
    double bf = -1;
    std::size_t local = 1;
    for (int k = 0; k < nt; ++k) local *= 2 * half + 1;
    for (std::size_t idx = 0; idx < local; ++idx) {
      std::size_t r = idx;
      for (int k = 0; k < nt; ++k) {
        t[k] = clamp(k, t0[k] + (static_cast<int>(r % (2 * half + 1)) - half) * fine);
        r /= 2 * half + 1;
      }
      const double v = eval(t);
      if (v > bf) bf = v, std::copy(t, t + nt, bt);
    }
    // coordinate sweeps crawl along curved ridges, so repeat until a sweep stops helping
    for (int sweep = 0; sweep < 400; ++sweep) {
      const double before = bf;
      for (int k = 0; k < nt; ++k) {
        double a = bt[k] - fine, b = bt[k] + fine;
        const double gr = (std::sqrt(5.0) - 1) / 2;
        auto at = [&](double v) {
          double tt[4];
          std::copy(bt, bt + nt, tt);
          tt[k] = clamp(k, v);
          return eval(tt);
        };
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a), f1 = at(x1), f2 = at(x2);
        for (int it = 0; it < 40; ++it) {
          if (f1 > f2) {
            b = x2, x2 = x1, f2 = f1, x1 = b - gr * (b - a), f1 = at(x1);
          } else {
            a = x1, x1 = x2, f1 = f2, x2 = a + gr * (b - a), f2 = at(x2);
          }
        }
        const double xm = clamp(k, 0.5 * (a + b)), fm = at(xm);
        if (fm > bf) bf = fm, bt[k] = xm;
      }
      if (sweep >= 3 && bf - before <= 1e-16) break;
    }
    best = std::max(best, bf);
  }
  return detail::omega_from_section(std::min(best, 1.0));
}

struct delta_report {
  double delta = 0;  // 1 - max_j min_{k != j} ||P_k P_j||
  double eta = 0;    // smallest piece weight
  double bound = 0;  // sqrt(delta * eta), a lower bound for omega
};

/// Every piece j has another piece k with ||P_k P_j|| <= 1 - delta, so no unit vector can be
/// close to both subspaces; with eta the smallest weight this forces omega >= sqrt(delta eta).
inline delta_report delta_bound(const subspace_partition& p) {
  validate(p);
  delta_report r;
  r.eta = 1;
  for (const auto& piece : p.pieces) r.eta = std::min(r.eta, piece.weight);
  if (p.pieces.size() < 2) return r;
  double worst = 0;
  for (std::size_t j = 0; j < p.pieces.size(); ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.pieces.size(); ++k) {
      if (k == j) continue;
      const Eigen::MatrixXcd c = p.pieces[k].basis.adjoint() * p.pieces[j].basis;
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(c);
      nearest = std::min(nearest, svd.singularValues()(0));
    }
    worst = std::max(worst, nearest);
  }
  r.delta = std::max(0.0, 1 - worst);
  r.bound = std::sqrt(r.delta * r.eta);
  return r;
}

/// A subspace-valued map on Q(0,1) = [-1/2, 1/2]^d, constant on each of res^d equal cells.
struct cell_pattern {
  int dim = 1;
  int res = 1;
  int m = 1;
  std::vector<int> cells;                  // subspace index per cell, first axis fastest
  std::vector<Eigen::MatrixXcd> subspaces;  // orthonormal bases

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(res);
    return n;
  }
};

inline void validate(const cell_pattern& t) {
  if (t.dim < 1 || t.res < 1 || t.cells.size() != t.cell_count())
    throw error(errc::invalid_argument, "pattern cell table has the wrong size");
  for (int c : t.cells)
    if (c < 0 || c >= static_cast<int>(t.subspaces.size()))
      throw error(errc::invalid_argument, "pattern cell refers to a missing subspace");
  for (const auto& b : t.subspaces)
    if (b.rows() != t.m || b.cols() < 1 || !(b.adjoint() * b).isIdentity(1e-12))
      throw error(errc::invalid_argument, "pattern subspace basis invalid");
}

/// Partition of Q(0,1) by pattern subspace with cell-count weights.
inline subspace_partition pattern_partition(const cell_pattern& t) {
  validate(t);
  std::vector<std::size_t> count(t.subspaces.size(), 0);
  for (int c : t.cells) ++count[c];
  subspace_partition p;
  p.m = t.m;
  for (std::size_t s = 0; s < count.size(); ++s)
    if (count[s]) p.pieces.push_back({static_cast<double>(count[s]) / t.cells.size(), t.subspaces[s]});
  return p;
}

/// Pattern of two alternating subspaces in a checkerboard of res^d cells.
inline cell_pattern checkerboard_pattern(int dim, int res, const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  cell_pattern t;
  t.dim = dim;
  t.res = res;
  t.m = static_cast<int>(a.rows());
  t.subspaces = {orthonormal_span(a), orthonormal_span(b)};
  t.cells.resize(t.cell_count());
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    std::size_t r = i;
    int parity = 0;
    for (int k = 0; k < dim; ++k) {
      parity += static_cast<int>(r % res);
      r /= res;
    }
    t.cells[i] = parity % 2;
  }
  return t;
}

namespace detail {

inline std::int64_t pow3(int k) {
  std::int64_t p = 1;
  for (int i = 0; i < k; ++i) p *= 3;
  return p;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail

/// The pattern copied onto a triadic good grid: the unit cube Q(y,1), y in Z^d, is split into
/// 3^j equal subcubes per axis with j = floor(log_3(1 + |y|_inf)), and each subcube carries a
/// rescaled copy of the pattern. Centered cubes of side 3^-k nest in these subcubes, so every
/// lattice cube Q(x 3^-k, 3^-k) with level j >= k is a union of whole copies.
struct tiled_field {
  cell_pattern pattern;
  int max_level = 18;

  int level(std::int64_t y_sup) const {
    int j = 0;
    while (j < max_level && detail::pow3(j + 1) <= 1 + y_sup) ++j;
    return j;
  }

  /// Index of the pattern subspace at x.
  int piece_at(const std::vector<double>& x) const {
    const int d = pattern.dim;
    std::vector<std::int64_t> y(d);
    std::int64_t ysup = 0;
    for (int k = 0; k < d; ++k) {
      y[k] = static_cast<std::int64_t>(std::llround(x[k]));
      ysup = std::max(ysup, std::abs(y[k]));
    }
    const int j = level(ysup);
    const double s = 1.0 / static_cast<double>(detail::pow3(j));
    std::size_t cell = 0, stride = 1;
    for (int k = 0; k < d; ++k) {
      const double off = x[k] - (static_cast<double>(y[k]) - 0.5);
      const std::int64_t n = detail::pow3(j);
      const std::int64_t q = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(off / s)), 0, n - 1);
      const double xi = off / s - static_cast<double>(q);  // in [0, 1)
      const int c = std::clamp(static_cast<int>(std::floor(xi * pattern.res)), 0, pattern.res - 1);
      cell += c * stride;
      stride *= pattern.res;
    }
    return pattern.cells[cell];
  }

  Eigen::MatrixXcd projection_at(const std::vector<double>& x) const {
    const auto& b = pattern.subspaces[piece_at(x)];
    return b * b.adjoint();
  }

  /// Measure fraction of each pattern subspace inside the lattice cube Q(x 3^-k, 3^-k), x in Z^d.
  std::vector<double> lattice_weights(const std::vector<std::int64_t>& x, int k) const {
    const int d = pattern.dim;
    const std::int64_t p3k = detail::pow3(k);
    std::vector<std::int64_t> u(d);
    std::int64_t ysup = 0;
    for (int i = 0; i < d; ++i) {
      const std::int64_t y = detail::floor_div(x[i] + (p3k - 1) / 2, p3k);
      u[i] = x[i] - p3k * y + (p3k - 1) / 2;  // lattice index inside Q(y, 1)
      ysup = std::max(ysup, std::abs(y));
    }
    std::vector<double> w(pattern.subspaces.size(), 0.0);
    const std::size_t n = pattern.cell_count();
    if (level(ysup) >= k) {
      for (int c : pattern.cells) w[c] += 1.0 / n;
      return w;
    }
    // the cube sits inside one subcube and covers [r, r+1] / 3^(k-j) of it per axis
    const std::int64_t ratio = detail::pow3(k - level(ysup));
    std::vector<std::vector<double>> overlap(d, std::vector<double>(pattern.res, 0.0));
    for (int i = 0; i < d; ++i) {
      const std::int64_t r = u[i] % ratio;
      const double a = static_cast<double>(r) / ratio, b = static_cast<double>(r + 1) / ratio;
      for (int c = 0; c < pattern.res; ++c) {
        const double lo = std::max(a, static_cast<double>(c) / pattern.res);
        const double hi = std::min(b, static_cast<double>(c + 1) / pattern.res);
        overlap[i][c] = std::max(0.0, hi - lo) * ratio;
      }
    }
    for (std::size_t cell = 0; cell < n; ++cell) {
      std::size_t r = cell;
      double v = 1;
      for (int i = 0; i < d && v > 0; ++i) {
        v *= overlap[i][r % pattern.res];
        r /= pattern.res;
      }
      if (v > 0) w[pattern.cells[cell]] += v;
    }
    return w;
  }

  subspace_partition partition_from_weights(const std::vector<double>& w) const {
    subspace_partition p;
    p.m = pattern.m;
    double total = 0;
    for (double v : w) total += v;
    for (std::size_t s = 0; s < w.size(); ++s)
      if (w[s] > 1e-14 * total) p.pieces.push_back({w[s] / total, pattern.subspaces[s]});
    return p;
  }

  subspace_partition lattice_partition(const std::vector<std::int64_t>& x, int k) const {
    return partition_from_weights(lattice_weights(x, k));
  }
};

struct shell_oscillation {
  double radius = 0;
  double omega = 0;         // min over the lattice cubes meeting the shell
  std::size_t cubes = 0;    // lattice cubes meeting the shell
  std::size_t sampled = 0;  // of which evaluated
  bool matches_pattern = false;
};

struct asymptotic_report {
  double scale = 0;
  double pattern_omega = 0;
  std::vector<shell_oscillation> shells;
};

/// For each radius r, min of omega(Q(x l, l)) over lattice cubes meeting {|y|_inf = r}, with
/// l = 3^-k. Shells with more than `max_cubes` cubes are subsampled with a fixed stride.
inline asymptotic_report asymptotic_oscillation(const tiled_field& field, int k, const std::vector<double>& radii,
                                                const oscillation_options& o = {},
                                                std::size_t max_cubes = 20000) {
  validate(field.pattern);
  const int d = field.pattern.dim;
  const double ell = 1.0 / static_cast<double>(detail::pow3(k));
  asymptotic_report rep;
  rep.scale = ell;
  rep.pattern_omega = oscillation(pattern_partition(field.pattern), o).omega;
  std::map<std::string, double> cache;
  auto omega_of = [&](const std::vector<double>& w) {
    std::string key;
    for (double v : w) key += std::to_string(std::llround(v * 1e12)) + ";";
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double omega = oscillation(field.partition_from_weights(w), o).omega;
    cache.emplace(key, omega);
    return omega;
  };
  for (double r : radii) {
    shell_oscillation sh;
    sh.radius = r;
    sh.omega = std::numeric_limits<double>::infinity();
    // cubes meeting the sphere have |x|_inf l within l/2 of r
    const auto klo = static_cast<std::int64_t>(std::ceil(r / ell - 0.5));
    const auto khi = static_cast<std::int64_t>(std::floor(r / ell + 0.5));
    for (std::int64_t K = std::max<std::int64_t>(klo, 0); K <= khi; ++K) {
      // points with |x|_inf = K: face i has x_i = +-K, |x_j| < K for j < i
      std::vector<std::size_t> face_size(d);
      std::size_t total = 0;
      for (int i = 0; i < d; ++i) {
        std::size_t s = K == 0 ? (i == 0 ? 1 : 0) : 2;
        for (int jj = 0; jj < d; ++jj)
          if (jj != i) s *= static_cast<std::size_t>(jj < i ? 2 * K - 1 : 2 * K + 1);
        face_size[i] = s;
        total += s;
      }
      sh.cubes += total;
      const std::size_t stride = std::max<std::size_t>(1, (total + max_cubes - 1) / max_cubes);
      for (std::size_t t = 0; t < total; t += stride) {
        std::size_t rem = t;
        int face = 0;
        while (rem >= face_size[face]) rem -= face_size[face++];
        std::vector<std::int64_t> x(d);
        if (K == 0) {
          std::fill(x.begin(), x.end(), 0);
        } else {
          x[face] = (rem % 2) ? K : -K;
          rem /= 2;
          for (int jj = 0; jj < d; ++jj) {
            if (jj == face) continue;
            const std::int64_t span = jj < face ? 2 * K - 1 : 2 * K + 1;
            x[jj] = static_cast<std::int64_t>(rem % span) - (span - 1) / 2;
            rem /= span;
          }
        }
        sh.omega = std::min(sh.omega, omega_of(field.lattice_weights(x, k)));
        ++sh.sampled;
      }
    }
    sh.matches_pattern = std::abs(sh.omega - rep.pattern_omega) <= 1e-8;
    rep.shells.push_back(sh);
  }
  return rep;
}

/// V(x) = nu(x) (I - P(x)), with P(x) the projection onto the tiled subspace at x.
inline matrix_potential build_potential(const tiled_field& field,
                                        std::function<double(const std::vector<double>&)> nu) {
  validate(field.pattern);
  matrix_potential v;
  v.dim = field.pattern.dim;
  v.size = field.pattern.m;
  v.eval = [field, nu = std::move(nu)](const std::vector<double>& x) {
    const int m = field.pattern.m;
    Eigen::MatrixXcd r = nu(x) * (Eigen::MatrixXcd::Identity(m, m) - field.projection_at(x));
    return r;
  };
  return v;
}

}  // namespace bergkern
