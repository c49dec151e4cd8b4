#pragma once

// Weighted Bergman kernels of model weights from monomial moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "grid.hpp"
#include "newton_diagram.hpp"
#include "quadrature.hpp"
#include "radius_metric.hpp"
#include "weight_eval.hpp"

namespace bergkern {

/// c_ab = ||z^a w^b||^2 in L^2(e^{-2 phi}) for a + b <= cutoff.
struct moment_table {
  monomial_set gamma;
  int cutoff = 0;
  std::vector<double> c;
  double quad_tolerance = 0;
  int mz = 0, nw = 0;        // degrees of the pure monomials (m,0) and (0,n)
  double az = 0, bw = 0;     // p(x,y) <= az x^mz + bw y^nw

  static std::size_t index(int a, int b) {
    const std::size_t s = static_cast<std::size_t>(a + b);
    return s * (s + 1) / 2 + static_cast<std::size_t>(b);
  }
  double at(int a, int b) const { return c[index(a, b)]; }
};

namespace detail {

inline cplx cpow(cplx c, int k) {
  cplx r = 1;
  for (int i = 0; i < k; ++i) r *= c;
  return r;
}

/// Point beyond which s^k e^{-2 s^deg} stays below e^{-drop} times its peak.
inline double truncation_point(int k, int deg, double drop = 40.0) {
  auto lg = [&](double s) { return (k > 0 ? k * std::log(s) : 0.0) - 2 * std::pow(s, deg); };
  const double peak = k > 0 ? std::pow(k / (2.0 * deg), 1.0 / deg) : 0.0;
  const double target = (k > 0 ? lg(peak) : 0.0) - drop;
  double hi = std::max(1.0, 2 * peak);
  while (lg(hi) > target) hi *= 2;
  double lo = std::max(peak, 1e-300);
  for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (lg(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

/// log of int_0^inf s^k e^{-2 c s^deg} ds.
inline double log_radial_moment(int k, int deg, double c) {
  const double e = (k + 1.0) / deg;
  return std::lgamma(e) - std::log(static_cast<double>(deg)) - e * std::log(2 * c);
}

/// Terms exp(logt[k]) with eventually decreasing ratios; returns partial sums from the
/// right, tail[k] = sum_{j > k} terms, including a certified geometric remainder.
struct certified_series {
  std::vector<double> term;
  std::vector<double> tail_after;  // tail_after[k] = sum_{j>k}
  double total = 0;

  template <class LogTerm>
  static certified_series build(LogTerm&& logt, int min_len) {
    certified_series s;
    double sum = 0;
    double ratio = 1;
    for (int k = 0; k < 1000000; ++k) {
      const double t = std::exp(logt(k));
      s.term.push_back(t);
      sum += t;
      if (k > 0) ratio = s.term[k - 1] > 0 ? t / s.term[k - 1] : 0;
      if (k >= min_len && ratio < 0.5 && t <= 1e-20 * sum) break;
    }
    const double rem = s.term.back() * ratio / (1 - ratio);
    s.tail_after.assign(s.term.size(), 0);
    double acc = rem;
    for (std::size_t k = s.term.size(); k-- > 0;) {
      s.tail_after[k] = acc;
      acc += s.term[k];
    }
    s.total = acc;
    return s;
  }
  double tail(int k) const {
    if (k < 0) return total;
    if (static_cast<std::size_t>(k) >= tail_after.size()) return tail_after.back();
    return tail_after[k];
  }
};

}  // namespace detail

inline moment_table compute_moments(const monomial_set& gamma, int cutoff, double rel_tol = 1e-10) {
  auto pr = derive_profile(gamma);  // validates homogeneity, hence integrability
  moment_table t;
  t.gamma = gamma;
  t.cutoff = cutoff;
  t.quad_tolerance = rel_tol;
  t.mz = pr.swapped ? pr.ndeg : pr.mdeg;
  t.nw = pr.swapped ? pr.mdeg : pr.ndeg;
  for (const auto& e : gamma) {
    t.az += static_cast<double>(e.alpha) / t.mz;
    t.bw += static_cast<double>(e.beta) / t.nw;
  }
  t.c.assign(moment_table::index(cutoff, 0) + cutoff + 1, 0.0);
  const auto& pts = gamma.points();
  std::vector<std::pair<int, int>> ab;
  for (int s = 0; s <= cutoff; ++s)
    for (int b = 0; b <= s; ++b) ab.push_back({s - b, b});
  parallel_for(ab.size(), [&](std::size_t i) {
    const auto [a, b] = ab[i];
    const double X = detail::truncation_point(a, t.mz), Y = detail::truncation_point(b, t.nw);
    // the y-independent part p(x, 0) is moved to the outer integrand so that the inner
    // integral stays of moderate size for large x
    auto inner = [&](double x) {
      auto f = [&](double y) {
        double p = 0;
        for (const auto& e : pts)
          if (e.beta > 0) p += ipow(x, e.alpha) * ipow(y, e.beta);
        return std::exp((b > 0 ? b * std::log(y) : 0.0) - 2 * p);
      };
      return adaptive_integrate(f, 0.0, Y, 1e-13, 1e-10);
    };
    auto outer = [&](double x) {
      double p0 = 0;
      for (const auto& e : pts)
        if (e.beta == 0) p0 += ipow(x, e.alpha);
      return std::exp((a > 0 ? a * std::log(x) : 0.0) - 2 * p0) * inner(x);
    };
    const double v = adaptive_integrate(outer, 0.0, X, 0.1 * rel_tol, rel_tol);
    t.c[moment_table::index(a, b)] = M_PI * M_PI * v;
  });
  return t;
}

struct kernel_value {
  cplx value;
  double tail_bound = 0;
  int terms_used = 0;
};

/// Bound on sum_{a+b>N} |z_p z_q|^a |w_p w_q|^b / c_ab from the separable lower bound
/// c_ab >= pi^2 int x^a e^{-2 az x^m} dx int y^b e^{-2 bw y^n} dy.
inline double kernel_tail_bound(const moment_table& t, double zeta, double omega) {
  const int N = t.cutoff;
  auto series = [&](double mod, int deg, double coef) {
    return detail::certified_series::build(
        [&](int k) {
          if (mod == 0) return k == 0 ? -detail::log_radial_moment(0, deg, coef) - std::log(M_PI)
                                      : -std::numeric_limits<double>::infinity();
          return k * std::log(mod) - detail::log_radial_moment(k, deg, coef) - std::log(M_PI);
        },
        N + 2);
  };
  const auto f = series(zeta, t.mz, t.az);
  const auto g = series(omega, t.nw, t.bw);
  double tail = 0;
  for (std::size_t a = 0; a < f.term.size(); ++a) tail += f.term[a] * g.tail(N - static_cast<int>(a));
  tail += f.tail_after.back() * g.total;
  return tail;
}

/// Truncated orthonormal expansion sum (z_p conj z_q)^a (w_p conj w_q)^b / c_ab.
inline kernel_value kernel_eval(const moment_table& t, const complex_point2& p,
                                const complex_point2& q, double rel_tol = 1e-8) {
  const cplx u = p.z * std::conj(q.z), v = p.w * std::conj(q.w);
  kernel_value kv;
  std::vector<cplx> vp(t.cutoff + 1);
  vp[0] = 1;
  for (int b = 1; b <= t.cutoff; ++b) vp[b] = vp[b - 1] * v;
  cplx ua = 1, sum = 0;
  for (int a = 0; a <= t.cutoff; ++a) {
    for (int b = 0; a + b <= t.cutoff; ++b) sum += ua * vp[b] / t.at(a, b);
    ua *= u;
  }
  kv.value = sum;
  kv.terms_used = static_cast<int>(t.c.size());
  kv.tail_bound = kernel_tail_bound(t, std::abs(u), std::abs(v));
  if (!(kv.tail_bound <= rel_tol * std::abs(sum)))
    throw error(errc::tail_not_certified, "tail bound " + std::to_string(kv.tail_bound) +
                                              " against |B| = " + std::to_string(std::abs(sum)));
  return kv;
}

struct reproducing_result {
  int a = 0, b = 0;
  cplx exact;      // h(p), the value orthogonality gives for (h, k_p)
  cplx numeric;    // (h, k_p) by quadrature of the defining integral
  double discrepancy = 0;  // |numeric - exact| / (1 + |exact|)
};

/// (h, k_p) for every monomial h = z^a w^b with a + b <= max_degree, by polar quadrature:
/// trapezoidal rules in both angles (exact for the frequencies present) and composite
/// Gauss-Legendre in both radii. The kernel is the truncated expansion at the table cutoff.
inline std::vector<reproducing_result> reproducing_check_all(const moment_table& t, int max_degree,
                                                             const complex_point2& p,
                                                             int radial_panels = 24) {
  if (max_degree > t.cutoff)
    throw error(errc::invalid_argument, "monomial degree exceeds the table cutoff");
  const int N = t.cutoff, M = N + 1;
  double R1 = 0, R2 = 0;
  for (int k = 0; k <= 2 * N + 1; ++k) {
    R1 = std::max(R1, std::sqrt(detail::truncation_point(k, t.mz)));
    R2 = std::max(R2, std::sqrt(detail::truncation_point(k, t.nw)));
  }
  const auto r1 = composite_gauss(0, R1, radial_panels), r2 = composite_gauss(0, R2, radial_panels);
  std::vector<cplx> e1(M * (N + 1)), e2(M * (N + 1));  // e^{-i a theta_j}
  for (int j = 0; j < M; ++j)
    for (int a = 0; a <= N; ++a) e1[j * (N + 1) + a] = std::polar(1.0, -2 * M_PI * a * j / M);
  e2 = e1;
  std::vector<std::pair<int, int>> mons;
  for (int s = 0; s <= max_degree; ++s)
    for (int b = 0; b <= s; ++b) mons.push_back({s - b, b});
  std::vector<cplx> acc(mons.size(), 0.0);
  std::vector<cplx> inner((N + 1) * M), S(M * M);
  const double dth = 2 * M_PI / M;
  for (std::size_t i1 = 0; i1 < r1.x.size(); ++i1)
    for (std::size_t i2 = 0; i2 < r2.x.size(); ++i2) {
      const double s1 = r1.x[i1], s2 = r2.x[i2];
      const double phi = eval_weight(t.gamma, {s1, s2});
      const double jac = r1.w[i1] * r2.w[i2] * s1 * s2 * dth * dth * std::exp(-2 * phi);
      if (jac == 0) continue;
      const cplx X = p.z * s1, Y = p.w * s2;
      // inner[a][j2] = sum_b Y^b e^{-i b theta2} / c_ab
      for (int a = 0; a <= N; ++a)
        for (int j2 = 0; j2 < M; ++j2) {
          cplx s = 0, yb = 1;
          for (int b = 0; a + b <= N; ++b) {
            s += yb * e2[j2 * (N + 1) + b] / t.at(a, b);
            yb *= Y;
          }
          inner[a * M + j2] = s;
        }
      for (int j1 = 0; j1 < M; ++j1)
        for (int j2 = 0; j2 < M; ++j2) {
          cplx s = 0, xa = 1;
          for (int a = 0; a <= N; ++a) {
            s += xa * e1[j1 * (N + 1) + a] * inner[a * M + j2];
            xa *= X;
          }
          S[j1 * M + j2] = s;
        }
      for (std::size_t k = 0; k < mons.size(); ++k) {
        const auto [a, b] = mons[k];
        cplx s = 0;
        for (int j1 = 0; j1 < M; ++j1)
          for (int j2 = 0; j2 < M; ++j2)
            s += std::conj(e1[j1 * (N + 1) + a] * e2[j2 * (N + 1) + b]) * S[j1 * M + j2];
        acc[k] += jac * ipow(s1, a) * ipow(s2, b) * s;
      }
    }
  std::vector<reproducing_result> out;
  for (std::size_t k = 0; k < mons.size(); ++k) {
    reproducing_result r;
    r.a = mons[k].first;
    r.b = mons[k].second;
    r.exact = detail::cpow(p.z, r.a) * detail::cpow(p.w, r.b);
    r.numeric = acc[k];
    r.discrepancy = std::abs(r.numeric - r.exact) / (1 + std::abs(r.exact));
    out.push_back(r);
  }
  return out;
}

inline reproducing_result reproducing_check(const moment_table& t, int a, int b,
                                            const complex_point2& p) {
  for (const auto& r : reproducing_check_all(t, a + b, p))
    if (r.a == a && r.b == b) return r;
  throw std::logic_error("monomial missing from batch");
}

struct fit_pair {
  std::size_t p = 0, q = 0;  // nodes of the moduli-quadrant grid
};

struct fit_report {
  double epsilon = 0;
  double log_c = 0;
  std::size_t worst_pair = 0;  // pair attaining the envelope at the fitted epsilon
  std::vector<double> L, d;
};

/// Fits L(p,q) <= log C - eps d_kappa(p,q) with
/// L = log|B| - phi(p) - phi(q) + 2 log rho(p) + 2 log rho(q) - log(kappa(p)/rho(p)).
/// For fixed eps the smallest admissible log C is max_i (L_i + eps d_i); eps minimizes the
/// mean gap between that envelope and the data (convex, golden section).
inline fit_report bound_fit(const moment_table& t, const radius_field& rho,
                            const radius_field& kappa, const metric_graph& metric,
                            const std::vector<fit_pair>& pairs, double kernel_tol = 1e-8) {
  if (!(rho.grid == kappa.grid) || !(rho.grid == metric.grid()))
    throw error(errc::grid_mismatch, "fit inputs on different grids");
  const auto& g = rho.grid;
  fit_report rep;
  std::vector<std::size_t> sources;
  for (const auto& pq : pairs) sources.push_back(pq.p);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::vector<std::vector<double>> dist(sources.size());
  parallel_for(sources.size(), [&](std::size_t i) { dist[i] = metric.distances_from(sources[i]); });
  for (const auto& pq : pairs) {
    auto xp = g.coords(pq.p), xq = g.coords(pq.q);
    complex_point2 P{xp[0], xp[1]}, Q{xq[0], xq[1]};
    const auto B = kernel_eval(t, P, Q, kernel_tol);
    const double L = std::log(std::abs(B.value)) - eval_weight(t.gamma, P) - eval_weight(t.gamma, Q) +
                     2 * std::log(rho.values[pq.p]) + 2 * std::log(rho.values[pq.q]) -
                     std::log(kappa.values[pq.p] / rho.values[pq.p]);
    const auto si = std::lower_bound(sources.begin(), sources.end(), pq.p) - sources.begin();
    const double d = dist[si][pq.q];
    if (!std::isfinite(d)) throw error(errc::unreachable_target, "pair not connected");
    rep.L.push_back(L);
    rep.d.push_back(d);
  }
  const std::size_t n = pairs.size();
  auto logc = [&](double eps, std::size_t* arg = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (rep.L[i] + eps * rep.d[i] > best) {
        best = rep.L[i] + eps * rep.d[i];
        if (arg) *arg = i;
      }
    return best;
  };
  auto J = [&](double eps) {
    const double c = logc(eps);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += c - eps * rep.d[i] - rep.L[i];
    return s / n;
  };
  double hi = 1;
  for (int k = 0; k < 60 && J(2 * hi) <= J(hi); ++k) hi *= 2;
  hi *= 2;
  double a = 0, b = hi;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a), fc = J(c), fd = J(d);
  for (int it = 0; it < 200 && b - a > 1e-10 * (1 + b); ++it) {
    if (fc <= fd) {
      b = d, d = c, fd = fc, c = b - gr * (b - a), fc = J(c);
    } else {
      a = c, c = d, fc = fd, d = a + gr * (b - a), fd = J(d);
    }
  }
  rep.epsilon = 0.5 * (a + b);
  if (J(0) <= J(rep.epsilon)) rep.epsilon = 0;
  rep.log_c = logc(rep.epsilon, &rep.worst_pair);
  if (rep.epsilon <= 1e-9)
    throw error(errc::insufficient_decay,
                "no positive decay rate; binding pair " + std::to_string(rep.worst_pair));
  return rep;
}

/// Mean of f over the Euclidean ball B(p, r) in C^2 = R^4, by seeded Monte Carlo.
template <class F>
double ball_average(F&& f, const complex_point2& p, double r, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  double sum = 0;
  for (int k = 0; k < samples;) {
    double x[4], n2 = 0;
    for (double& c : x) n2 += (c = u(rng)) * c;
    if (n2 > 1) continue;
    sum += f(complex_point2{p.z + r * cplx(x[0], x[1]), p.w + r * cplx(x[2], x[3])});
    ++k;
  }
  return sum / samples;
}

}  // namespace bergkern
