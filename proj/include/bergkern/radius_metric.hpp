#pragma once

// Radius functions on grids, the distance they induce, and their property checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <vector>

#include "csv.hpp"
#include "grid.hpp"
#include "newton_diagram.hpp"
#include "weight_eval.hpp"

namespace bergkern {

enum class radius_source { from_potential, from_mu, max, explicit_values };

struct radius_field {
  box_grid grid;
  std::vector<double> values;
  double comparability = 1;        // empirical C over neighbours within rho(x)
  double comparability_bound = 1;  // a priori bound, when one is known
  radius_source source = radius_source::explicit_values;
  std::vector<char> unsaturated;   // rho hit the domain diameter at this node
};

/// sup of the potential over the closed ball B(x, r).
using ball_sup_fn = std::function<double(const std::vector<double>& x, double r)>;

/// Visits grid nodes within distance `r` of x.
template <class F>
void for_nodes_in_ball(const box_grid& g, const std::vector<double>& x, double r, F&& visit) {
  const int d = g.dim();
  std::vector<int> lo(d), hi(d), ix(d);
  for (int k = 0; k < d; ++k) {
    lo[k] = std::max(0, static_cast<int>(std::floor((x[k] - r - g.lo[k]) / g.h[k])));
    hi[k] = std::min(g.n[k] - 1, static_cast<int>(std::ceil((x[k] + r - g.lo[k]) / g.h[k])));
    if (lo[k] > hi[k]) return;
  }
  ix = lo;
  for (;;) {
    double s = 0;
    for (int k = 0; k < d; ++k) {
      const double dx = g.lo[k] + g.h[k] * ix[k] - x[k];
      s += dx * dx;
    }
    if (s <= r * r * (1 + 1e-12)) visit(g.ravel(ix.data()), std::sqrt(s));
    int k = 0;
    while (k < d && ++ix[k] > hi[k]) ix[k] = lo[k], ++k;
    if (k == d) break;
  }
}

/// Ball sup over grid samples, with the ball dilated by one cell.
inline ball_sup_fn grid_ball_sup(const box_grid& g, std::vector<double> samples) {
  double hmax = *std::max_element(g.h.begin(), g.h.end());
  return [g, s = std::move(samples), hmax](const std::vector<double>& x, double r) {
    double best = 0;
    for_nodes_in_ball(g, x, r + hmax, [&](std::size_t j, double) { best = std::max(best, s[j]); });
    return best;
  };
}

inline ball_sup_fn constant_ball_sup(double c) {
  return [c](const std::vector<double>&, double) { return c; };
}

/// Ball sup of the Laplacian of a model weight, in moduli coordinates (|z|,|w|).
/// The Laplacian increases in each modulus, so the sup over B(p,r) in C^2 is attained on
/// the arc (|z|+r cos t, |w|+r sin t); `box_bound` uses the corner (|z|+r, |w|+r) instead.
inline ball_sup_fn model_laplacian_ball_sup(const monomial_set& gamma, bool box_bound = false) {
  return [gamma, box_bound](const std::vector<double>& x, double r) {
    auto F = [&](double t) {
      return laplacian_at_moduli(gamma, x[0] + r * std::cos(t), x[1] + r * std::sin(t));
    };
    if (box_bound) return laplacian_at_moduli(gamma, x[0] + r, x[1] + r);
    const int samples = 32;
    int best = 0;
    double bestv = F(0);
    for (int i = 1; i <= samples; ++i) {
      double v = F(M_PI / 2 * i / samples);
      if (v > bestv) bestv = v, best = i;
    }
    double a = M_PI / 2 * std::max(0, best - 1) / samples;
    double b = M_PI / 2 * std::min(samples, best + 1) / samples;
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = F(c), fd = F(d);
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
      if (fc > fd) {
        b = d, d = c, fd = fc, c = b - gr * (b - a), fc = F(c);
      } else {
        a = c, c = d, fc = fd, d = a + gr * (b - a), fd = F(d);
      }
    }
    return std::max({bestv, fc, fd});
  };
}

/// Largest C with C^-1 rho(x) <= rho(y) <= C rho(x) over node pairs with |x-y| <= rho(x).
inline double estimate_comparability(const box_grid& g, const std::vector<double>& rho) {
  std::vector<double> per(g.size(), 1.0);
  parallel_for(g.size(), [&](std::size_t i) {
    auto x = g.coords(i);
    double c = 1.0;
    for_nodes_in_ball(g, x, rho[i], [&](std::size_t j, double) {
      c = std::max({c, rho[j] / rho[i], rho[i] / rho[j]});
    });
    per[i] = c;
  });
  return *std::max_element(per.begin(), per.end());
}

/// rho(x) = sup{ r : r^2 sup_{B(x,r)} V <= 1 } by bisection on r.
inline radius_field rho_from_potential(const box_grid& g, const ball_sup_fn& sup,
                                       double rel_tol = 1e-6) {
  radius_field f;
  f.grid = g;
  f.source = radius_source::from_potential;
  f.values.assign(g.size(), 0.0);
  f.unsaturated.assign(g.size(), 0);
  const double hmin = *std::min_element(g.h.begin(), g.h.end());
  const double diam = std::max(g.diameter(), hmin);
  parallel_for(g.size(), [&](std::size_t i) {
    auto x = g.coords(i);
    auto fr = [&](double r) { return r * r * sup(x, r); };
    double hi = diam;
    double fhi = fr(hi);
    if (fhi == 0) throw error(errc::zero_potential, "potential vanishes on the whole domain");
    if (fhi <= 1) {
      f.values[i] = hi;
      f.unsaturated[i] = 1;
      return;
    }
    double lo = hmin / 4;
    for (int k = 0; k < 400 && fr(lo) > 1; ++k) hi = lo, lo /= 2;
    while (hi - lo > rel_tol * lo) {
      double mid = 0.5 * (lo + hi);
      (fr(mid) <= 1 ? lo : hi) = mid;
    }
    f.values[i] = lo;
  });
  f.comparability = estimate_comparability(g, f.values);
  return f;
}

/// kappa = 1/mu on a grid over the moduli quadrant.
inline radius_field rho_from_mu(const homogeneous_profile& pr, double c, const box_grid& g) {
  if (c <= 0) throw error(errc::invalid_argument, "coercivity constant must be positive");
  radius_field f;
  f.grid = g;
  f.source = radius_source::from_mu;
  f.values.resize(g.size());
  f.unsaturated.assign(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.coords(i);
    f.values[i] = 1.0 / mu_weight(pr, x[0], x[1], c);
  }
  f.comparability = estimate_comparability(g, f.values);
  return f;
}

inline radius_field explicit_field(const box_grid& g,
                                   const std::function<double(const std::vector<double>&)>& rho) {
  radius_field f;
  f.grid = g;
  f.values.resize(g.size());
  f.unsaturated.assign(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = rho(g.coords(i));
  f.comparability = estimate_comparability(g, f.values);
  return f;
}

inline radius_field radius_max(const radius_field& a, const radius_field& b) {
  if (!(a.grid == b.grid)) throw error(errc::grid_mismatch, "radius fields on different grids");
  radius_field f;
  f.grid = a.grid;
  f.source = radius_source::max;
  f.values.resize(a.values.size());
  f.unsaturated.assign(a.values.size(), 0);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    f.values[i] = std::max(a.values[i], b.values[i]);
    f.unsaturated[i] = (a.unsaturated.empty() ? 0 : a.unsaturated[i]) ||
                       (b.unsaturated.empty() ? 0 : b.unsaturated[i]);
  }
  f.comparability_bound = a.comparability * b.comparability;
  f.comparability = estimate_comparability(f.grid, f.values);
  return f;
}

struct covering_result {
  std::vector<std::size_t> centers;
  int max_multiplicity = 0;
  bool covers = false;
  bool disjoint = true;
};

/// Greedy family over nodes in decreasing rho: a node becomes a center when no chosen ball
/// B(x_k, rho(x_k)) contains it. Since rho(x) <= rho(x_k) in that order, the shrunk balls
/// B(x, rho(x)/(1+C^2)) stay pairwise disjoint; `disjoint` re-checks this.
inline covering_result greedy_covering(const radius_field& f) {
  const auto& g = f.grid;
  const double shrink = 1.0 / (1.0 + f.comparability * f.comparability);
  covering_result res;
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return f.values[a] > f.values[b]; });
  std::vector<int> mult(g.size(), 0);
  std::vector<std::vector<double>> cx;
  for (std::size_t i : order) {
    if (mult[i]) continue;
    auto x = g.coords(i);
    for_nodes_in_ball(g, x, f.values[i], [&](std::size_t j, double) { ++mult[j]; });
    res.centers.push_back(i);
    cx.push_back(std::move(x));
  }
  for (std::size_t a = 0; a < cx.size() && res.disjoint; ++a)
    for (std::size_t b = a + 1; b < cx.size() && res.disjoint; ++b)
      res.disjoint = euclid(cx[a], cx[b]) >=
                     (f.values[res.centers[a]] + f.values[res.centers[b]]) * shrink * (1 - 1e-12);
  res.max_multiplicity = *std::max_element(mult.begin(), mult.end());
  res.covers = *std::min_element(mult.begin(), mult.end()) >= 1;
  return res;
}

enum class stencil { neighbors8, neighbors16 };

/// Grid graph with axis and diagonal edges weighted by length / rho(midpoint).
class metric_graph {
 public:
  metric_graph(box_grid g, stencil st, const std::function<double(std::size_t, std::size_t,
                                                                  const std::vector<double>&)>& rho_mid,
               std::vector<char> mask = {})
      : grid_(std::move(g)), mask_(std::move(mask)) {
    const int d = grid_.dim();
    std::vector<int> off(d, -1);
    for (;;) {
      bool zero = std::all_of(off.begin(), off.end(), [](int v) { return v == 0; });
      if (!zero) offsets_.push_back(off);
      int k = 0;
      while (k < d && ++off[k] > 1) off[k] = -1, ++k;
      if (k == d) break;
    }
    if (st == stencil::neighbors16 && d == 2)
      for (int a : {-1, 1})
        for (int b : {-2, 2}) {
          offsets_.push_back({a, b});
          offsets_.push_back({b, a});
        }
    if (mask_.empty()) mask_.assign(grid_.size(), 1);
    const std::size_t S = offsets_.size();
    weights_.assign(grid_.size() * S, std::numeric_limits<double>::infinity());
    parallel_for(grid_.size(), [&](std::size_t i) {
      if (!mask_[i]) return;
      std::vector<int> ix(d), jx(d);
      grid_.unravel(i, ix.data());
      auto xi = grid_.coords(i);
      for (std::size_t s = 0; s < S; ++s) {
        for (int k = 0; k < d; ++k) jx[k] = ix[k] + offsets_[s][k];
        if (!grid_.inside(jx.data())) continue;
        std::size_t j = grid_.ravel(jx.data());
        if (!mask_[j]) continue;
        auto xj = grid_.coords(j);
        std::vector<double> mid(d);
        for (int k = 0; k < d; ++k) mid[k] = 0.5 * (xi[k] + xj[k]);
        weights_[i * S + s] = euclid(xi, xj) / rho_mid(i, j, mid);
      }
    });
  }

  const box_grid& grid() const { return grid_; }
  std::size_t stencil_size() const { return offsets_.size(); }

  /// Single-source shortest paths; unreachable nodes get +inf.
  std::vector<double> distances_from(std::size_t src) const {
    const std::size_t S = offsets_.size();
    const int d = grid_.dim();
    std::vector<double> dist(grid_.size(), std::numeric_limits<double>::infinity());
    using item = std::pair<double, std::size_t>;
    std::priority_queue<item, std::vector<item>, std::greater<>> pq;
    dist[src] = 0;
    pq.push({0, src});
    std::vector<int> ix(d), jx(d);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > dist[u]) continue;
      grid_.unravel(u, ix.data());
      for (std::size_t s = 0; s < S; ++s) {
        const double w = weights_[u * S + s];
        if (!std::isfinite(w)) continue;
        for (int k = 0; k < d; ++k) jx[k] = ix[k] + offsets_[s][k];
        const std::size_t v = grid_.ravel(jx.data());
        if (du + w < dist[v]) {
          dist[v] = du + w;
          pq.push({dist[v], v});
        }
      }
    }
    return dist;
  }

 private:
  box_grid grid_;
  std::vector<char> mask_;
  std::vector<std::vector<int>> offsets_;
  std::vector<double> weights_;
};

/// Graph for a continuous radius function evaluated at edge midpoints.
inline metric_graph make_metric_graph(const box_grid& g,
                                      const std::function<double(const std::vector<double>&)>& rho,
                                      stencil st = stencil::neighbors8, std::vector<char> mask = {}) {
  return metric_graph(
      g, st, [&](std::size_t, std::size_t, const std::vector<double>& mid) { return rho(mid); },
      std::move(mask));
}

/// Graph for a sampled field; the midpoint value is the mean of the endpoint samples.
inline metric_graph make_metric_graph(const radius_field& f, stencil st = stencil::neighbors8) {
  return metric_graph(f.grid, st, [&](std::size_t i, std::size_t j, const std::vector<double>&) {
    return 0.5 * (f.values[i] + f.values[j]);
  });
}

inline std::vector<double> agmon_distance(const metric_graph& graph, std::size_t source,
                                          const std::vector<std::size_t>& targets) {
  auto dist = graph.distances_from(source);
  std::vector<double> out;
  for (auto t : targets) {
    if (!std::isfinite(dist[t]))
      throw error(errc::unreachable_target, "node " + std::to_string(t) + " not reachable");
    out.push_back(dist[t]);
  }
  return out;
}

/// Worst ratio of graph distance to Euclidean distance for rho = 1 on an unbounded grid:
/// the polygonal norm of the stencil overshoots by 1/cos of half the widest angular gap.
inline double metrication_bound(stencil st, int dim) {
  if (dim == 1) return 0.0;
  const double gap = st == stencil::neighbors16 && dim == 2 ? std::atan(0.5) : M_PI / 4;
  return 1.0 / std::cos(gap / 2) - 1.0;
}

struct sandwich_report {
  double doubling = 1;  // max sup(x,2rho)/sup(x,rho)
  double worst_upper = 0;  // max rho^2 sup(x,rho), must be <= 1
  double worst_lower = std::numeric_limits<double>::infinity();  // min 4D rho^2 sup(x,rho), must be >= 1
  std::size_t checked = 0;
  bool holds() const { return worst_upper <= 1 + 1e-9 && worst_lower >= 1 - 1e-9; }
};

/// rho^-2/(4D) <= sup_{B(x,rho(x))} V <= rho^-2 at every saturated node.
inline sandwich_report sandwich_check(const radius_field& f, const ball_sup_fn& sup) {
  sandwich_report rep;
  std::vector<double> s1(f.values.size()), s2(f.values.size());
  parallel_for(f.values.size(), [&](std::size_t i) {
    auto x = f.grid.coords(i);
    s1[i] = sup(x, f.values[i]);
    s2[i] = sup(x, 2 * f.values[i]);
  });
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (!f.unsaturated[i] && s1[i] > 0) rep.doubling = std::max(rep.doubling, s2[i] / s1[i]);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (f.unsaturated[i]) continue;
    const double r2 = f.values[i] * f.values[i];
    rep.worst_upper = std::max(rep.worst_upper, r2 * s1[i]);
    rep.worst_lower = std::min(rep.worst_lower, 4 * rep.doubling * r2 * s1[i]);
    ++rep.checked;
  }
  return rep;
}

struct fefferman_phong_report {
  double c_emp = 0;
  std::vector<double> ratios;
};

/// Largest ratio int rho^-2 f^2 / (int |grad f|^2 + int V f^2) over seeded bump-times-affine
/// test functions, integrated by grid sums.
inline fefferman_phong_report fefferman_phong_check(const radius_field& rho,
                                                    const std::vector<double>& V, int count,
                                                    std::uint64_t seed) {
  const auto& g = rho.grid;
  const int d = g.dim();
  std::mt19937_64 rng(seed);
  std::vector<double> lo(d), hi(d);
  for (int k = 0; k < d; ++k) lo[k] = g.lo[k], hi[k] = g.lo[k] + g.h[k] * (g.n[k] - 1);
  fefferman_phong_report rep;
  for (int t = 0; t < count; ++t) {
    std::vector<double> c(d), a(d);
    double span = 1e300;
    for (int k = 0; k < d; ++k) span = std::min(span, hi[k] - lo[k]);
    const double s = std::uniform_real_distribution<double>(0.1, 0.4)(rng) * span;
    for (int k = 0; k < d; ++k) {
      c[k] = std::uniform_real_distribution<double>(lo[k] + s, hi[k] - s)(rng);
      a[k] = std::uniform_real_distribution<double>(-1, 1)(rng) / s;
    }
    double num = 0, grad = 0, pot = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto x = g.coords(i);
      double q = 0, lin = 1;
      for (int k = 0; k < d; ++k) {
        q += (x[k] - c[k]) * (x[k] - c[k]);
        lin += a[k] * (x[k] - c[k]);
      }
      q /= s * s;
      if (q >= 1) continue;
      const double b = std::exp(-1.0 / (1.0 - q));
      const double db = -b / ((1 - q) * (1 - q));  // d b / d q
      const double f = b * lin;
      double g2 = 0;
      for (int k = 0; k < d; ++k) {
        const double gk = db * 2 * (x[k] - c[k]) / (s * s) * lin + b * a[k];
        g2 += gk * gk;
      }
      num += f * f / (rho.values[i] * rho.values[i]);
      grad += g2;
      pot += V[i] * f * f;
    }
    const double r = num / (grad + pot);
    rep.ratios.push_back(r);
    rep.c_emp = std::max(rep.c_emp, r);
  }
  return rep;
}

inline void write_field_csv(std::ostream& os, const radius_field& f) {
  std::vector<std::string> head;
  for (int k = 0; k < f.grid.dim(); ++k) head.push_back("x" + std::to_string(k));
  head.push_back("rho");
  write_csv_row(os, head);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    std::vector<std::string> row;
    for (double v : f.grid.coords(i)) row.push_back(fmt17(v));
    row.push_back(fmt17(f.values[i]));
    write_csv_row(os, row);
  }
}

}  // namespace bergkern
