#pragma once

// Closed-form model weights, their complex Hessians and the comparability ratios.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "newton_diagram.hpp"

namespace bergkern {

using cplx = std::complex<double>;

struct complex_point2 {
  cplx z;
  cplx w;
  double x() const { return std::norm(z); }
  double y() const { return std::norm(w); }
};

/// x^k with 0^0 = 1.
inline double ipow(double x, int k) {
  double r = 1.0;
  for (; k > 0; --k) r *= x;
  return r;
}

inline double eval_monomial_sum(const std::vector<exponent>& pts, double x, double y) {
  double s = 0.0;
  for (const auto& e : pts) s += ipow(x, e.alpha) * ipow(y, e.beta);
  return s;
}

inline double eval_weight(const monomial_set& g, const complex_point2& p) {
  return eval_monomial_sum(g.points(), p.x(), p.y());
}

struct hermitian_sample {
  Eigen::Matrix2cd entries;
  double det_val = 0;
  double tr_val = 0;
  double lambda_min = 0;
  double mu_max = 0;
  double laplacian = 0;
};

/// Eigenvalues of a PSD 2x2 Hermitian matrix from det and tr, small one via det/mu.
inline void eigen_from_det_tr(double det, double tr, double& lambda, double& mu) {
  mu = 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
  lambda = mu > 0 ? det / mu : 0.0;
}

inline hermitian_sample hessian(const monomial_set& g, const complex_point2& p) {
  const double x = p.x(), y = p.y();
  double hzz = 0, hww = 0;
  cplx hzw = 0;
  for (const auto& e : g) {
    const double a = e.alpha, b = e.beta;
    if (e.alpha > 0) hzz += a * a * ipow(x, e.alpha - 1) * ipow(y, e.beta);
    if (e.beta > 0) hww += b * b * ipow(x, e.alpha) * ipow(y, e.beta - 1);
    if (e.alpha > 0 && e.beta > 0)
      hzw += a * b * ipow(x, e.alpha - 1) * ipow(y, e.beta - 1) * std::conj(p.z) * p.w;
  }
  // Sum-of-squares form of the determinant avoids cancellation in hzz*hww - |hzw|^2.
  double det = 0;
  const auto& pts = g.points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double cross = static_cast<double>(pts[i].alpha) * pts[j].beta -
                           static_cast<double>(pts[i].beta) * pts[j].alpha;
      if (cross == 0) continue;
      det += cross * cross * ipow(x, pts[i].alpha + pts[j].alpha - 1) *
             ipow(y, pts[i].beta + pts[j].beta - 1);
    }
  hermitian_sample s;
  s.entries << hzz, hzw, std::conj(hzw), hww;
  s.det_val = det;
  s.tr_val = hzz + hww;
  eigen_from_det_tr(s.det_val, s.tr_val, s.lambda_min, s.mu_max);
  s.laplacian = 4.0 * s.tr_val;
  return s;
}

/// Laplacian of the weight as a function of the moduli (|z|,|w|).
inline double laplacian_at_moduli(const monomial_set& g, double z_abs, double w_abs) {
  return hessian(g, {z_abs, w_abs}).laplacian;
}

/// The region monomial that the smallest eigenvalue is comparable to, or nothing
/// when the point lies outside E1, E2, E3.
inline std::optional<double> lambda_region_monomial(const homogeneous_profile& pr, double z_abs,
                                                    double w_abs) {
  if (pr.decoupled) return std::nullopt;
  auto reg = e_region(pr, z_abs, w_abs);
  if (!reg) return std::nullopt;
  to_profile_coords(pr, z_abs, w_abs);
  const double x = z_abs * z_abs, y = w_abs * w_abs;
  const exponent c1 = *pr.corner1, c2 = *pr.corner2;
  switch (*reg) {
    case region_tag::E1: return ipow(x, c1.alpha) * std::pow(y, c1.beta - 1);
    case region_tag::E2: return ipow(y, pr.ndeg - 1);
    case region_tag::E3: return std::pow(x, c2.alpha - 1) * ipow(y, c2.beta);
    default: return std::nullopt;
  }
}

struct ratio_range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  void add(double r) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ++count;
  }
  bool within(double k) const { return count == 0 || (lo >= 1.0 / k && hi <= k); }
};

struct hessian_ratio_report {
  double K = 0;
  ratio_range det_ratio;       // det / phi_{Gamma^(1)}
  ratio_range trace_poly;      // tr / exact trace polynomial (consistency, identically 1)
  ratio_range trace_set;       // tr / phi_{Gamma^(2)}
  ratio_range lambda_ratio;    // lambda / region monomial
};

/// |Gamma|^2 times the largest coefficient that enters det or tr.
inline double coefficient_bound(const monomial_set& g) {
  double c = 0;
  const auto& p = g.points();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c = std::max(c, static_cast<double>(p[i].alpha) * p[i].alpha +
                        static_cast<double>(p[i].beta) * p[i].beta);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double cross = static_cast<double>(p[i].alpha) * p[j].beta -
                           static_cast<double>(p[i].beta) * p[j].alpha;
      c = std::max(c, cross * cross / 2.0);
    }
  }
  const double s = static_cast<double>(p.size());
  return s * s * c;
}

/// Ratios of det, tr and lambda to their monomial models. The lambda ratio is only
/// collected when a profile is supplied; `lambda_k` is its acceptance band.
inline hessian_ratio_report hessian_consistency_check(
    const monomial_set& g, const std::vector<complex_point2>& pts,
    const homogeneous_profile* profile = nullptr, std::optional<double> lambda_k = std::nullopt) {
  hessian_ratio_report rep;
  rep.K = coefficient_bound(g);
  const auto g1 = independent_pair_set(g);
  const auto g2 = shifted_trace_set(g);
  for (const auto& p : pts) {
    const auto h = hessian(g, p);
    const double x = p.x(), y = p.y();
    double trpoly = 0;
    for (const auto& e : g) {
      if (e.alpha > 0) trpoly += double(e.alpha) * e.alpha * ipow(x, e.alpha - 1) * ipow(y, e.beta);
      if (e.beta > 0) trpoly += double(e.beta) * e.beta * ipow(x, e.alpha) * ipow(y, e.beta - 1);
    }
    if (!g1.empty()) rep.det_ratio.add(h.det_val / eval_monomial_sum(g1, x, y));
    if (trpoly > 0) rep.trace_poly.add(h.tr_val / trpoly);
    if (!g2.empty()) rep.trace_set.add(h.tr_val / eval_monomial_sum(g2, x, y));
    if (profile) {
      auto mono = lambda_region_monomial(*profile, std::abs(p.z), std::abs(p.w));
      if (mono && *mono > 0) rep.lambda_ratio.add(h.lambda_min / *mono);
    }
    auto fail = [&](const char* what, double r) {
      throw error(errc::ratio_out_of_range,
                  std::string(what) + " ratio " + std::to_string(r) + " at (" +
                      std::to_string(p.z.real()) + "+" + std::to_string(p.z.imag()) + "i, " +
                      std::to_string(p.w.real()) + "+" + std::to_string(p.w.imag()) + "i)");
    };
    auto culprit = [](const ratio_range& r, double k) { return r.lo < 1.0 / k ? r.lo : r.hi; };
    if (!rep.det_ratio.within(rep.K)) fail("det", culprit(rep.det_ratio, rep.K));
    if (!rep.trace_set.within(rep.K)) fail("trace", culprit(rep.trace_set, rep.K));
    if (lambda_k && !rep.lambda_ratio.within(*lambda_k)) fail("lambda", culprit(rep.lambda_ratio, *lambda_k));
  }
  return rep;
}

}  // namespace bergkern
