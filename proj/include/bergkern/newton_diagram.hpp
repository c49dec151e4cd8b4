#pragma once

// Exact combinatorics of the exponent set of a model weight on C^2.

#include <algorithm>
#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "errors.hpp"

namespace bergkern {

using rational = boost::rational<long long>;

inline double to_double(const rational& r) { return boost::rational_cast<double>(r); }

inline std::string to_string(const rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

struct exponent {
  int alpha = 0;
  int beta = 0;
  auto operator<=>(const exponent&) const = default;
};

/// Finite set of exponent pairs, kept sorted and duplicate-free.
class monomial_set {
 public:
  monomial_set() = default;

  explicit monomial_set(std::vector<exponent> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw error(errc::invalid_argument, "exponent set is empty");
    for (const auto& p : pts_)
      if (p.alpha < 0 || p.beta < 0)
        throw error(errc::invalid_argument, "negative exponent in set");
    std::sort(pts_.begin(), pts_.end());
    if (std::adjacent_find(pts_.begin(), pts_.end()) != pts_.end())
      throw error(errc::invalid_argument, "duplicate exponent in set");
  }

  monomial_set(std::initializer_list<exponent> pts) : monomial_set(std::vector<exponent>(pts)) {}

  const std::vector<exponent>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  auto begin() const { return pts_.begin(); }
  auto end() const { return pts_.end(); }
  bool contains(exponent e) const { return std::binary_search(pts_.begin(), pts_.end(), e); }

  friend bool operator==(const monomial_set&, const monomial_set&) = default;

 private:
  std::vector<exponent> pts_;
};

// Deduplicating constructor for derived sets, which may legitimately collapse points.
inline monomial_set make_set(std::vector<exponent> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return monomial_set(std::move(pts));
}

/// Sums of linearly independent pairs, shifted by (-1,-1). Controls det of the Hessian.
inline std::vector<exponent> independent_pair_set(const monomial_set& g) {
  std::vector<exponent> out;
  const auto& p = g.points();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      long long cross = static_cast<long long>(p[i].alpha) * p[j].beta -
                        static_cast<long long>(p[i].beta) * p[j].alpha;
      if (cross != 0) out.push_back({p[i].alpha + p[j].alpha - 1, p[i].beta + p[j].beta - 1});
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// (Gamma_r - (1,0)) union (Gamma_u - (0,1)). Controls the trace of the Hessian.
inline std::vector<exponent> shifted_trace_set(const monomial_set& g) {
  std::vector<exponent> out;
  for (const auto& e : g) {
    if (e.alpha != 0) out.push_back({e.alpha - 1, e.beta});
    if (e.beta != 0) out.push_back({e.alpha, e.beta - 1});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct homogeneous_profile {
  monomial_set gamma;  // after the swap enforcing m >= n
  int mdeg = 0;
  int ndeg = 0;
  rational sigma{0};
  rational tau{0};
  std::optional<exponent> corner1;  // mixed point maximizing alpha/beta
  std::optional<exponent> corner2;  // mixed point maximizing beta/alpha
  std::optional<rational> nu;
  monomial_set gamma_r, gamma_u, gamma_1, gamma_2;
  bool decoupled = false;
  bool swapped = false;
};

inline homogeneous_profile derive_profile(const monomial_set& source) {
  if (source.empty()) throw error(errc::invalid_argument, "exponent set is empty");
  std::vector<exponent> on_a, on_b;
  for (const auto& e : source) {
    if (e.beta == 0) on_a.push_back(e);
    if (e.alpha == 0) on_b.push_back(e);
  }
  auto corner_deg = [](const std::vector<exponent>& v, bool first) -> int {
    for (const auto& e : v) {
      int d = first ? e.alpha : e.beta;
      if (d > 0) return d;
    }
    return 0;
  };
  int m = corner_deg(on_a, true);
  int n = corner_deg(on_b, false);
  if (m == 0 || n == 0) throw error(errc::missing_corner, "(m,0) or (0,n) absent");
  for (const auto& e : source)
    if (static_cast<long long>(n) * e.alpha + static_cast<long long>(m) * e.beta !=
        static_cast<long long>(n) * m)
      throw error(errc::not_homogeneous, "point (" + std::to_string(e.alpha) + "," +
                                             std::to_string(e.beta) + ") off the segment");

  homogeneous_profile pr;
  pr.swapped = m < n;
  std::vector<exponent> pts = source.points();
  if (pr.swapped) {
    for (auto& e : pts) std::swap(e.alpha, e.beta);
    std::swap(m, n);
  }
  pr.gamma = monomial_set(pts);
  pr.mdeg = m;
  pr.ndeg = n;

  std::vector<exponent> r, u;
  for (const auto& e : pr.gamma) {
    if (e.alpha != 0) r.push_back(e);
    if (e.beta != 0) u.push_back(e);
  }
  pr.gamma_r = monomial_set(r);
  pr.gamma_u = monomial_set(u);
  pr.gamma_1 = make_set(independent_pair_set(pr.gamma));
  pr.gamma_2 = make_set(shifted_trace_set(pr.gamma));

  std::vector<exponent> mixed;
  for (const auto& e : pr.gamma)
    if (e.alpha != 0 && e.beta != 0) mixed.push_back(e);
  pr.decoupled = mixed.empty();
  if (pr.decoupled) return pr;

  exponent c1 = mixed.front(), c2 = mixed.front();
  for (const auto& e : mixed) {
    if (rational(e.alpha, e.beta) > rational(c1.alpha, c1.beta)) c1 = e;
    if (rational(e.beta, e.alpha) > rational(c2.beta, c2.alpha)) c2 = e;
  }
  pr.corner1 = c1;
  pr.corner2 = c2;
  pr.sigma = rational(c1.alpha, c1.beta);
  pr.tau = rational(c2.beta, c2.alpha);
  // alpha_2 = 1 forces m = n and beta_2 = n - 1, where both Case II formulas agree; nu = 0 then.
  pr.nu = c2.alpha == 1 ? rational(0) : rational(n - 1 - c2.beta, c2.alpha - 1);
  return pr;
}

/// max over the set of u*xi + v*eta.
inline rational support_max(const monomial_set& a, const rational& u, const rational& v) {
  if (a.empty()) throw error(errc::invalid_argument, "support function of an empty set");
  rational best = u * a.points().front().alpha + v * a.points().front().beta;
  for (const auto& e : a) best = std::max(best, u * e.alpha + v * e.beta);
  return best;
}

enum class lambda_case { I, IIa, IIb };

inline const char* lambda_case_name(lambda_case c) {
  switch (c) {
    case lambda_case::I: return "I";
    case lambda_case::IIa: return "IIa";
    case lambda_case::IIb: return "IIb";
  }
  return "?";
}

struct lambda_exponent_result {
  rational value;        // support-function difference
  rational closed_form;  // case formula
  lambda_case which;
};

/// Growth exponent of the smallest Hessian eigenvalue along (|z|^2,|w|^2) = (t^u, t^v).
inline lambda_exponent_result lambda_exponent(const homogeneous_profile& pr, const rational& u,
                                              const rational& v) {
  if (u.numerator() < 0 || v.numerator() < 0 || (u.numerator() == 0 && v.numerator() == 0))
    throw error(errc::invalid_argument, "direction must be non-negative and non-zero");
  if (pr.decoupled) throw error(errc::decoupled_profile, "no mixed monomials");
  const int m = pr.mdeg, n = pr.ndeg;
  const exponent c1 = *pr.corner1, c2 = *pr.corner2;

  lambda_exponent_result res;
  res.value = support_max(pr.gamma_1, u, v) - support_max(pr.gamma_2, u, v);
  if (v * n <= u * m) {
    res.which = lambda_case::I;
    res.closed_form = u * c1.alpha + v * c1.beta - v;
  } else if (u <= *pr.nu * v) {
    res.which = lambda_case::IIa;
    res.closed_form = u * c2.alpha + v * c2.beta - u;
  } else {
    res.which = lambda_case::IIb;
    res.closed_form = v * (n - 1);
  }
  if (res.value != res.closed_form)
    throw std::logic_error("lambda exponent: case formula " + to_string(res.closed_form) +
                           " differs from support difference " + to_string(res.value));
  return res;
}

enum class region_tag { E1, E2, E3, U0, Ur, Uu };

inline const char* region_name(region_tag t) {
  switch (t) {
    case region_tag::E1: return "E1";
    case region_tag::E2: return "E2";
    case region_tag::E3: return "E3";
    case region_tag::U0: return "U0";
    case region_tag::Ur: return "Ur";
    case region_tag::Uu: return "Uu";
  }
  return "?";
}

// Moduli are given in the caller's coordinates; the profile's swap is applied here.
inline void to_profile_coords(const homogeneous_profile& pr, double& z_abs, double& w_abs) {
  if (pr.swapped) std::swap(z_abs, w_abs);
}

/// The E-region a point lies in, ignoring the uncertainty regions. Empty when both moduli < 1.
inline std::optional<region_tag> e_region(const homogeneous_profile& pr, double z_abs,
                                          double w_abs) {
  to_profile_coords(pr, z_abs, w_abs);
  const double mn = static_cast<double>(pr.mdeg) / pr.ndeg;
  const double nu = pr.nu ? to_double(*pr.nu) : 0.0;
  if (z_abs >= 1 && w_abs <= std::pow(z_abs, mn)) return region_tag::E1;
  if (w_abs >= 1 && z_abs <= std::pow(w_abs, nu)) return region_tag::E3;
  if (w_abs >= 1) return region_tag::E2;
  return std::nullopt;
}

inline region_tag classify_point(const homogeneous_profile& pr, double z_abs, double w_abs) {
  double z = z_abs, w = w_abs;
  to_profile_coords(pr, z, w);
  const double s = to_double(pr.sigma), t = to_double(pr.tau);
  if (z <= 2 && w <= 2) return region_tag::U0;
  if (z > 1 && w <= std::pow(z, -s)) return region_tag::Ur;
  if (w > 1 && z <= std::pow(w, -t)) return region_tag::Uu;
  if (pr.decoupled) return region_tag::E2;
  return *e_region(pr, z_abs, w_abs);
}

/// c(1 + |z|^sigma + |w|^tau) with 0^0 = 1.
inline double mu_weight(const homogeneous_profile& pr, double z_abs, double w_abs, double c) {
  to_profile_coords(pr, z_abs, w_abs);
  return c * (1.0 + std::pow(z_abs, to_double(pr.sigma)) + std::pow(w_abs, to_double(pr.tau)));
}

}  // namespace bergkern
