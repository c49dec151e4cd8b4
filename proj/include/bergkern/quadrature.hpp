#pragma once

// Composite Gauss-Legendre rules and adaptive Gauss-Kronrod integration.

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace bergkern {

struct rule1d {
  std::vector<double> x;
  std::vector<double> w;
};

/// `panels` equal panels on [a,b], each with the P-point Gauss-Legendre rule.
template <unsigned P = 8>
rule1d composite_gauss(double a, double b, int panels) {
  using gl = boost::math::quadrature::gauss<double, P>;
  const auto& xs = gl::abscissa();
  const auto& ws = gl::weights();
  rule1d r;
  const double len = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * len, half = 0.5 * len;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      // boost stores the non-negative half of the symmetric rule
      r.x.push_back(mid + half * xs[k]);
      r.w.push_back(half * ws[k]);
      if (xs[k] != 0) {
        r.x.push_back(mid - half * xs[k]);
        r.w.push_back(half * ws[k]);
      }
    }
  }
  return r;
}

/// Adaptive 15-point Kronrod integration to relative tolerance `tol`; throws when the
/// error estimate stays above `accept` times the result.
template <class F>
double adaptive_integrate(F&& f, double a, double b, double tol, double accept) {
  double err = 0, l1 = 0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, tol, &err, &l1);
  if (!std::isfinite(v) || err > accept * std::abs(v) + 1e-300)
    throw error(errc::quadrature_nonconvergent,
                "error estimate " + std::to_string(err) + " for value " + std::to_string(v));
  return v;
}

}  // namespace bergkern
