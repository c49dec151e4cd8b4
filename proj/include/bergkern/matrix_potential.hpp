#pragma once

// Hermitian matrix-valued potentials on R^d.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "polynomial.hpp"

namespace bergkern {

struct matrix_potential {
  int dim = 1;
  int size = 1;
  std::function<Eigen::MatrixXcd(const std::vector<double>&)> eval;
  std::optional<poly_matrix<exact_rational>> exact;  // real symmetric polynomial entries
};

inline matrix_potential polynomial_potential(const poly_matrix<exact_rational>& p) {
  if (!p.symmetric()) throw error(errc::invalid_argument, "polynomial potential is not symmetric");
  matrix_potential v;
  v.dim = p.dim();
  v.size = p.size;
  v.exact = p;
  v.eval = [p](const std::vector<double>& x) {
    Eigen::MatrixXcd m(p.size, p.size);
    for (int i = 0; i < p.size; ++i)
      for (int j = 0; j < p.size; ++j) m(i, j) = p(i, j)(x);
    return m;
  };
  return v;
}

inline matrix_potential scalar_potential(int dim, std::function<double(const std::vector<double>&)> f) {
  matrix_potential v;
  v.dim = dim;
  v.size = 1;
  v.eval = [f = std::move(f)](const std::vector<double>& x) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = f(x);
    return m;
  };
  return v;
}

inline matrix_potential zero_potential(int dim, int size) {
  matrix_potential v;
  v.dim = dim;
  v.size = size;
  v.eval = [size](const std::vector<double>&) { return Eigen::MatrixXcd::Zero(size, size).eval(); };
  return v;
}

/// Exact integral of a polynomial potential over Q(center, side).
inline Eigen::MatrixXd cube_integral(const poly_matrix<exact_rational>& p,
                                     const std::vector<exact_rational>& center,
                                     const exact_rational& side,
                                     std::vector<exact_rational>* exact_out = nullptr) {
  Eigen::MatrixXd out(p.size, p.size);
  if (exact_out) exact_out->clear();
  for (int i = 0; i < p.size; ++i)
    for (int j = 0; j < p.size; ++j) {
      const exact_rational v = p(i, j).integrate_cube(center, side);
      if (exact_out) exact_out->push_back(v);
      out(i, j) = static_cast<double>(v);
    }
  return out;
}

/// Smallest eigenvalue of a Hermitian matrix.
inline double lambda_min(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace bergkern
