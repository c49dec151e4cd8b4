#pragma once

// Lowest eigenpairs of sparse Hermitian pencils H v = lambda M v, M positive diagonal.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "errors.hpp"

namespace bergkern {

using sparse_matrix = Eigen::SparseMatrix<std::complex<double>>;

struct spectral_report {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // ||H v - lambda M v|| with v^* M v = 1
  int iterations = 0;               // Lanczos steps over all restarts; 0 for the dense path
  int krylov_dim = 0;
  double shift = 0;
  Eigen::MatrixXcd vectors;         // filled when requested
};

struct eigen_options {
  std::uint64_t seed = 1;
  double residual_tol = 1e-8;
  int max_krylov = 240;
  int max_restarts = 8;
  int dense_limit = 600;
  bool keep_vectors = false;
};

namespace detail {

inline double row_gershgorin_min(const sparse_matrix& H, const Eigen::VectorXd& m) {
  Eigen::VectorXd lower(H.rows());
  for (Eigen::Index i = 0; i < H.rows(); ++i) lower(i) = 0;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(H.rows());
  for (int c = 0; c < H.outerSize(); ++c)
    for (sparse_matrix::InnerIterator it(H, c); it; ++it) {
      const auto r = it.row();
      const double scaled = std::abs(it.value()) / std::sqrt(m(r) * m(c));
      if (r == c)
        diag(r) = it.value().real() / m(r);
      else
        lower(r) += scaled;
    }
  return (diag - lower).minCoeff();
}

inline spectral_report dense_eigen(const sparse_matrix& H, const Eigen::VectorXd& m, int k,
                                   bool keep) {
  const Eigen::VectorXd s = m.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXcd A = s.asDiagonal() * Eigen::MatrixXcd(H) * s.asDiagonal();
  A = 0.5 * (A + A.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
  spectral_report rep;
  rep.vectors.resize(H.rows(), k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXcd v = s.asDiagonal() * es.eigenvectors().col(i);
    const double lam = es.eigenvalues()(i);
    rep.eigenvalues.push_back(lam);
    rep.residuals.push_back((H * v - lam * (m.cast<std::complex<double>>().asDiagonal() * v)).norm());
    rep.vectors.col(i) = v;
  }
  if (!keep) rep.vectors.resize(0, 0);
  return rep;
}

}  // namespace detail

/// k smallest eigenpairs. Shift-invert Lanczos with full reorthogonalization in the M inner
/// product; the shift is a Gershgorin lower bound of M^{-1/2} H M^{-1/2}, so H - shift M is
/// positive definite and the wanted eigenvalues become the largest of the inverted operator.
inline spectral_report extremal_eigenvalues(const sparse_matrix& H, int k,
                                            const Eigen::VectorXd* mass = nullptr,
                                            const eigen_options& opt = {}) {
  using cvec = Eigen::VectorXcd;
  const Eigen::Index n = H.rows();
  if (H.cols() != n || k < 1 || k > n) throw error(errc::invalid_argument, "bad eigenproblem size");
  Eigen::VectorXd m = mass ? *mass : Eigen::VectorXd::Ones(n);
  if (m.size() != n || m.minCoeff() <= 0)
    throw error(errc::invalid_argument, "mass must be a positive diagonal of matching size");
  if (n <= opt.dense_limit) return detail::dense_eigen(H, m, k, opt.keep_vectors);

  const double gmin = detail::row_gershgorin_min(H, m);
  const double shift = gmin - 1e-3 * std::max(1.0, std::abs(gmin));
  sparse_matrix K = H;
  for (Eigen::Index i = 0; i < n; ++i) K.coeffRef(i, i) -= shift * m(i);
  K.makeCompressed();
  Eigen::SimplicialLDLT<sparse_matrix, Eigen::Lower> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw error(errc::no_convergence, "factorization failed");

  const cvec mc = m.cast<std::complex<double>>();
  auto mdot = [&](const cvec& a, const cvec& b) { return (a.conjugate().cwiseProduct(mc).cwiseProduct(b)).sum(); };
  auto mnorm = [&](const cvec& a) { return std::sqrt(std::abs(mdot(a, a))); };
  // classical Gram-Schmidt against the first `cols` basis vectors, applied twice
  auto orthogonalize = [&](const Eigen::MatrixXcd& V, int cols, cvec& w) {
    for (int pass = 0; pass < 2; ++pass) {
      const cvec c = V.leftCols(cols).adjoint() * mc.cwiseProduct(w);
      w -= V.leftCols(cols) * c;
    }
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> g;
  cvec start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = {g(rng), g(rng)};

  const int kdim = static_cast<int>(std::min<Eigen::Index>(n, std::max(opt.max_krylov, 4 * k + 40)));
  spectral_report rep;
  rep.shift = shift;
  Eigen::MatrixXcd X;
  // Ritz pairs from the first `steps` Lanczos vectors; true if all k residuals pass.
  auto ritz = [&](const Eigen::MatrixXcd& V, const std::vector<double>& alpha,
                  const std::vector<double>& beta, int steps) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int i = 0; i < steps; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const int want = std::min(k, steps);
    rep.eigenvalues.clear();
    rep.residuals.clear();
    X.resize(n, want);
    bool ok = want == k;
    for (int i = 0; i < want; ++i) {
      const int col = steps - 1 - i;  // largest theta first
      cvec x = V.leftCols(steps) * es.eigenvectors().col(col).cast<std::complex<double>>();
      x /= mnorm(x);
      const double lam = shift + 1.0 / es.eigenvalues()(col);
      const double res = (H * x - lam * mc.cwiseProduct(x)).norm();
      rep.eigenvalues.push_back(lam);
      rep.residuals.push_back(res);
      X.col(i) = x;
      if (res > opt.residual_tol * x.norm()) ok = false;
    }
    return ok;
  };

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    Eigen::MatrixXcd V(n, kdim + 1);
    std::vector<double> alpha, beta;
    V.col(0) = start / mnorm(start);
    double scale = 0;
    bool ok = false;
    for (int j = 0; j < kdim; ++j) {
      cvec w = ldlt.solve(mc.cwiseProduct(V.col(j)));
      const double a = mdot(V.col(j), w).real();
      alpha.push_back(a);
      scale = std::max(scale, std::abs(a));
      orthogonalize(V, j + 1, w);
      const double b = mnorm(w);
      ++rep.iterations;
      rep.krylov_dim = j + 1;
      if (j + 1 == kdim || ((j + 1) % 20 == 0 && j + 1 >= k)) {
        ok = ritz(V, alpha, beta, j + 1);
        if (ok || j + 1 == kdim) break;
      }
      if (b <= 1e-12 * scale) {
        // invariant subspace: continue the basis with a fresh orthogonal direction
        for (Eigen::Index i = 0; i < n; ++i) w(i) = {g(rng), g(rng)};
        orthogonalize(V, j + 1, w);
        V.col(j + 1) = w / mnorm(w);
        beta.push_back(0.0);
        continue;
      }
      beta.push_back(b);
      V.col(j + 1) = w / b;
    }
    if (ok) {
      if (opt.keep_vectors) rep.vectors = X;
      return rep;
    }
    start = X.rowwise().sum();
  }
  std::string msg = "Lanczos residuals above tolerance after " + std::to_string(rep.iterations) + " steps:";
  for (double r : rep.residuals) msg += " " + std::to_string(r);
  throw error(errc::no_convergence, msg);
}

}  // namespace bergkern
