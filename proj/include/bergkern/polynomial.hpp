#pragma once

// Multivariate polynomials over double or exact rationals, with exact cube integrals.

#include <algorithm>
#include <map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace bergkern {

using exact_rational = boost::multiprecision::cpp_rational;

template <class T>
class polynomial {
 public:
  using exponents = std::vector<int>;

  polynomial() : dim_(1) {}
  explicit polynomial(int dim) : dim_(dim) {}

  static polynomial constant(int dim, const T& c) { return monomial(dim, exponents(dim, 0), c); }

  static polynomial variable(int dim, int k) {
    exponents e(dim, 0);
    e[k] = 1;
    return monomial(dim, e, T(1));
  }

  static polynomial monomial(int dim, exponents e, const T& c) {
    polynomial p(dim);
    if (static_cast<int>(e.size()) != dim)
      throw error(errc::invalid_argument, "exponent vector length differs from dimension");
    if (c != T(0)) p.terms_[std::move(e)] = c;
    return p;
  }

  int dim() const { return dim_; }
  const std::map<exponents, T>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int k : e) s += k;
      d = std::max(d, s);
    }
    return d;
  }

  polynomial& operator+=(const polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  polynomial& operator-=(const polynomial& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  polynomial& operator*=(const T& s) {
    if (s == T(0)) terms_.clear();
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }
  friend polynomial operator+(polynomial a, const polynomial& b) { return a += b; }
  friend polynomial operator-(polynomial a, const polynomial& b) { return a -= b; }
  friend polynomial operator*(polynomial a, const T& s) { return a *= s; }
  friend polynomial operator*(const T& s, polynomial a) { return a *= s; }
  friend polynomial operator*(const polynomial& a, const polynomial& b) {
    a.check_dim(b);
    polynomial r(a.dim_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        exponents e(a.dim_);
        for (int k = 0; k < a.dim_; ++k) e[k] = ea[k] + eb[k];
        r.add_term(e, ca * cb);
      }
    return r;
  }
  friend bool operator==(const polynomial& a, const polynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  double operator()(const double* x) const {
    double s = 0;
    for (const auto& [e, c] : terms_) {
      double t = static_cast<double>(c);
      for (int k = 0; k < dim_; ++k)
        for (int j = 0; j < e[k]; ++j) t *= x[k];
      s += t;
    }
    return s;
  }
  double operator()(const std::vector<double>& x) const { return (*this)(x.data()); }

  T eval_exact(const std::vector<T>& x) const {
    T s(0);
    for (const auto& [e, c] : terms_) {
      T t = c;
      for (int k = 0; k < dim_; ++k)
        for (int j = 0; j < e[k]; ++j) t *= x[k];
      s += t;
    }
    return s;
  }

  /// Integral over the cube with the given center and side, one antiderivative per axis.
  T integrate_cube(const std::vector<T>& center, const T& side) const {
    const T half = side / T(2);
    T total(0);
    for (const auto& [e, c] : terms_) {
      T t = c;
      for (int k = 0; k < dim_; ++k) {
        const T hi = center[k] + half, lo = center[k] - half;
        T phi(1), plo(1);
        for (int j = 0; j <= e[k]; ++j) phi *= hi, plo *= lo;
        t *= (phi - plo) / T(e[k] + 1);
      }
      total += t;
    }
    return total;
  }

 private:
  void check_dim(const polynomial& o) const {
    if (o.dim_ != dim_) throw error(errc::invalid_argument, "polynomial dimensions differ");
  }
  void add_term(const exponents& e, const T& c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (c != T(0)) terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (it->second == T(0)) terms_.erase(it);
  }

  int dim_;
  std::map<exponents, T> terms_;
};

/// Square matrix of polynomials, stored row-major.
template <class T>
struct poly_matrix {
  int size = 0;
  std::vector<polynomial<T>> entries;

  poly_matrix() = default;
  poly_matrix(int dim, int m) : size(m), entries(m * m, polynomial<T>(dim)) {}

  polynomial<T>& operator()(int i, int j) { return entries[i * size + j]; }
  const polynomial<T>& operator()(int i, int j) const { return entries[i * size + j]; }
  int dim() const { return entries.empty() ? 0 : entries.front().dim(); }

  bool symmetric() const {
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < i; ++j)
        if (!((*this)(i, j) == (*this)(j, i))) return false;
    return true;
  }

  polynomial<T> trace() const {
    polynomial<T> t(dim());
    for (int i = 0; i < size; ++i) t += (*this)(i, i);
    return t;
  }

  polynomial<T> det2() const {
    if (size != 2) throw error(errc::invalid_argument, "determinant implemented for 2x2 only");
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
  }
};

}  // namespace bergkern
