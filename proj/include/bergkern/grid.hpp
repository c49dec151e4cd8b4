#pragma once

// Uniform rectangular grids over R^d and a small thread pool helper.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace bergkern {

/// Nodes lo[k] + i*h[k] for i in [0, n[k]).
struct box_grid {
  std::vector<double> lo;
  std::vector<double> h;
  std::vector<int> n;

  int dim() const { return static_cast<int>(n.size()); }

  std::size_t size() const {
    std::size_t s = 1;
    for (int k : n) s *= static_cast<std::size_t>(k);
    return s;
  }

  void unravel(std::size_t idx, int* out) const {
    for (int k = 0; k < dim(); ++k) {
      out[k] = static_cast<int>(idx % n[k]);
      idx /= n[k];
    }
  }

  std::size_t ravel(const int* ix) const {
    std::size_t idx = 0;
    for (int k = dim() - 1; k >= 0; --k) idx = idx * n[k] + ix[k];
    return idx;
  }

  bool inside(const int* ix) const {
    for (int k = 0; k < dim(); ++k)
      if (ix[k] < 0 || ix[k] >= n[k]) return false;
    return true;
  }

  std::vector<double> coords(std::size_t idx) const {
    std::vector<double> x(dim());
    std::size_t r = idx;
    for (int k = 0; k < dim(); ++k) {
      x[k] = lo[k] + h[k] * static_cast<double>(r % n[k]);
      r /= n[k];
    }
    return x;
  }

  double cell_volume() const {
    double v = 1;
    for (double s : h) v *= s;
    return v;
  }

  double diameter() const {
    double s = 0;
    for (int k = 0; k < dim(); ++k) s += std::pow(h[k] * (n[k] - 1), 2);
    return std::sqrt(s);
  }

  std::size_t nearest(const std::vector<double>& x) const {
    std::vector<int> ix(dim());
    for (int k = 0; k < dim(); ++k)
      ix[k] = std::clamp(static_cast<int>(std::lround((x[k] - lo[k]) / h[k])), 0, n[k] - 1);
    return ravel(ix.data());
  }

  friend bool operator==(const box_grid&, const box_grid&) = default;
};

/// Closed box [lo, hi]^d sampled with `count` nodes per axis, endpoints included.
inline box_grid closed_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                            const std::vector<int>& count) {
  box_grid g;
  g.lo = lo;
  g.n = count;
  for (std::size_t k = 0; k < lo.size(); ++k)
    g.h.push_back(count[k] > 1 ? (hi[k] - lo[k]) / (count[k] - 1) : 1.0);
  return g;
}

/// Interior nodes of [lo, hi]^d for Dirichlet problems: spacing (hi-lo)/(n+1).
inline box_grid interior_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                              const std::vector<int>& interior) {
  box_grid g;
  g.n = interior;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    const double h = (hi[k] - lo[k]) / (interior[k] + 1);
    g.h.push_back(h);
    g.lo.push_back(lo[k] + h);
  }
  return g;
}

/// Interior grid with requested spacing, rounded so that the spacing divides the box.
inline box_grid interior_grid_spacing(const std::vector<double>& lo, const std::vector<double>& hi,
                                      double h) {
  std::vector<int> n;
  for (std::size_t k = 0; k < lo.size(); ++k)
    n.push_back(static_cast<int>(std::lround((hi[k] - lo[k]) / h)) - 1);
  return interior_grid(lo, hi, n);
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

/// Worker count: hardware concurrency capped by BERGKERN_THREADS.
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BERGKERN_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

/// Runs fn(i) for i in [0, n) on static contiguous chunks. Each index must write only its own slot.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned t = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(t);
  for (unsigned w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = n * w / t; i < n * (w + 1) / t; ++i) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace bergkern
