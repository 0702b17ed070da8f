// Dense row-major tensor and the handful of BLAS-1/2 kernels the model needs.
#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "kpgen/common.hpp"

namespace kpgen {

struct Tensor {
  std::vector<int> shape;
  std::vector<Real> v;  // row-major

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(numel(), Real(0));
  }

  size_t numel() const {
    size_t n = 1;
    for (int d : shape) {
      if (d < 0) fail("Tensor: negative dimension");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  Real& at(int i) { return v[static_cast<size_t>(i)]; }
  Real at(int i) const { return v[static_cast<size_t>(i)]; }
  Real& at(int i, int j) { return v[static_cast<size_t>(i) * cols() + j]; }
  Real at(int i, int j) const { return v[static_cast<size_t>(i) * cols() + j]; }

  Real* row(int i) { return v.data() + static_cast<size_t>(i) * cols(); }
  const Real* row(int i) const { return v.data() + static_cast<size_t>(i) * cols(); }

  void fill(Real x) { std::fill(v.begin(), v.end(), x); }

  bool all_finite() const {
    for (Real x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline void ensure_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) fail(std::string("non-finite values in ") + what);
}

inline void ensure_finite(const std::vector<Real>& t, const char* what) {
  for (Real x : t)
    if (!std::isfinite(x)) fail(std::string("non-finite values in ") + what);
}

// y += W x, W row-major (r x c), x length c, y length r
inline void matvec_acc(const Real* W, int r, int c, const Real* x, Real* y) {
  for (int i = 0; i < r; ++i) {
    const Real* wr = W + static_cast<size_t>(i) * c;
    Real s = 0;
    for (int j = 0; j < c; ++j) s += wr[j] * x[j];
    y[i] += s;
  }
}

// x += W^T d, W row-major (r x c), d length r, x length c
inline void matvec_t_acc(const Real* W, int r, int c, const Real* d, Real* x) {
  for (int i = 0; i < r; ++i) {
    const Real* wr = W + static_cast<size_t>(i) * c;
    Real di = d[i];
    if (di == 0) continue;
    for (int j = 0; j < c; ++j) x[j] += wr[j] * di;
  }
}

// W += d x^T (rank-1 update), W row-major (r x c)
inline void outer_acc(Real* W, int r, int c, const Real* d, const Real* x) {
  for (int i = 0; i < r; ++i) {
    Real* wr = W + static_cast<size_t>(i) * c;
    Real di = d[i];
    if (di == 0) continue;
    for (int j = 0; j < c; ++j) wr[j] += di * x[j];
  }
}

inline void axpy(Real a, const Real* x, Real* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline Real dot(const Real* a, const Real* b, int n) {
  Real s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

// In-place stable softmax (max subtraction); output sums to 1.
inline void softmax_inplace(Real* x, int n) {
  if (n == 0) return;
  Real mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  Real z = 0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    z += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= z;
}

inline std::vector<Real> softmax(std::vector<Real> x) {
  softmax_inplace(x.data(), static_cast<int>(x.size()));
  return x;
}

// d(loss)/d(scores) given d(loss)/d(softmax outputs); p = softmax(scores)
inline void softmax_backward(const Real* p, const Real* dp, Real* dscores, int n) {
  Real inner = 0;
  for (int i = 0; i < n; ++i) inner += dp[i] * p[i];
  for (int i = 0; i < n; ++i) dscores[i] = p[i] * (dp[i] - inner);
}

}  // namespace kpgen
