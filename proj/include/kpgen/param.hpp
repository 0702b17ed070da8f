// Learnable parameter storage, Adagrad updates, global-norm gradient clipping.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kpgen/common.hpp"
#include "kpgen/tensor.hpp"

namespace kpgen {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adagrad_accum;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape, Real accum_init = Real(0.1))
      : name(std::move(n)), value(shape), grad(shape), adagrad_accum(std::move(shape)) {
    adagrad_accum.fill(accum_init);
  }

  void init_uniform(Rng& rng, Real lo = Real(-0.1), Real hi = Real(0.1)) {
    for (Real& x : value.v) x = rng.uniform(lo, hi);
  }

  void zero_grad() { grad.fill(Real(0)); }

  void reset_accumulator(Real accum_init = Real(0.1)) { adagrad_accum.fill(accum_init); }
};

using ParamRefs = std::vector<Parameter*>;

inline void zero_grads(const ParamRefs& ps) {
  for (auto* p : ps) p->zero_grad();
}

inline void scale_grads(const ParamRefs& ps, Real s) {
  for (auto* p : ps)
    for (Real& g : p->grad.v) g *= s;
}

inline Real grad_norm(const ParamRefs& ps) {
  Real sq = 0;
  for (auto* p : ps)
    for (Real g : p->grad.v) sq += g * g;
  return std::sqrt(sq);
}

// Rescale all gradients so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
inline Real clip_gradients(const ParamRefs& ps, Real max_norm) {
  Real norm = grad_norm(ps);
  if (norm > max_norm && norm > 0) scale_grads(ps, max_norm / norm);
  return norm;
}

// accum += g^2; value -= lr * g / sqrt(accum)
inline void adagrad_step(const ParamRefs& ps, Real lr) {
  for (auto* p : ps) {
    size_t n = p->value.v.size();
    for (size_t i = 0; i < n; ++i) {
      Real g = p->grad.v[i];
      p->adagrad_accum.v[i] += g * g;
      p->value.v[i] -= lr * g / std::sqrt(p->adagrad_accum.v[i]);
    }
  }
}

// Value snapshots, used for checkpoint selection during training.
inline std::vector<std::vector<Real>> snapshot_values(const ParamRefs& ps) {
  std::vector<std::vector<Real>> out;
  out.reserve(ps.size());
  for (auto* p : ps) out.push_back(p->value.v);
  return out;
}

inline void restore_values(const ParamRefs& ps, const std::vector<std::vector<Real>>& snap) {
  if (snap.size() != ps.size()) fail("restore_values: snapshot size mismatch");
  for (size_t i = 0; i < ps.size(); ++i) {
    if (snap[i].size() != ps[i]->value.v.size()) fail("restore_values: shape mismatch");
    ps[i]->value.v = snap[i];
  }
}

}  // namespace kpgen
