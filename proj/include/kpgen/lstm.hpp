// Single LSTM cell: forward step and the matching backward pass.
#pragma once

#include <cmath>
#include <vector>

#include "kpgen/param.hpp"
#include "kpgen/tensor.hpp"

namespace kpgen {

// Gate layout inside the stacked 4H pre-activation vector: i, f, g, o.
struct LstmParams {
  Parameter wx;  // 4H x I
  Parameter wh;  // 4H x H
  Parameter b;   // 4H

  LstmParams() = default;
  LstmParams(const std::string& prefix, int in_dim, int hidden, Real accum_init)
      : wx(prefix + ".wx", {4 * hidden, in_dim}, accum_init),
        wh(prefix + ".wh", {4 * hidden, hidden}, accum_init),
        b(prefix + ".b", {4 * hidden}, accum_init) {}

  int hidden() const { return b.value.rows() / 4; }
  int in_dim() const { return wx.value.cols(); }
};

// Per-step activations kept for the backward pass.
struct LstmCache {
  std::vector<Real> i, f, g, o;  // post-activation gates
  std::vector<Real> c;           // new cell state
  std::vector<Real> tanh_c;
};

// Standard gates: i,f,o = sigmoid, g = tanh; c = f*c_prev + i*g; h = o*tanh(c).
inline void lstm_step(const LstmParams& p, const Real* x, const Real* h_prev, const Real* c_prev,
                      Real* h_out, Real* c_out, LstmCache* cache = nullptr) {
  const int hdim = p.hidden();
  const int in = p.in_dim();
  std::vector<Real> pre(p.b.value.v);  // starts at the bias
  matvec_acc(p.wx.value.v.data(), 4 * hdim, in, x, pre.data());
  matvec_acc(p.wh.value.v.data(), 4 * hdim, hdim, h_prev, pre.data());
  ensure_finite(pre, "lstm_step pre-activations");

  LstmCache local;
  LstmCache& cc = cache ? *cache : local;
  cc.i.resize(static_cast<size_t>(hdim));
  cc.f.resize(static_cast<size_t>(hdim));
  cc.g.resize(static_cast<size_t>(hdim));
  cc.o.resize(static_cast<size_t>(hdim));
  cc.c.resize(static_cast<size_t>(hdim));
  cc.tanh_c.resize(static_cast<size_t>(hdim));
  for (int k = 0; k < hdim; ++k) {
    cc.i[k] = sigmoid(pre[static_cast<size_t>(k)]);
    cc.f[k] = sigmoid(pre[static_cast<size_t>(hdim + k)]);
    cc.g[k] = std::tanh(pre[static_cast<size_t>(2 * hdim + k)]);
    cc.o[k] = sigmoid(pre[static_cast<size_t>(3 * hdim + k)]);
    cc.c[k] = cc.f[k] * c_prev[k] + cc.i[k] * cc.g[k];
    cc.tanh_c[k] = std::tanh(cc.c[k]);
    c_out[k] = cc.c[k];
    h_out[k] = cc.o[k] * cc.tanh_c[k];
  }
}

// Accumulates parameter gradients plus gradients w.r.t. the step inputs.
// dh/dc carry the incoming gradients for this step's outputs; dx, dh_prev and
// dc_prev receive (accumulate) the input gradients.
inline void lstm_step_backward(LstmParams& p, const Real* x, const Real* h_prev,
                               const Real* c_prev, const LstmCache& cc, const Real* dh,
                               const Real* dc_in, Real* dx, Real* dh_prev, Real* dc_prev) {
  const int hdim = p.hidden();
  const int in = p.in_dim();
  std::vector<Real> dpre(static_cast<size_t>(4 * hdim));
  for (int k = 0; k < hdim; ++k) {
    Real dck = (dc_in ? dc_in[k] : Real(0)) + dh[k] * cc.o[k] * (Real(1) - cc.tanh_c[k] * cc.tanh_c[k]);
    Real dok = dh[k] * cc.tanh_c[k];
    Real dik = dck * cc.g[k];
    Real dfk = dck * c_prev[k];
    Real dgk = dck * cc.i[k];
    dpre[static_cast<size_t>(k)] = dik * cc.i[k] * (Real(1) - cc.i[k]);
    dpre[static_cast<size_t>(hdim + k)] = dfk * cc.f[k] * (Real(1) - cc.f[k]);
    dpre[static_cast<size_t>(2 * hdim + k)] = dgk * (Real(1) - cc.g[k] * cc.g[k]);
    dpre[static_cast<size_t>(3 * hdim + k)] = dok * cc.o[k] * (Real(1) - cc.o[k]);
    if (dc_prev) dc_prev[k] += dck * cc.f[k];
  }
  outer_acc(p.wx.grad.v.data(), 4 * hdim, in, dpre.data(), x);
  outer_acc(p.wh.grad.v.data(), 4 * hdim, hdim, dpre.data(), h_prev);
  axpy(Real(1), dpre.data(), p.b.grad.v.data(), 4 * hdim);
  if (dx) matvec_t_acc(p.wx.value.v.data(), 4 * hdim, in, dpre.data(), dx);
  if (dh_prev) matvec_t_acc(p.wh.value.v.data(), 4 * hdim, hdim, dpre.data(), dh_prev);
}

}  // namespace kpgen
