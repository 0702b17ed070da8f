// Pointer-generator seq2seq: bi-LSTM encoder, attentional LSTM decoder with a
// copy mechanism over the extended source vocabulary, teacher-forced NLL and
// its analytic gradients, and the shared-encoder multi-task loss.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kpgen/common.hpp"
#include "kpgen/data.hpp"
#include "kpgen/lstm.hpp"
#include "kpgen/param.hpp"
#include "kpgen/tensor.hpp"

namespace kpgen {

constexpr Real kLogFloor = 1e-12;  // floors log p(gold) against support-zero targets

struct ModelConfig {
  int vocab_size = 0;
  int emb_dim = 128;
  int hidden = 512;
  bool with_aux = false;  // second decoder for the title-generation task
  Real accum_init = 0.1;
};

// One decoder "bundle": LSTM, state-init projections, attention, output
// layers and the copy switch. The multi-task setup instantiates two.
struct DecoderParams {
  LstmParams lstm;                      // input emb -> hidden
  Parameter w_init_h, b_init_h;         // H x 2H, H
  Parameter w_init_c, b_init_c;
  Parameter w_att;                      // H + 2H scores row; no bias (softmax-shift invariant)
  Parameter w_d2, b_d2;                 // H x 3H, H
  Parameter w_d1, b_d1;                 // V x H, V
  Parameter w_c, w_s, w_y, b_gen;       // 2H, H, E, 1

  DecoderParams() = default;
  DecoderParams(const std::string& prefix, int vocab, int emb, int hidden, Real accum)
      : lstm(prefix + ".lstm", emb, hidden, accum),
        w_init_h(prefix + ".w_init_h", {hidden, 2 * hidden}, accum),
        b_init_h(prefix + ".b_init_h", {hidden}, accum),
        w_init_c(prefix + ".w_init_c", {hidden, 2 * hidden}, accum),
        b_init_c(prefix + ".b_init_c", {hidden}, accum),
        w_att(prefix + ".w_att", {3 * hidden}, accum),
        w_d2(prefix + ".w_d2", {hidden, 3 * hidden}, accum),
        b_d2(prefix + ".b_d2", {hidden}, accum),
        w_d1(prefix + ".w_d1", {vocab, hidden}, accum),
        b_d1(prefix + ".b_d1", {vocab}, accum),
        w_c(prefix + ".w_c", {2 * hidden}, accum),
        w_s(prefix + ".w_s", {hidden}, accum),
        w_y(prefix + ".w_y", {emb}, accum),
        b_gen(prefix + ".b_gen", {1}, accum) {}

  void collect(ParamRefs& out) {
    for (Parameter* p : {&lstm.wx, &lstm.wh, &lstm.b, &w_init_h, &b_init_h, &w_init_c, &b_init_c,
                         &w_att, &w_d2, &b_d2, &w_d1, &b_d1, &w_c, &w_s, &w_y, &b_gen})
      out.push_back(p);
  }
};

struct ModelParams {
  ModelConfig cfg;
  Parameter embedding;  // V x E, shared by the encoder and both decoders
  LstmParams enc_fwd, enc_bwd;
  DecoderParams dec_main;
  std::optional<DecoderParams> dec_aux;

  ModelParams() = default;
  explicit ModelParams(const ModelConfig& c)
      : cfg(c),
        embedding("embedding", {c.vocab_size, c.emb_dim}, c.accum_init),
        enc_fwd("enc_fwd", c.emb_dim, c.hidden, c.accum_init),
        enc_bwd("enc_bwd", c.emb_dim, c.hidden, c.accum_init),
        dec_main("dec_main", c.vocab_size, c.emb_dim, c.hidden, c.accum_init) {
    if (c.vocab_size <= 0) fail("ModelParams: vocab_size must be positive");
    if (c.with_aux) dec_aux.emplace("dec_aux", c.vocab_size, c.emb_dim, c.hidden, c.accum_init);
  }

  void init_uniform(Rng& rng, Real lo = Real(-0.1), Real hi = Real(0.1)) {
    for (auto* p : all()) p->init_uniform(rng, lo, hi);
  }

  ParamRefs all() {
    ParamRefs out;
    out.push_back(&embedding);
    for (Parameter* p : {&enc_fwd.wx, &enc_fwd.wh, &enc_fwd.b, &enc_bwd.wx, &enc_bwd.wh, &enc_bwd.b})
      out.push_back(p);
    dec_main.collect(out);
    if (dec_aux) dec_aux->collect(out);
    return out;
  }

  // Shared theta^e: embedding plus both encoder directions.
  ParamRefs encoder_group() {
    ParamRefs out;
    out.push_back(&embedding);
    for (Parameter* p : {&enc_fwd.wx, &enc_fwd.wh, &enc_fwd.b, &enc_bwd.wx, &enc_bwd.wh, &enc_bwd.b})
      out.push_back(p);
    return out;
  }

  ParamRefs decoder_group(bool aux) {
    ParamRefs out;
    decoder(aux).collect(out);
    return out;
  }

  DecoderParams& decoder(bool aux) {
    if (!aux) return dec_main;
    if (!dec_aux) fail("auxiliary decoder requested but the model was built without one");
    return *dec_aux;
  }
  const DecoderParams& decoder(bool aux) const {
    return const_cast<ModelParams*>(this)->decoder(aux);
  }

  int vocab_size() const { return cfg.vocab_size; }
  int emb_dim() const { return cfg.emb_dim; }
  int hidden() const { return cfg.hidden; }
};

// --- forward infrastructure ---------------------------------------------------

struct EncoderStates {
  int len = 0;
  int hidden = 0;                    // per-direction width; rows of H are 2*hidden
  std::vector<Real> H;               // len x 2H, h_t = [fwd_t ; bwd_t]
  std::vector<Real> init_h, init_c;  // decoder start state (per decoder projection)
  std::vector<int> src_ext_ids;      // extended-vocabulary ids of the source
  int oov_count = 0;

  const Real* row(int t) const { return H.data() + static_cast<size_t>(t) * 2 * hidden; }
};

struct DropoutOpts {
  Real rate = 0;
  Rng* rng = nullptr;  // required when rate > 0
};

namespace detail {

// Returns the keep-multiplier mask (empty when dropout is off) and scales x.
inline std::vector<Real> apply_dropout(std::vector<Real>& x, const DropoutOpts& d) {
  if (d.rate <= 0) return {};
  if (!d.rng) fail("dropout requires an RNG");
  std::vector<Real> mask(x.size());
  const Real keep = Real(1) - d.rate;
  for (size_t i = 0; i < x.size(); ++i) {
    mask[i] = d.rng->uniform() < d.rate ? Real(0) : Real(1) / keep;
    x[i] *= mask[i];
  }
  return mask;
}

inline void mask_grad(std::vector<Real>& g, const std::vector<Real>& mask) {
  if (mask.empty()) return;
  for (size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
}

}  // namespace detail

struct EncoderWork {
  std::vector<std::vector<Real>> emb;    // per-position input (post-dropout)
  std::vector<std::vector<Real>> masks;  // dropout masks, empty when off
  std::vector<LstmCache> fwd_cache, bwd_cache;
  std::vector<std::vector<Real>> fwd_h, fwd_c, bwd_h, bwd_c;
  std::vector<Real> init_u;  // [fwd_h_last ; bwd_h_first]
};

inline void run_encoder(const ModelParams& mp, const DecoderParams& dp,
                        const std::vector<int>& src_ids, const DropoutOpts& drop,
                        EncoderStates& enc, EncoderWork* work) {
  const int s_len = static_cast<int>(src_ids.size());
  if (s_len == 0) fail("encode: empty source");
  const int hdim = mp.hidden();
  const int e_dim = mp.emb_dim();

  EncoderWork local;
  EncoderWork& w = work ? *work : local;
  w.emb.assign(static_cast<size_t>(s_len), {});
  w.masks.assign(static_cast<size_t>(s_len), {});
  w.fwd_cache.assign(static_cast<size_t>(s_len), {});
  w.bwd_cache.assign(static_cast<size_t>(s_len), {});
  w.fwd_h.assign(static_cast<size_t>(s_len), std::vector<Real>(static_cast<size_t>(hdim)));
  w.fwd_c.assign(static_cast<size_t>(s_len), std::vector<Real>(static_cast<size_t>(hdim)));
  w.bwd_h.assign(static_cast<size_t>(s_len), std::vector<Real>(static_cast<size_t>(hdim)));
  w.bwd_c.assign(static_cast<size_t>(s_len), std::vector<Real>(static_cast<size_t>(hdim)));

  for (int t = 0; t < s_len; ++t) {
    int id = src_ids[static_cast<size_t>(t)];
    if (id < 0 || id >= mp.vocab_size()) fail("encode: source id out of vocabulary range");
    const Real* row = mp.embedding.value.row(id);
    w.emb[static_cast<size_t>(t)].assign(row, row + e_dim);
    w.masks[static_cast<size_t>(t)] = detail::apply_dropout(w.emb[static_cast<size_t>(t)], drop);
  }

  std::vector<Real> zeros(static_cast<size_t>(hdim), Real(0));
  for (int t = 0; t < s_len; ++t) {
    const Real* h_prev = t == 0 ? zeros.data() : w.fwd_h[static_cast<size_t>(t - 1)].data();
    const Real* c_prev = t == 0 ? zeros.data() : w.fwd_c[static_cast<size_t>(t - 1)].data();
    lstm_step(mp.enc_fwd, w.emb[static_cast<size_t>(t)].data(), h_prev, c_prev,
              w.fwd_h[static_cast<size_t>(t)].data(), w.fwd_c[static_cast<size_t>(t)].data(),
              &w.fwd_cache[static_cast<size_t>(t)]);
  }
  for (int t = s_len - 1; t >= 0; --t) {
    const Real* h_prev = t == s_len - 1 ? zeros.data() : w.bwd_h[static_cast<size_t>(t + 1)].data();
    const Real* c_prev = t == s_len - 1 ? zeros.data() : w.bwd_c[static_cast<size_t>(t + 1)].data();
    lstm_step(mp.enc_bwd, w.emb[static_cast<size_t>(t)].data(), h_prev, c_prev,
              w.bwd_h[static_cast<size_t>(t)].data(), w.bwd_c[static_cast<size_t>(t)].data(),
              &w.bwd_cache[static_cast<size_t>(t)]);
  }

  enc.len = s_len;
  enc.hidden = hdim;
  enc.H.assign(static_cast<size_t>(s_len) * 2 * hdim, Real(0));
  for (int t = 0; t < s_len; ++t) {
    Real* row = enc.H.data() + static_cast<size_t>(t) * 2 * hdim;
    std::copy(w.fwd_h[static_cast<size_t>(t)].begin(), w.fwd_h[static_cast<size_t>(t)].end(), row);
    std::copy(w.bwd_h[static_cast<size_t>(t)].begin(), w.bwd_h[static_cast<size_t>(t)].end(), row + hdim);
  }

  w.init_u.assign(static_cast<size_t>(2 * hdim), Real(0));
  std::copy(w.fwd_h[static_cast<size_t>(s_len - 1)].begin(), w.fwd_h[static_cast<size_t>(s_len - 1)].end(),
            w.init_u.begin());
  std::copy(w.bwd_h[0].begin(), w.bwd_h[0].end(), w.init_u.begin() + hdim);

  enc.init_h.assign(dp.b_init_h.value.v.begin(), dp.b_init_h.value.v.end());
  matvec_acc(dp.w_init_h.value.v.data(), hdim, 2 * hdim, w.init_u.data(), enc.init_h.data());
  enc.init_c.assign(dp.b_init_c.value.v.begin(), dp.b_init_c.value.v.end());
  matvec_acc(dp.w_init_c.value.v.data(), hdim, 2 * hdim, w.init_u.data(), enc.init_c.data());
  for (int k = 0; k < hdim; ++k) {
    enc.init_h[static_cast<size_t>(k)] = std::tanh(enc.init_h[static_cast<size_t>(k)]);
    enc.init_c[static_cast<size_t>(k)] = std::tanh(enc.init_c[static_cast<size_t>(k)]);
  }
  ensure_finite(enc.H, "encoder states");
}

// Public encoder entry point used by inference and tests.
inline EncoderStates encode(const Example& ex, const ModelParams& mp, bool aux_decoder = false) {
  EncoderStates enc;
  run_encoder(mp, mp.decoder(aux_decoder), ex.src_ids, {}, enc, nullptr);
  enc.src_ext_ids = ex.src_ext_ids;
  enc.oov_count = ex.oov_count();
  return enc;
}

// Attention over encoder states: score_i = w_att . [s ; h_i], alpha = softmax,
// context = sum_i alpha_i h_i. Exposed for direct testing.
inline void attend(const Real* s, const EncoderStates& enc, const DecoderParams& dp,
                   std::vector<Real>& ctx, std::vector<Real>& alpha) {
  const int hdim = enc.hidden;
  const Real* wa_s = dp.w_att.value.v.data();
  const Real* wa_h = wa_s + hdim;
  alpha.assign(static_cast<size_t>(enc.len), Real(0));
  const Real s_part = dot(wa_s, s, hdim);
  for (int i = 0; i < enc.len; ++i)
    alpha[static_cast<size_t>(i)] = s_part + dot(wa_h, enc.row(i), 2 * hdim);
  softmax_inplace(alpha.data(), enc.len);
  ctx.assign(static_cast<size_t>(2 * hdim), Real(0));
  for (int i = 0; i < enc.len; ++i)
    axpy(alpha[static_cast<size_t>(i)], enc.row(i), ctx.data(), 2 * hdim);
}

// Everything one decoder step produces; kept for the backward pass.
struct StepWork {
  int emb_row = 0;                    // embedding row fed (OOV inputs clamp to UNK)
  std::vector<Real> e, mask_e;        // input embedding and its dropout mask
  LstmCache lstm;
  std::vector<Real> s, c;             // decoder state after the step
  std::vector<Real> alpha, ctx;
  std::vector<Real> zin, mask_zin;    // [s ; ctx] after dropout
  std::vector<Real> z, pv;
  Real pgen = 0;
  // gold bookkeeping (training only)
  int gold = -1;
  Real ptgt = 0, copy_mass = 0;
  bool floored = false;
};

inline void run_decoder_step(const ModelParams& mp, const DecoderParams& dp,
                             const EncoderStates& enc, int input_ext_id, const Real* h_prev,
                             const Real* c_prev, const DropoutOpts& drop, StepWork& w) {
  const int hdim = mp.hidden();
  const int e_dim = mp.emb_dim();
  const int vsize = mp.vocab_size();

  if (input_ext_id < 0 || input_ext_id >= vsize + enc.oov_count)
    fail("decode_step: previous token id outside the extended vocabulary");
  w.emb_row = input_ext_id < vsize ? input_ext_id : kUnk;
  const Real* erow = mp.embedding.value.row(w.emb_row);
  w.e.assign(erow, erow + e_dim);
  w.mask_e = detail::apply_dropout(w.e, drop);

  w.s.assign(static_cast<size_t>(hdim), Real(0));
  w.c.assign(static_cast<size_t>(hdim), Real(0));
  lstm_step(dp.lstm, w.e.data(), h_prev, c_prev, w.s.data(), w.c.data(), &w.lstm);

  attend(w.s.data(), enc, dp, w.ctx, w.alpha);

  w.zin.resize(static_cast<size_t>(3 * hdim));
  std::copy(w.s.begin(), w.s.end(), w.zin.begin());
  std::copy(w.ctx.begin(), w.ctx.end(), w.zin.begin() + hdim);
  w.mask_zin = detail::apply_dropout(w.zin, drop);

  w.z.assign(dp.b_d2.value.v.begin(), dp.b_d2.value.v.end());
  matvec_acc(dp.w_d2.value.v.data(), hdim, 3 * hdim, w.zin.data(), w.z.data());
  for (Real& x : w.z) x = std::tanh(x);

  w.pv.assign(dp.b_d1.value.v.begin(), dp.b_d1.value.v.end());
  matvec_acc(dp.w_d1.value.v.data(), vsize, hdim, w.z.data(), w.pv.data());
  ensure_finite(w.pv, "decoder logits");
  softmax_inplace(w.pv.data(), vsize);

  Real gpre = dp.b_gen.value.at(0) + dot(dp.w_c.value.v.data(), w.ctx.data(), 2 * hdim) +
              dot(dp.w_s.value.v.data(), w.s.data(), hdim) +
              dot(dp.w_y.value.v.data(), w.e.data(), e_dim);
  if (!std::isfinite(gpre)) fail("decode_step: non-finite generation-gate input");
  w.pgen = sigmoid(gpre);
}

// Pointer-generator mixture for one extended-vocabulary id w:
// p(w) = p_gen * p_vocab(w) + (1 - p_gen) * sum_{i: x_i = w} alpha_i,
// with p_vocab(w) = 0 outside the fixed vocabulary and the copy term 0 for
// tokens outside the source.
inline Real mixture_prob(const StepWork& w, const EncoderStates& enc, int vsize, int ext_id,
                         Real* copy_mass_out = nullptr) {
  Real copy = 0;
  for (int i = 0; i < enc.len; ++i)
    if (enc.src_ext_ids[static_cast<size_t>(i)] == ext_id) copy += w.alpha[static_cast<size_t>(i)];
  if (copy_mass_out) *copy_mass_out = copy;
  Real p = (Real(1) - w.pgen) * copy;
  if (ext_id < vsize) p += w.pgen * w.pv[static_cast<size_t>(ext_id)];
  return p;
}

// Inference-facing view of one decoder step with the full extended distribution.
struct StepOutput {
  std::vector<Real> s;        // decoder state
  std::vector<Real> alpha;    // attention over source positions
  std::vector<Real> ctx;
  std::vector<Real> p_vocab;  // fixed-vocabulary distribution
  Real p_gen = 0;
  std::vector<Real> p_final;  // vocab + document OOV distribution
};

struct DecodeState {
  std::vector<Real> h, c;
};

inline DecodeState initial_state(const EncoderStates& enc) { return {enc.init_h, enc.init_c}; }

inline StepOutput decode_step(int y_prev_ext_id, DecodeState& state, const EncoderStates& enc,
                              const ModelParams& mp, bool aux_decoder = false) {
  const DecoderParams& dp = mp.decoder(aux_decoder);
  StepWork w;
  run_decoder_step(mp, dp, enc, y_prev_ext_id, state.h.data(), state.c.data(), {}, w);
  const int vsize = mp.vocab_size();

  StepOutput out;
  out.p_final.assign(static_cast<size_t>(vsize + enc.oov_count), Real(0));
  for (int v = 0; v < vsize; ++v)
    out.p_final[static_cast<size_t>(v)] = w.pgen * w.pv[static_cast<size_t>(v)];
  for (int i = 0; i < enc.len; ++i)
    out.p_final[static_cast<size_t>(enc.src_ext_ids[static_cast<size_t>(i)])] +=
        (Real(1) - w.pgen) * w.alpha[static_cast<size_t>(i)];

  state.h = w.s;
  state.c = w.c;
  out.s = std::move(w.s);
  out.alpha = std::move(w.alpha);
  out.ctx = std::move(w.ctx);
  out.p_vocab = std::move(w.pv);
  out.p_gen = w.pgen;
  return out;
}

// --- teacher-forced loss and gradients -----------------------------------------

struct LossStats {
  Real loss = 0;      // summed negative log-likelihood
  long tokens = 0;    // target tokens scored (EOS included)
  long floored = 0;   // gold tokens that hit the probability floor
};

namespace detail {

struct ForwardWork {
  EncoderStates enc;
  EncoderWork enc_work;
  std::vector<StepWork> steps;
};

// Encoder + teacher-forced decoder forward; fills caches for backward.
inline LossStats forward_model(const ModelParams& mp, const DecoderParams& dp, const Example& ex,
                               const DropoutOpts& drop, ForwardWork& fw) {
  if (ex.tgt_ext_ids.empty()) fail("sequence_nll: example has no target");
  run_encoder(mp, dp, ex.src_ids, drop, fw.enc, &fw.enc_work);
  fw.enc.src_ext_ids = ex.src_ext_ids;
  fw.enc.oov_count = ex.oov_count();

  const int vsize = mp.vocab_size();
  const int t_len = static_cast<int>(ex.tgt_ext_ids.size());
  fw.steps.assign(static_cast<size_t>(t_len), {});

  LossStats stats;
  const Real* h_prev = fw.enc.init_h.data();
  const Real* c_prev = fw.enc.init_c.data();
  for (int t = 0; t < t_len; ++t) {
    StepWork& w = fw.steps[static_cast<size_t>(t)];
    int input = t == 0 ? kBos : ex.tgt_ext_ids[static_cast<size_t>(t - 1)];
    run_decoder_step(mp, dp, fw.enc, input, h_prev, c_prev, drop, w);
    w.gold = ex.tgt_ext_ids[static_cast<size_t>(t)];
    w.ptgt = mixture_prob(w, fw.enc, vsize, w.gold, &w.copy_mass);
    if (w.ptgt < kLogFloor) {
      w.floored = true;
      ++stats.floored;
      stats.loss -= std::log(kLogFloor);
    } else {
      stats.loss -= std::log(w.ptgt);
    }
    ++stats.tokens;
    h_prev = w.s.data();
    c_prev = w.c.data();
  }
  return stats;
}

// Full backward pass through decoder, attention, copy mixture and encoder.
inline void backward_model(ModelParams& mp, DecoderParams& dp, const Example& ex,
                           ForwardWork& fw) {
  const int hdim = mp.hidden();
  const int e_dim = mp.emb_dim();
  const int vsize = mp.vocab_size();
  const int s_len = fw.enc.len;
  const int t_len = static_cast<int>(fw.steps.size());
  const Real* wa_s = dp.w_att.value.v.data();
  const Real* wa_h = wa_s + hdim;

  std::vector<Real> d_enc_h(static_cast<size_t>(s_len) * 2 * hdim, Real(0));
  std::vector<Real> dh_next(static_cast<size_t>(hdim), Real(0));
  std::vector<Real> dc_next(static_cast<size_t>(hdim), Real(0));

  std::vector<Real> dalpha, dscores, dlogits, dz, dzin, dctx, de, dh_prev, dc_prev;
  for (int t = t_len - 1; t >= 0; --t) {
    StepWork& w = fw.steps[static_cast<size_t>(t)];
    std::vector<Real> ds = dh_next;   // gradient into s_t
    std::vector<Real> dcc = dc_next;  // gradient into cell state

    const Real dm = w.floored ? Real(0) : Real(-1) / w.ptgt;

    // mixture: p = pgen*pv[g] (g in vocab) + (1-pgen)*copy_mass
    Real dpgen = dm * ((w.gold < vsize ? w.pv[static_cast<size_t>(w.gold)] : Real(0)) - w.copy_mass);
    dalpha.assign(static_cast<size_t>(s_len), Real(0));
    for (int i = 0; i < s_len; ++i)
      if (fw.enc.src_ext_ids[static_cast<size_t>(i)] == w.gold)
        dalpha[static_cast<size_t>(i)] = dm * (Real(1) - w.pgen);

    // vocabulary softmax (sparse upstream gradient on the gold entry)
    dlogits.assign(static_cast<size_t>(vsize), Real(0));
    if (w.gold < vsize) {
      const Real dpv_g = dm * w.pgen;
      const Real inner = dpv_g * w.pv[static_cast<size_t>(w.gold)];
      for (int v = 0; v < vsize; ++v) dlogits[static_cast<size_t>(v)] = -w.pv[static_cast<size_t>(v)] * inner;
      dlogits[static_cast<size_t>(w.gold)] += w.pv[static_cast<size_t>(w.gold)] * dpv_g;
    }

    outer_acc(dp.w_d1.grad.v.data(), vsize, hdim, dlogits.data(), w.z.data());
    axpy(Real(1), dlogits.data(), dp.b_d1.grad.v.data(), vsize);
    dz.assign(static_cast<size_t>(hdim), Real(0));
    matvec_t_acc(dp.w_d1.value.v.data(), vsize, hdim, dlogits.data(), dz.data());

    for (int k = 0; k < hdim; ++k)
      dz[static_cast<size_t>(k)] *= Real(1) - w.z[static_cast<size_t>(k)] * w.z[static_cast<size_t>(k)];
    outer_acc(dp.w_d2.grad.v.data(), hdim, 3 * hdim, dz.data(), w.zin.data());
    axpy(Real(1), dz.data(), dp.b_d2.grad.v.data(), hdim);
    dzin.assign(static_cast<size_t>(3 * hdim), Real(0));
    matvec_t_acc(dp.w_d2.value.v.data(), hdim, 3 * hdim, dz.data(), dzin.data());
    detail::mask_grad(dzin, w.mask_zin);

    dctx.assign(static_cast<size_t>(2 * hdim), Real(0));
    axpy(Real(1), dzin.data() + hdim, dctx.data(), 2 * hdim);
    axpy(Real(1), dzin.data(), ds.data(), hdim);

    // generation gate
    const Real dgpre = dpgen * w.pgen * (Real(1) - w.pgen);
    de.assign(static_cast<size_t>(e_dim), Real(0));
    if (dgpre != 0) {
      axpy(dgpre, w.ctx.data(), dp.w_c.grad.v.data(), 2 * hdim);
      axpy(dgpre, w.s.data(), dp.w_s.grad.v.data(), hdim);
      axpy(dgpre, w.e.data(), dp.w_y.grad.v.data(), e_dim);
      dp.b_gen.grad.at(0) += dgpre;
      axpy(dgpre, dp.w_c.value.v.data(), dctx.data(), 2 * hdim);
      axpy(dgpre, dp.w_s.value.v.data(), ds.data(), hdim);
      axpy(dgpre, dp.w_y.value.v.data(), de.data(), e_dim);
    }

    // context sum
    for (int i = 0; i < s_len; ++i) {
      dalpha[static_cast<size_t>(i)] += dot(dctx.data(), fw.enc.row(i), 2 * hdim);
      axpy(w.alpha[static_cast<size_t>(i)], dctx.data(),
           d_enc_h.data() + static_cast<size_t>(i) * 2 * hdim, 2 * hdim);
    }

    // attention softmax and scores
    dscores.assign(static_cast<size_t>(s_len), Real(0));
    softmax_backward(w.alpha.data(), dalpha.data(), dscores.data(), s_len);
    Real dscore_sum = 0;
    for (int i = 0; i < s_len; ++i) {
      const Real dsc = dscores[static_cast<size_t>(i)];
      dscore_sum += dsc;
      axpy(dsc, fw.enc.row(i), dp.w_att.grad.v.data() + hdim, 2 * hdim);
      axpy(dsc, wa_h, d_enc_h.data() + static_cast<size_t>(i) * 2 * hdim, 2 * hdim);
    }
    axpy(dscore_sum, w.s.data(), dp.w_att.grad.v.data(), hdim);
    axpy(dscore_sum, wa_s, ds.data(), hdim);

    // decoder LSTM
    const Real* h_prev = t == 0 ? fw.enc.init_h.data() : fw.steps[static_cast<size_t>(t - 1)].s.data();
    const Real* c_prev = t == 0 ? fw.enc.init_c.data() : fw.steps[static_cast<size_t>(t - 1)].c.data();
    dh_prev.assign(static_cast<size_t>(hdim), Real(0));
    dc_prev.assign(static_cast<size_t>(hdim), Real(0));
    lstm_step_backward(dp.lstm, w.e.data(), h_prev, c_prev, w.lstm, ds.data(), dcc.data(),
                       de.data(), dh_prev.data(), dc_prev.data());
    dh_next = dh_prev;
    dc_next = dc_prev;

    detail::mask_grad(de, w.mask_e);
    axpy(Real(1), de.data(), mp.embedding.grad.row(w.emb_row), e_dim);
  }

  // decoder initial state projections: init = tanh(W u + b)
  EncoderWork& ew = fw.enc_work;
  std::vector<Real> du(static_cast<size_t>(2 * hdim), Real(0));
  for (auto& [d_init, init, w_init, b_init] :
       {std::tie(dh_next, fw.enc.init_h, dp.w_init_h, dp.b_init_h),
        std::tie(dc_next, fw.enc.init_c, dp.w_init_c, dp.b_init_c)}) {
    std::vector<Real> dpre(static_cast<size_t>(hdim));
    for (int k = 0; k < hdim; ++k)
      dpre[static_cast<size_t>(k)] =
          d_init[static_cast<size_t>(k)] *
          (Real(1) - init[static_cast<size_t>(k)] * init[static_cast<size_t>(k)]);
    outer_acc(w_init.grad.v.data(), hdim, 2 * hdim, dpre.data(), ew.init_u.data());
    axpy(Real(1), dpre.data(), b_init.grad.v.data(), hdim);
    matvec_t_acc(w_init.value.v.data(), hdim, 2 * hdim, dpre.data(), du.data());
  }

  // encoder backward: split per-position gradients into the two directions
  std::vector<std::vector<Real>> d_fwd_h(static_cast<size_t>(s_len),
                                         std::vector<Real>(static_cast<size_t>(hdim), Real(0)));
  std::vector<std::vector<Real>> d_bwd_h(static_cast<size_t>(s_len),
                                         std::vector<Real>(static_cast<size_t>(hdim), Real(0)));
  for (int i = 0; i < s_len; ++i) {
    axpy(Real(1), d_enc_h.data() + static_cast<size_t>(i) * 2 * hdim,
         d_fwd_h[static_cast<size_t>(i)].data(), hdim);
    axpy(Real(1), d_enc_h.data() + static_cast<size_t>(i) * 2 * hdim + hdim,
         d_bwd_h[static_cast<size_t>(i)].data(), hdim);
  }
  axpy(Real(1), du.data(), d_fwd_h[static_cast<size_t>(s_len - 1)].data(), hdim);
  axpy(Real(1), du.data() + hdim, d_bwd_h[0].data(), hdim);

  std::vector<std::vector<Real>> d_emb(static_cast<size_t>(s_len),
                                       std::vector<Real>(static_cast<size_t>(e_dim), Real(0)));
  std::vector<Real> zeros(static_cast<size_t>(hdim), Real(0));
  std::vector<Real> dh_carry(static_cast<size_t>(hdim), Real(0));
  std::vector<Real> dc_carry(static_cast<size_t>(hdim), Real(0));
  std::vector<Real> dh_out(static_cast<size_t>(hdim)), dc_out(static_cast<size_t>(hdim));
  for (int t = s_len - 1; t >= 0; --t) {
    axpy(Real(1), dh_carry.data(), d_fwd_h[static_cast<size_t>(t)].data(), hdim);
    const Real* h_prev = t == 0 ? zeros.data() : ew.fwd_h[static_cast<size_t>(t - 1)].data();
    const Real* c_prev = t == 0 ? zeros.data() : ew.fwd_c[static_cast<size_t>(t - 1)].data();
    std::fill(dh_out.begin(), dh_out.end(), Real(0));
    std::fill(dc_out.begin(), dc_out.end(), Real(0));
    lstm_step_backward(mp.enc_fwd, ew.emb[static_cast<size_t>(t)].data(), h_prev, c_prev,
                       ew.fwd_cache[static_cast<size_t>(t)], d_fwd_h[static_cast<size_t>(t)].data(),
                       dc_carry.data(), d_emb[static_cast<size_t>(t)].data(), dh_out.data(),
                       dc_out.data());
    dh_carry = dh_out;
    dc_carry = dc_out;
  }
  std::fill(dh_carry.begin(), dh_carry.end(), Real(0));
  std::fill(dc_carry.begin(), dc_carry.end(), Real(0));
  for (int t = 0; t < s_len; ++t) {
    axpy(Real(1), dh_carry.data(), d_bwd_h[static_cast<size_t>(t)].data(), hdim);
    const Real* h_prev = t == s_len - 1 ? zeros.data() : ew.bwd_h[static_cast<size_t>(t + 1)].data();
    const Real* c_prev = t == s_len - 1 ? zeros.data() : ew.bwd_c[static_cast<size_t>(t + 1)].data();
    std::fill(dh_out.begin(), dh_out.end(), Real(0));
    std::fill(dc_out.begin(), dc_out.end(), Real(0));
    lstm_step_backward(mp.enc_bwd, ew.emb[static_cast<size_t>(t)].data(), h_prev, c_prev,
                       ew.bwd_cache[static_cast<size_t>(t)], d_bwd_h[static_cast<size_t>(t)].data(),
                       dc_carry.data(), d_emb[static_cast<size_t>(t)].data(), dh_out.data(),
                       dc_out.data());
    dh_carry = dh_out;
    dc_carry = dc_out;
  }
  for (int t = 0; t < s_len; ++t) {
    detail::mask_grad(d_emb[static_cast<size_t>(t)], ew.masks[static_cast<size_t>(t)]);
    axpy(Real(1), d_emb[static_cast<size_t>(t)].data(),
         mp.embedding.grad.row(ex.src_ids[static_cast<size_t>(t)]), e_dim);
  }
}

}  // namespace detail

// Teacher-forced summed NLL of the example under one decoder; no gradients.
inline LossStats sequence_nll(const Example& ex, const ModelParams& mp, bool aux_decoder = false) {
  detail::ForwardWork fw;
  return detail::forward_model(mp, mp.decoder(aux_decoder), ex, {}, fw);
}

// Same forward, then accumulates analytic gradients into the parameter grads.
inline LossStats sequence_nll_grad(const Example& ex, ModelParams& mp, bool aux_decoder = false,
                                   const DropoutOpts& drop = {}) {
  detail::ForwardWork fw;
  DecoderParams& dp = mp.decoder(aux_decoder);
  LossStats stats = detail::forward_model(mp, dp, ex, drop, fw);
  detail::backward_model(mp, dp, ex, fw);
  return stats;
}

// Log-probability of a forced output sequence (used to cross-check beam search).
inline Real sequence_logprob(const std::vector<int>& out_ext_ids, const Example& ex,
                             const ModelParams& mp, bool aux_decoder = false) {
  EncoderStates enc = encode(ex, mp, aux_decoder);
  DecodeState state = initial_state(enc);
  Real lp = 0;
  int prev = kBos;
  for (int id : out_ext_ids) {
    StepOutput out = decode_step(prev, state, enc, mp, aux_decoder);
    lp += std::log(out.p_final[static_cast<size_t>(id)]);
    prev = id;
  }
  return lp;
}

// Eq.-7-style multi-task objective: main pairs through the main decoder, title
// pairs through the auxiliary decoder, shared encoder. Pure evaluation.
inline std::pair<Real, Real> mtl_losses(const std::vector<Example>& main_batch,
                                        const std::vector<Example>& aux_batch,
                                        const ModelParams& mp) {
  if (!mp.dec_aux) fail("mtl_losses: model has no auxiliary decoder");
  Real main_loss = 0, aux_loss = 0;
  for (const auto& ex : main_batch) main_loss += sequence_nll(ex, mp, false).loss;
  for (const auto& ex : aux_batch) aux_loss += sequence_nll(ex, mp, true).loss;
  return {main_loss, aux_loss};
}

}  // namespace kpgen
