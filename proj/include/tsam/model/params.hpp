#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsam/model/config.hpp"
#include "tsam/numerics/tape.hpp"

namespace tsam {

// Parameter groups are templated on the element type so the same layout
// holds plain matrices (ModelParams) and tape variables (BoundParams).

template <typename T>
struct GatHead {
  T weight;     // f_struct x f_in
  T attention;  // 1 x 2*f_struct
};

template <typename T>
struct GatParams {
  std::vector<GatHead<T>> heads;
};

template <typename T>
struct GclParams {
  std::vector<TransformKind> kinds;
  std::vector<T> weights;  // f_in x f_struct, one per kind
};

// Input weights are h_rnn x (n * f_struct), recurrent weights h_rnn x h_rnn,
// biases 1 x h_rnn. The candidate-memory input weight is `w_n`.
template <typename T>
struct GruParams {
  T w_z, w_r, w_n;
  T u_z, u_r, u_n;
  T b_z, b_r, b_n;
};

template <typename T>
struct AttnHead {
  T w_q, w_k, w_v;  // h_rnn x f_attn
};

template <typename T>
struct TemporalAttnParams {
  std::vector<AttnHead<T>> heads;
};

template <typename T>
struct DecoderParams {
  T w_h;  // (k_time * f_attn) x h_dec
  T b_h;  // 1 x h_dec
  T w_o;  // h_dec x n^2
  T b_o;  // 1 x n^2
};

template <typename T>
struct ParamsT {
  GatParams<T> gat;
  GclParams<T> gcl;
  GruParams<T> gru;
  TemporalAttnParams<T> attn;
  DecoderParams<T> dec;
};

// Calls f(name, tensor) for every tensor in a fixed order.
template <typename P, typename F>
void for_each_param(P& p, F&& f) {
  for (std::size_t k = 0; k < p.gat.heads.size(); ++k) {
    const std::string pre = "gat.head" + std::to_string(k) + ".";
    f(pre + "weight", p.gat.heads[k].weight);
    f(pre + "attention", p.gat.heads[k].attention);
  }
  for (std::size_t i = 0; i < p.gcl.weights.size(); ++i)
    f("gcl." + to_string(p.gcl.kinds[i]) + ".weight", p.gcl.weights[i]);
  f("gru.w_z", p.gru.w_z);
  f("gru.w_r", p.gru.w_r);
  f("gru.w_n", p.gru.w_n);
  f("gru.u_z", p.gru.u_z);
  f("gru.u_r", p.gru.u_r);
  f("gru.u_n", p.gru.u_n);
  f("gru.b_z", p.gru.b_z);
  f("gru.b_r", p.gru.b_r);
  f("gru.b_n", p.gru.b_n);
  for (std::size_t l = 0; l < p.attn.heads.size(); ++l) {
    const std::string pre = "attn.head" + std::to_string(l) + ".";
    f(pre + "w_q", p.attn.heads[l].w_q);
    f(pre + "w_k", p.attn.heads[l].w_k);
    f(pre + "w_v", p.attn.heads[l].w_v);
  }
  f("dec.w_h", p.dec.w_h);
  f("dec.b_h", p.dec.b_h);
  f("dec.w_o", p.dec.w_o);
  f("dec.b_o", p.dec.b_o);
}

// Structure-preserving map from one element type to another.
template <typename U, typename T, typename F>
ParamsT<U> map_params(const ParamsT<T>& p, F&& f) {
  ParamsT<U> out;
  for (const auto& h : p.gat.heads) out.gat.heads.push_back({f(h.weight), f(h.attention)});
  out.gcl.kinds = p.gcl.kinds;
  for (const auto& w : p.gcl.weights) out.gcl.weights.push_back(f(w));
  const auto& g = p.gru;
  out.gru = {f(g.w_z), f(g.w_r), f(g.w_n), f(g.u_z), f(g.u_r), f(g.u_n), f(g.b_z), f(g.b_r), f(g.b_n)};
  for (const auto& h : p.attn.heads) out.attn.heads.push_back({f(h.w_q), f(h.w_k), f(h.w_v)});
  out.dec = {f(p.dec.w_h), f(p.dec.b_h), f(p.dec.w_o), f(p.dec.b_o)};
  return out;
}

template <typename S>
using ModelParams = ParamsT<Matrix<S>>;

template <typename S>
using BoundParams = ParamsT<ad::Var<S>>;

// Glorot-uniform weights drawn from a generator seeded with `seed`; biases
// zero except the decoder output bias, which starts at cfg.output_bias.
template <typename S>
ModelParams<S> init_params(const ModelConfig& cfg, std::uint64_t seed);

template <typename S>
ModelParams<S> zero_params(const ModelConfig& cfg);

template <typename S>
BoundParams<S> bind(ad::Tape<S>& tape, const ModelParams<S>& p) {
  return map_params<ad::Var<S>>(p, [&tape](const Matrix<S>& m) { return tape.leaf_ref(m); });
}

template <typename S>
ModelParams<S> gradients(const ad::Tape<S>& tape, const BoundParams<S>& bound) {
  return map_params<Matrix<S>>(bound, [&tape](const ad::Var<S>& v) { return tape.grad(v); });
}

template <typename S>
std::size_t param_count(const ModelParams<S>& p) {
  std::size_t c = 0;
  for_each_param(p, [&c](const std::string&, const Matrix<S>& m) { c += static_cast<std::size_t>(m.size()); });
  return c;
}

template <typename S>
S squared_norm(const ModelParams<S>& p) {
  S total = 0;
  for_each_param(p, [&total](const std::string&, const Matrix<S>& m) { total += m.squaredNorm(); });
  return total;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p) {
  return map_params<Matrix<To>>(p, [](const Matrix<From>& m) -> Matrix<To> { return m.template cast<To>(); });
}

}  // namespace tsam
