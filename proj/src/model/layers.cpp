#include "tsam/model/layers.hpp"

#include <cmath>

namespace tsam {

ad::Mask incoming_support(const DirectedSnapshot& a) {
  const int n = a.n();
  ad::Mask m = ad::Mask::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (a.has(j, i)) {
        m(i, j) = true;
        any = true;
      }
    }
    if (!any) m(i, i) = true;
  }
  return m;
}

ad::Mask causal_support(int length) {
  ad::Mask m = ad::Mask::Constant(length, length, false);
  for (int i = 0; i < length; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = true;
  return m;
}

template <typename S>
GatOutput<S> gat_forward(ad::Var<S> x, const ad::Mask& support, const GatParams<ad::Var<S>>& p) {
  if (p.heads.empty()) throw ParameterError("gat_forward: no attention heads");
  GatOutput<S> res;
  std::vector<ad::Var<S>> heads;
  for (const auto& head : p.heads) {
    const auto f = head.weight.rows();
    if (head.attention.cols() != 2 * f)
      throw DimensionError("gat_forward: attention vector " + shape_str(head.attention.value()) +
                           " does not match weight " + shape_str(head.weight.value()));
    auto wx = ad::matmul_bt(x, head.weight);  // n x f
    auto self_part = ad::matmul_bt(wx, ad::middle_cols(head.attention, 0, f));
    auto nbr_part = ad::transpose(ad::matmul_bt(wx, ad::middle_cols(head.attention, f, f)));
    auto logits = ad::leaky_relu(ad::add_outer(self_part, nbr_part), S(kLeakySlope));
    auto alpha = ad::masked_softmax_rows(logits, support);
    res.attention.push_back(alpha.value());
    heads.push_back(ad::matmul(alpha, wx));
  }
  auto mean = ad::scale(ad::sum(heads), S(1) / static_cast<S>(heads.size()));
  res.out = ad::elu(mean);
  return res;
}

template <typename S>
Matrix<S> normalized_propagation(const CountMatrix& c) {
  Matrix<S> hat = c.cast<S>();
  hat.diagonal().array() += S(1);
  Vector<S> inv_sqrt = hat.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * hat * inv_sqrt.asDiagonal();
}

template <typename S>
ad::Var<S> gcl_forward(ad::Var<S> propagated, ad::Var<S> weight) {
  return ad::elu(ad::matmul(propagated, weight));
}

template <typename S>
ad::Var<S> fuse(ad::Var<S> gat_out, const std::vector<ad::Var<S>>& gcl_outs) {
  std::vector<ad::Var<S>> parts{gat_out};
  parts.insert(parts.end(), gcl_outs.begin(), gcl_outs.end());
  auto normed = ad::layer_norm_rows(ad::sum(parts), S(kLayerNormEps));
  return ad::reshape(normed, 1, normed.value().size());
}

template <typename S>
ad::Var<S> gru_step(ad::Var<S> y, ad::Var<S> h_prev, const GruParams<ad::Var<S>>& p) {
  auto gate = [&](ad::Var<S> w, ad::Var<S> u, ad::Var<S> b) {
    return ad::sigmoid(ad::add_row(ad::add(ad::matmul_bt(y, w), ad::matmul_bt(h_prev, u)), b));
  };
  auto z = gate(p.w_z, p.u_z, p.b_z);
  auto r = gate(p.w_r, p.u_r, p.b_r);
  auto candidate = ad::tanh(
      ad::add_row(ad::add(ad::matmul_bt(y, p.w_n), ad::hadamard(r, ad::matmul_bt(h_prev, p.u_n))), p.b_n));
  // (1 - z) * h_prev + z * candidate
  return ad::add(h_prev, ad::hadamard(z, ad::sub(candidate, h_prev)));
}

template <typename S>
TemporalAttnOutput<S> temporal_attention(ad::Var<S> h_seq, const TemporalAttnParams<ad::Var<S>>& p) {
  if (p.heads.empty()) throw ParameterError("temporal_attention: no attention heads");
  TemporalAttnOutput<S> res;
  const auto support = causal_support(static_cast<int>(h_seq.rows()));
  std::vector<ad::Var<S>> heads;
  for (const auto& head : p.heads) {
    auto q = ad::matmul(h_seq, head.w_q);
    auto k = ad::matmul(h_seq, head.w_k);
    auto v = ad::matmul(h_seq, head.w_v);
    const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(head.w_q.cols()));
    auto beta = ad::masked_softmax_rows(ad::scale(ad::matmul_bt(q, k), inv_sqrt), support);
    res.weights.push_back(beta.value());
    heads.push_back(ad::matmul(beta, v));
  }
  res.out = ad::hstack(heads);
  return res;
}

template <typename S>
ad::Var<S> decode(ad::Var<S> z, const DecoderParams<ad::Var<S>>& p, int n) {
  auto hidden = ad::relu(ad::add_row(ad::matmul(z, p.w_h), p.b_h));
  auto out = ad::relu(ad::add_row(ad::matmul(hidden, p.w_o), p.b_o));
  return ad::reshape(out, n, n);
}

namespace {

template <typename S>
auto constants(ad::Tape<S>& tape) {
  return [&tape](const Matrix<S>& m) { return tape.constant_ref(m); };
}

}  // namespace

template <typename S>
Matrix<S> gat_forward(const Matrix<S>& x, const DirectedSnapshot& a, const GatParams<Matrix<S>>& p) {
  ad::Tape<S> tape;
  auto c = constants(tape);
  GatParams<ad::Var<S>> bound;
  for (const auto& h : p.heads) bound.heads.push_back({c(h.weight), c(h.attention)});
  return gat_forward(c(x), incoming_support(a), bound).out.value();
}

template <typename S>
Matrix<S> gcl_forward(const Matrix<S>& x, const TransformedMatrix& cm, const Matrix<S>& weight) {
  if (cm.values.rows() != x.rows())
    throw DimensionError("gcl_forward: transform " + shape_str(cm.values) + " vs features " + shape_str(x));
  ad::Tape<S> tape;
  Matrix<S> propagated = normalized_propagation<S>(cm.values) * x;
  return gcl_forward(tape.constant_ref(propagated), tape.constant_ref(weight)).value();
}

template <typename S>
Matrix<S> fuse(const Matrix<S>& gat_out, const std::vector<Matrix<S>>& gcl_outs) {
  ad::Tape<S> tape;
  std::vector<ad::Var<S>> parts;
  for (const auto& m : gcl_outs) parts.push_back(tape.constant_ref(m));
  return fuse(tape.constant_ref(gat_out), parts).value();
}

template <typename S>
Matrix<S> gru_step(const Matrix<S>& y, const Matrix<S>& h_prev, const GruParams<Matrix<S>>& p) {
  ad::Tape<S> tape;
  auto c = constants(tape);
  GruParams<ad::Var<S>> b{c(p.w_z), c(p.w_r), c(p.w_n), c(p.u_z), c(p.u_r), c(p.u_n), c(p.b_z), c(p.b_r), c(p.b_n)};
  return gru_step(c(y), c(h_prev), b).value();
}

template <typename S>
Matrix<S> temporal_attention(const Matrix<S>& h_seq, const TemporalAttnParams<Matrix<S>>& p) {
  ad::Tape<S> tape;
  auto c = constants(tape);
  TemporalAttnParams<ad::Var<S>> b;
  for (const auto& h : p.heads) b.heads.push_back({c(h.w_q), c(h.w_k), c(h.w_v)});
  return temporal_attention(c(h_seq), b).out.value();
}

template <typename S>
Matrix<S> decode(const Matrix<S>& z, const DecoderParams<Matrix<S>>& p, int n) {
  ad::Tape<S> tape;
  auto c = constants(tape);
  return decode(c(z), DecoderParams<ad::Var<S>>{c(p.w_h), c(p.b_h), c(p.w_o), c(p.b_o)}, n).value();
}

#define TSAM_INSTANTIATE_LAYERS(S)                                                                              \
  template GatOutput<S> gat_forward(ad::Var<S>, const ad::Mask&, const GatParams<ad::Var<S>>&);                 \
  template Matrix<S> normalized_propagation<S>(const CountMatrix&);                                              \
  template ad::Var<S> gcl_forward(ad::Var<S>, ad::Var<S>);                                                       \
  template ad::Var<S> fuse(ad::Var<S>, const std::vector<ad::Var<S>>&);                                          \
  template ad::Var<S> gru_step(ad::Var<S>, ad::Var<S>, const GruParams<ad::Var<S>>&);                            \
  template TemporalAttnOutput<S> temporal_attention(ad::Var<S>, const TemporalAttnParams<ad::Var<S>>&);          \
  template ad::Var<S> decode(ad::Var<S>, const DecoderParams<ad::Var<S>>&, int);                                 \
  template Matrix<S> gat_forward(const Matrix<S>&, const DirectedSnapshot&, const GatParams<Matrix<S>>&);        \
  template Matrix<S> gcl_forward(const Matrix<S>&, const TransformedMatrix&, const Matrix<S>&);                   \
  template Matrix<S> fuse(const Matrix<S>&, const std::vector<Matrix<S>>&);                                      \
  template Matrix<S> gru_step(const Matrix<S>&, const Matrix<S>&, const GruParams<Matrix<S>>&);                  \
  template Matrix<S> temporal_attention(const Matrix<S>&, const TemporalAttnParams<Matrix<S>>&);                 \
  template Matrix<S> decode(const Matrix<S>&, const DecoderParams<Matrix<S>>&, int);

TSAM_INSTANTIATE_LAYERS(float)
TSAM_INSTANTIATE_LAYERS(double)

}  // namespace tsam
