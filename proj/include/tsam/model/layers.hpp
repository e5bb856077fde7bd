#pragma once

// Encoder and decoder layers. Each layer has a tape form, used for training,
// and a value form that evaluates it once without recording gradients.

#include <vector>

#include "tsam/graph.hpp"
#include "tsam/model/params.hpp"
#include "tsam/motif.hpp"

namespace tsam {

// support(i, j) is true when j is an incoming neighbour of i (link j -> i).
// A node without incoming neighbours attends to itself only.
ad::Mask incoming_support(const DirectedSnapshot& a);

// Lower-triangular support: position i may attend to positions j <= i.
ad::Mask causal_support(int length);

template <typename S>
struct GatOutput {
  ad::Var<S> out;                     // n x f_struct
  std::vector<Matrix<S>> attention;   // per head, n x n, rows over incoming neighbours
};

// Masked multi-head graph attention. Head outputs are averaged, then ELU.
template <typename S>
GatOutput<S> gat_forward(ad::Var<S> x, const ad::Mask& support, const GatParams<ad::Var<S>>& p);

// D^-1/2 (C + I) D^-1/2 with D the row sums of C + I.
template <typename S>
Matrix<S> normalized_propagation(const CountMatrix& c);

// ELU(propagated * weight), where propagated = normalized_propagation(C) * X.
template <typename S>
ad::Var<S> gcl_forward(ad::Var<S> propagated, ad::Var<S> weight);

// Sum, per-row layer norm, then row-major flatten to 1 x (n * f_struct).
template <typename S>
ad::Var<S> fuse(ad::Var<S> gat_out, const std::vector<ad::Var<S>>& gcl_outs);

template <typename S>
ad::Var<S> gru_step(ad::Var<S> y, ad::Var<S> h_prev, const GruParams<ad::Var<S>>& p);

template <typename S>
struct TemporalAttnOutput {
  ad::Var<S> out;                // T x (k_time * f_attn)
  std::vector<Matrix<S>> weights;  // per head, T x T, causal
};

template <typename S>
TemporalAttnOutput<S> temporal_attention(ad::Var<S> h_seq, const TemporalAttnParams<ad::Var<S>>& p);

// Two ReLU layers, output reshaped row-major to n x n.
template <typename S>
ad::Var<S> decode(ad::Var<S> z, const DecoderParams<ad::Var<S>>& p, int n);

// Value forms.
template <typename S>
Matrix<S> gat_forward(const Matrix<S>& x, const DirectedSnapshot& a, const GatParams<Matrix<S>>& p);
template <typename S>
Matrix<S> gcl_forward(const Matrix<S>& x, const TransformedMatrix& c, const Matrix<S>& weight);
template <typename S>
Matrix<S> fuse(const Matrix<S>& gat_out, const std::vector<Matrix<S>>& gcl_outs);
template <typename S>
Matrix<S> gru_step(const Matrix<S>& y, const Matrix<S>& h_prev, const GruParams<Matrix<S>>& p);
template <typename S>
Matrix<S> temporal_attention(const Matrix<S>& h_seq, const TemporalAttnParams<Matrix<S>>& p);
template <typename S>
Matrix<S> decode(const Matrix<S>& z, const DecoderParams<Matrix<S>>& p, int n);

}  // namespace tsam
