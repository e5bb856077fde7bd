#include "tsam/model/model.hpp"

#include <cmath>
#include <random>

namespace tsam {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ParameterError(std::string(name) + " must be at least 1, got " + std::to_string(v));
  };
  positive(n, "n");
  positive(f_in, "f_in");
  positive(f_struct, "f_struct");
  positive(h_rnn, "h_rnn");
  positive(f_attn, "f_attn");
  positive(k_node, "k_node");
  positive(k_time, "k_time");
  positive(h_dec, "h_dec");
  positive(window, "window");
  if (n > kMaxNodes)
    throw ResourceError("n = " + std::to_string(n) + " exceeds the supported maximum of " +
                        std::to_string(kMaxNodes) + " nodes (decoder output layer is h_dec * n^2)");
  if (!(penalty_beta >= 1.0)) throw ParameterError("penalty_beta must be >= 1");
  if (!(l2 >= 0.0)) throw ParameterError("l2 must be >= 0");
  if (!(lr >= 0.0)) throw ParameterError("lr must be >= 0");
  if (!std::isfinite(output_bias)) throw ParameterError("output_bias must be finite");
  for (std::size_t i = 0; i < transforms.size(); ++i)
    for (std::size_t j = i + 1; j < transforms.size(); ++j)
      if (transforms[i] == transforms[j]) throw ParameterError("transform " + to_string(transforms[i]) + " listed twice");
}

namespace {

template <typename S>
Matrix<S> glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(dist(rng));
  return m;
}

using Shape = std::pair<Eigen::Index, Eigen::Index>;

// Lays out every tensor of the configured model; make_weight and make_bias
// produce the element for a given shape.
template <typename T, typename MakeWeight, typename MakeBias>
ParamsT<T> build(const ModelConfig& cfg, MakeWeight make_weight, MakeBias make_bias) {
  cfg.validate();
  const Eigen::Index flat = static_cast<Eigen::Index>(cfg.n) * cfg.f_struct;
  const Eigen::Index nn = static_cast<Eigen::Index>(cfg.n) * cfg.n;
  ParamsT<T> p;
  for (int k = 0; k < cfg.k_node; ++k)
    p.gat.heads.push_back({make_weight(cfg.f_struct, cfg.f_in), make_weight(1, 2 * cfg.f_struct)});
  p.gcl.kinds = cfg.transforms;
  for (std::size_t i = 0; i < cfg.transforms.size(); ++i) p.gcl.weights.push_back(make_weight(cfg.f_in, cfg.f_struct));
  p.gru.w_z = make_weight(cfg.h_rnn, flat);
  p.gru.w_r = make_weight(cfg.h_rnn, flat);
  p.gru.w_n = make_weight(cfg.h_rnn, flat);
  p.gru.u_z = make_weight(cfg.h_rnn, cfg.h_rnn);
  p.gru.u_r = make_weight(cfg.h_rnn, cfg.h_rnn);
  p.gru.u_n = make_weight(cfg.h_rnn, cfg.h_rnn);
  p.gru.b_z = make_bias(cfg.h_rnn);
  p.gru.b_r = make_bias(cfg.h_rnn);
  p.gru.b_n = make_bias(cfg.h_rnn);
  for (int l = 0; l < cfg.k_time; ++l)
    p.attn.heads.push_back({make_weight(cfg.h_rnn, cfg.f_attn), make_weight(cfg.h_rnn, cfg.f_attn),
                            make_weight(cfg.h_rnn, cfg.f_attn)});
  p.dec.w_h = make_weight(static_cast<Eigen::Index>(cfg.k_time) * cfg.f_attn, cfg.h_dec);
  p.dec.b_h = make_bias(cfg.h_dec);
  p.dec.w_o = make_weight(cfg.h_dec, nn);
  p.dec.b_o = make_bias(nn);
  return p;
}

template <typename S>
auto zero_bias() {
  return [](Eigen::Index width) -> Matrix<S> { return Matrix<S>::Zero(1, width); };
}

}  // namespace

template <typename S>
ModelParams<S> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = build<Matrix<S>>(
      cfg, [&rng](Eigen::Index r, Eigen::Index c) { return glorot<S>(r, c, rng); }, zero_bias<S>());
  p.dec.b_o.setConstant(static_cast<S>(cfg.output_bias));
  return p;
}

template <typename S>
ModelParams<S> zero_params(const ModelConfig& cfg) {
  return build<Matrix<S>>(
      cfg, [](Eigen::Index r, Eigen::Index c) -> Matrix<S> { return Matrix<S>::Zero(r, c); }, zero_bias<S>());
}

template <typename S>
void check_shapes(const ModelParams<S>& params, const ModelConfig& cfg, const Matrix<S>& x) {
  cfg.validate();
  if (x.rows() != cfg.n || x.cols() != cfg.f_in)
    throw DimensionError("node features " + shape_str(x) + " do not match n = " + std::to_string(cfg.n) +
                         ", f_in = " + std::to_string(cfg.f_in));
  const auto layout = build<Shape>(
      cfg, [](Eigen::Index r, Eigen::Index c) { return Shape{r, c}; },
      [](Eigen::Index w) { return Shape{1, w}; });
  std::vector<std::pair<std::string, Shape>> want;
  for_each_param(layout, [&want](const std::string& name, const Shape& s) { want.push_back({name, s}); });
  std::size_t i = 0;
  for_each_param(params, [&](const std::string& name, const Matrix<S>& m) {
    if (i >= want.size() || want[i].first != name)
      throw DimensionError("parameter '" + name + "' is not part of the configured model");
    if (want[i].second != std::make_pair(m.rows(), m.cols()))
      throw DimensionError("parameter '" + name + "' has shape " + shape_str(m) + ", expected [" +
                           std::to_string(want[i].second.first) + "x" + std::to_string(want[i].second.second) + "]");
    ++i;
  });
  if (i != want.size()) throw DimensionError("parameter set is missing tensors for the configured model");
}

template <typename S>
PreparedSnapshot<S> prepare_snapshot(const DirectedSnapshot& a, const Matrix<S>& x,
                                     const std::vector<TransformKind>& transforms) {
  if (x.rows() != a.n())
    throw DimensionError("features " + shape_str(x) + " vs snapshot with " + std::to_string(a.n()) + " nodes");
  PreparedSnapshot<S> out;
  out.support = incoming_support(a);
  for (auto kind : transforms) out.propagated.push_back(normalized_propagation<S>(transform(a, kind).values) * x);
  return out;
}

template <typename S>
ForwardTrace<S> forward(ad::Tape<S>& tape, const BoundParams<S>& params, const Matrix<S>& x,
                        std::span<const PreparedSnapshot<S>* const> window, const ModelConfig& cfg) {
  if (static_cast<int>(window.size()) != cfg.window)
    throw DimensionError("window has " + std::to_string(window.size()) + " snapshots, model expects " +
                         std::to_string(cfg.window));
  ForwardTrace<S> trace;
  auto xv = tape.constant_ref(x);
  auto h = tape.constant(Matrix<S>::Zero(1, cfg.h_rnn));
  for (const PreparedSnapshot<S>* snap : window) {
    auto gat = gat_forward(xv, snap->support, params.gat);
    std::vector<ad::Var<S>> gcl_outs;
    for (std::size_t i = 0; i < snap->propagated.size(); ++i)
      gcl_outs.push_back(gcl_forward(tape.constant_ref(snap->propagated[i]), params.gcl.weights.at(i)));
    auto y = fuse(gat.out, gcl_outs);
    h = gru_step(y, h, params.gru);
    trace.fused.push_back(y);
    trace.hidden.push_back(h);
    trace.node_attention.push_back(std::move(gat.attention));
  }
  auto attn = temporal_attention(ad::vstack(trace.hidden), params.attn);
  trace.z = attn.out;
  trace.time_attention = std::move(attn.weights);
  trace.scores = decode(ad::row(trace.z, trace.z.rows() - 1), params.dec, cfg.n);
  return trace;
}

template <typename S>
Matrix<S> forward(const WindowSample& sample, const ModelParams<S>& params, const ModelConfig& cfg,
                  const Matrix<S>& x) {
  check_shapes(params, cfg, x);
  if (sample.window() != cfg.window)
    throw DimensionError("sample window " + std::to_string(sample.window()) + " != configured window " +
                         std::to_string(cfg.window));
  std::vector<PreparedSnapshot<S>> prepared;
  for (const auto& snap : sample.inputs) {
    if (snap.n() != cfg.n)
      throw DimensionError("snapshot has " + std::to_string(snap.n()) + " nodes, model expects " +
                           std::to_string(cfg.n));
    prepared.push_back(prepare_snapshot(snap, x, cfg.transforms));
  }
  std::vector<const PreparedSnapshot<S>*> ptrs;
  for (const auto& p : prepared) ptrs.push_back(&p);
  ad::Tape<S> tape;
  auto bound = map_params<ad::Var<S>>(params, [&tape](const Matrix<S>& m) { return tape.constant_ref(m); });
  return forward(tape, bound, x, std::span<const PreparedSnapshot<S>* const>(ptrs), cfg).scores.value();
}

#define TSAM_INSTANTIATE_MODEL(S)                                                                          \
  template ModelParams<S> init_params<S>(const ModelConfig&, std::uint64_t);                                \
  template ModelParams<S> zero_params<S>(const ModelConfig&);                                               \
  template void check_shapes(const ModelParams<S>&, const ModelConfig&, const Matrix<S>&);                  \
  template PreparedSnapshot<S> prepare_snapshot(const DirectedSnapshot&, const Matrix<S>&,                  \
                                                const std::vector<TransformKind>&);                         \
  template ForwardTrace<S> forward(ad::Tape<S>&, const BoundParams<S>&, const Matrix<S>&,                   \
                                   std::span<const PreparedSnapshot<S>* const>, const ModelConfig&);        \
  template Matrix<S> forward(const WindowSample&, const ModelParams<S>&, const ModelConfig&, const Matrix<S>&);

TSAM_INSTANTIATE_MODEL(float)
TSAM_INSTANTIATE_MODEL(double)

}  // namespace tsam
