#include "tsam/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tsam {

template <typename S>
Matrix<S> penalty_matrix(const DirectedSnapshot& target, S beta) {
  if (!(beta >= S(1))) throw ParameterError("penalty beta must be >= 1");
  Matrix<S> b(target.n(), target.n());
  for (int i = 0; i < target.n(); ++i)
    for (int j = 0; j < target.n(); ++j) b(i, j) = target.has(i, j) ? beta : S(1);
  return b;
}

template <typename S>
S loss(const Matrix<S>& scores, const DirectedSnapshot& target, const LossConfig& cfg,
       const ModelParams<S>& params) {
  if (scores.rows() != target.n() || scores.cols() != target.n())
    throw DimensionError("loss: scores " + shape_str(scores) + " vs target with " + std::to_string(target.n()) +
                         " nodes");
  const Matrix<S> b = penalty_matrix(target, static_cast<S>(cfg.penalty_beta));
  S value = (scores - target.to_matrix<S>()).cwiseProduct(b).squaredNorm();
  if (cfg.l2_lambda > 0) value += static_cast<S>(cfg.l2_lambda / 2) * squared_norm(params);
  return value;
}

template <typename S>
ad::Var<S> loss(ad::Var<S> scores, const DirectedSnapshot& target, const LossConfig& cfg,
                const BoundParams<S>& params) {
  auto total = ad::weighted_sq_error(scores, target.to_matrix<S>(),
                                     penalty_matrix(target, static_cast<S>(cfg.penalty_beta)));
  if (cfg.l2_lambda > 0) {
    std::vector<ad::Var<S>> squares;
    for_each_param(params, [&squares](const std::string&, const ad::Var<S>& v) {
      squares.push_back(ad::sum_squares(v));
    });
    total = ad::add(total, ad::scale(ad::sum(squares), static_cast<S>(cfg.l2_lambda / 2)));
  }
  return total;
}

template <typename S>
Adam<S>::Adam(const ModelParams<S>& like, AdamConfig cfg)
    : cfg_(cfg),
      m_(map_params<Matrix<S>>(like, [](const Matrix<S>& p) -> Matrix<S> { return Matrix<S>::Zero(p.rows(), p.cols()); })),
      v_(m_) {
  if (!(cfg.lr >= 0)) throw ParameterError("learning rate must be >= 0");
}

template <typename S>
void Adam<S>::step(ModelParams<S>& params, const ModelParams<S>& grads) {
  ++t_;
  const S b1 = static_cast<S>(cfg_.beta1);
  const S b2 = static_cast<S>(cfg_.beta2);
  const S lr_t = static_cast<S>(cfg_.lr * std::sqrt(1 - std::pow(cfg_.beta2, static_cast<double>(t_))) /
                                (1 - std::pow(cfg_.beta1, static_cast<double>(t_))));
  const S eps_hat = static_cast<S>(cfg_.eps * std::sqrt(1 - std::pow(cfg_.beta2, static_cast<double>(t_))));

  std::vector<Matrix<S>*> p_list, m_list, v_list;
  std::vector<const Matrix<S>*> g_list;
  for_each_param(params, [&](const std::string&, Matrix<S>& m) { p_list.push_back(&m); });
  for_each_param(m_, [&](const std::string&, Matrix<S>& m) { m_list.push_back(&m); });
  for_each_param(v_, [&](const std::string&, Matrix<S>& m) { v_list.push_back(&m); });
  for_each_param(grads, [&](const std::string&, const Matrix<S>& m) { g_list.push_back(&m); });
  if (p_list.size() != g_list.size()) throw DimensionError("adam: gradient set does not match parameters");

  for (std::size_t i = 0; i < p_list.size(); ++i) {
    auto& p = *p_list[i];
    auto& m = *m_list[i];
    auto& v = *v_list[i];
    const auto& g = *g_list[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw DimensionError("adam: gradient " + shape_str(g) + " for parameter " + shape_str(p));
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
    if (lr_t == S(0)) continue;
    p.array() -= lr_t * m.array() / (v.array().sqrt() + eps_hat);
  }
}

template <typename S>
Trainer<S>::Trainer(ModelConfig cfg, ModelParams<S> params, Matrix<S> x, AdamConfig adam)
    : cfg_(std::move(cfg)), params_(std::move(params)), x_(std::move(x)), adam_(params_, adam) {
  check_shapes(params_, cfg_, x_);
}

template <typename S>
std::vector<const PreparedSnapshot<S>*> Trainer<S>::prepare(const WindowSample& sample) {
  if (sample.window() != cfg_.window)
    throw DimensionError("sample window " + std::to_string(sample.window()) + " != configured window " +
                         std::to_string(cfg_.window));
  std::vector<const PreparedSnapshot<S>*> out;
  for (const auto& snap : sample.inputs) {
    if (snap.n() != cfg_.n)
      throw DimensionError("snapshot has " + std::to_string(snap.n()) + " nodes, model expects " +
                           std::to_string(cfg_.n));
    auto it = cache_.find(snap.time_index());
    if (it == cache_.end() || !(it->second.first == snap)) {
      cache_.insert_or_assign(snap.time_index(), std::make_pair(snap, prepare_snapshot(snap, x_, cfg_.transforms)));
      it = cache_.find(snap.time_index());
    }
    out.push_back(&it->second.second);
  }
  return out;
}

template <typename S>
std::pair<S, ModelParams<S>> Trainer<S>::loss_and_gradient(const WindowSample& sample) {
  const auto window = prepare(sample);
  ad::Tape<S> tape;
  const auto bound = bind(tape, params_);
  auto trace = forward(tape, bound, x_, std::span<const PreparedSnapshot<S>* const>(window), cfg_);
  auto total = loss(trace.scores, sample.target, LossConfig::from(cfg_), bound);
  tape.backward(total);
  return {total.value()(0, 0), gradients(tape, bound)};
}

template <typename S>
S Trainer<S>::train_step(const WindowSample& sample, int epoch) {
  auto [value, grads] = loss_and_gradient(sample);
  if (!std::isfinite(static_cast<double>(value))) throw DivergenceError(epoch, "loss is not finite");
  bool finite = true;
  for_each_param(grads, [&finite](const std::string&, const Matrix<S>& g) { finite = finite && g.allFinite(); });
  if (!finite) throw DivergenceError(epoch, "gradient is not finite");
  adam_.step(params_, grads);
  return value;
}

template <typename S>
S Trainer<S>::sample_loss(const WindowSample& sample) {
  return loss(predict(sample), sample.target, LossConfig::from(cfg_), params_);
}

template <typename S>
Matrix<S> Trainer<S>::predict(const WindowSample& sample) {
  const auto window = prepare(sample);
  ad::Tape<S> tape;
  auto bound = map_params<ad::Var<S>>(params_, [&tape](const Matrix<S>& m) { return tape.constant_ref(m); });
  return forward(tape, bound, x_, std::span<const PreparedSnapshot<S>* const>(window), cfg_).scores.value();
}

template <typename S>
FitResult<S> fit_samples(const std::vector<WindowSample>& samples, const ModelConfig& cfg, TrainRun& run,
                         const Matrix<S>& x, const ModelParams<S>* warm) {
  if (samples.empty()) throw ProtocolError("no training samples");
  if (run.epochs < 0) throw ParameterError("epochs must be >= 0");
  AdamConfig adam;
  adam.lr = run.lr.value_or(cfg.lr);
  Trainer<S> trainer(cfg, warm ? *warm : init_params<S>(cfg, run.seed), x, adam);

  std::mt19937_64 shuffle_rng(run.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  run.history.clear();
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= run.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0;
    for (auto idx : order) total += static_cast<double>(trainer.train_step(samples[idx], epoch));
    const double mean = total / static_cast<double>(samples.size());
    run.history.push_back(mean);
    if (run.early_stop) {
      if (mean < best - run.early_stop->min_delta) {
        best = mean;
        stale = 0;
      } else if (++stale >= run.early_stop->patience) {
        break;
      }
    }
  }
  return {trainer.params(), run.history};
}

template <typename S>
FitResult<S> fit_timestep(const SnapshotSequence& seq, int t, const ModelConfig& cfg, TrainRun& run,
                          const Matrix<S>& x, const ModelParams<S>* warm) {
  const int len = static_cast<int>(seq.size());
  if (t < cfg.window || t + 1 >= len)
    throw ProtocolError("anchor " + std::to_string(t) + " needs window <= t < length - 1 (window " +
                        std::to_string(cfg.window) + ", length " + std::to_string(len) + ")");
  std::vector<WindowSample> samples;
  for (auto& s : make_windows(seq, cfg.window))
    if (s.anchor_t + 1 <= t) samples.push_back(std::move(s));
  return fit_samples(samples, cfg, run, x, warm);
}

#define TSAM_INSTANTIATE_TRAIN(S)                                                                               \
  template Matrix<S> penalty_matrix(const DirectedSnapshot&, S);                                                \
  template S loss(const Matrix<S>&, const DirectedSnapshot&, const LossConfig&, const ModelParams<S>&);          \
  template ad::Var<S> loss(ad::Var<S>, const DirectedSnapshot&, const LossConfig&, const BoundParams<S>&);       \
  template class Adam<S>;                                                                                        \
  template class Trainer<S>;                                                                                     \
  template FitResult<S> fit_samples(const std::vector<WindowSample>&, const ModelConfig&, TrainRun&,            \
                                    const Matrix<S>&, const ModelParams<S>*);                                    \
  template FitResult<S> fit_timestep(const SnapshotSequence&, int, const ModelConfig&, TrainRun&,               \
                                     const Matrix<S>&, const ModelParams<S>*);

TSAM_INSTANTIATE_TRAIN(float)
TSAM_INSTANTIATE_TRAIN(double)

}  // namespace tsam
