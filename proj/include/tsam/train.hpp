#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tsam/model/model.hpp"

namespace tsam {

struct LossConfig {
  double penalty_beta = 5.0;
  double l2_lambda = 0.0;

  static LossConfig from(const ModelConfig& cfg) { return {cfg.penalty_beta, cfg.l2}; }
};

struct EarlyStop {
  int patience = 20;
  double min_delta = 1e-5;
};

struct TrainRun {
  int epochs = 200;
  std::uint64_t seed = 0;
  std::optional<double> lr;  // overrides ModelConfig::lr when set
  std::optional<EarlyStop> early_stop = EarlyStop{};
  std::vector<double> history;  // mean training loss per epoch, filled by fit
};

// beta where the target has a link, 1 elsewhere.
template <typename S>
Matrix<S> penalty_matrix(const DirectedSnapshot& target, S beta);

// ||(S - A) * B||_F^2 + (lambda / 2) * ||theta||^2
template <typename S>
S loss(const Matrix<S>& scores, const DirectedSnapshot& target, const LossConfig& cfg,
       const ModelParams<S>& params);

template <typename S>
ad::Var<S> loss(ad::Var<S> scores, const DirectedSnapshot& target, const LossConfig& cfg,
                const BoundParams<S>& params);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
class Adam {
 public:
  Adam(const ModelParams<S>& like, AdamConfig cfg);

  void step(ModelParams<S>& params, const ModelParams<S>& grads);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  ModelParams<S> m_;
  ModelParams<S> v_;
  long t_ = 0;
};

// Owns the parameters and optimizer state of one model. Not thread safe.
template <typename S>
class Trainer {
 public:
  Trainer(ModelConfig cfg, ModelParams<S> params, Matrix<S> x, AdamConfig adam);

  // One Adam update on the sample. Returns the loss before the update.
  // Throws DivergenceError carrying `epoch` on a non-finite loss or gradient.
  S train_step(const WindowSample& sample, int epoch = 0);

  S sample_loss(const WindowSample& sample);
  Matrix<S> predict(const WindowSample& sample);
  // Loss and gradient of the loss for every parameter.
  std::pair<S, ModelParams<S>> loss_and_gradient(const WindowSample& sample);

  const ModelParams<S>& params() const { return params_; }
  ModelParams<S>& params() { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const Matrix<S>& features() const { return x_; }

 private:
  std::vector<const PreparedSnapshot<S>*> prepare(const WindowSample& sample);

  ModelConfig cfg_;
  ModelParams<S> params_;
  Matrix<S> x_;
  Adam<S> adam_;
  std::map<int, std::pair<DirectedSnapshot, PreparedSnapshot<S>>> cache_;
};

template <typename S>
struct FitResult {
  ModelParams<S> params;
  std::vector<double> history;
};

// Trains on the samples for run.epochs epochs, visiting them in an order
// shuffled each epoch from run.seed. Parameters start from `warm` when
// given, otherwise from init_params(cfg, run.seed).
template <typename S>
FitResult<S> fit_samples(const std::vector<WindowSample>& samples, const ModelConfig& cfg, TrainRun& run,
                         const Matrix<S>& x, const ModelParams<S>* warm = nullptr);

// Fresh model trained on every window whose target index is <= t.
template <typename S>
FitResult<S> fit_timestep(const SnapshotSequence& seq, int t, const ModelConfig& cfg, TrainRun& run,
                          const Matrix<S>& x, const ModelParams<S>* warm = nullptr);

template <typename S>
FitResult<S> fit_timestep(const SnapshotSequence& seq, int t, const ModelConfig& cfg, TrainRun& run) {
  return fit_timestep(seq, t, cfg, run, default_features<S>(cfg.n));
}

}  // namespace tsam
