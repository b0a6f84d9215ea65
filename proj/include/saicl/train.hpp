// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include "saicl/model.hpp"
#include "saicl/prompt.hpp"
#include "saicl/tasks.hpp"

namespace saicl {

enum class OptimizerKind { adam, adafactor };

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t train_k = 8;
  std::vector<std::size_t> test_k{8};
  std::size_t steps = 3000;
  std::size_t batch = 8;
  double lr = 1e-3;
  double warmup = 0.1;  // fraction of steps
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables
  std::size_t l_max = 256;
  PromptFormat format = PromptFormat::direct;

  void validate() const;
};

// Linear warmup from 0 to cfg.lr over warmup * steps, then linear decay to 0
// at cfg.steps.
double lr_schedule(std::size_t step, const TrainConfig& cfg);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Applies one update from the gradients currently stored on the parameters.
  virtual void step(std::vector<NamedTensor>& params, double lr) = 0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdafactorOptions {
  double beta2 = 0.999;
  double eps = 1e-30;
  double clip_threshold = 1.0;
};

std::unique_ptr<Optimizer> make_adam(AdamOptions options = {});
// Factored second moments for matrices, no first moment, update clipping.
std::unique_ptr<Optimizer> make_adafactor(AdafactorOptions options = {});
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind);

// Mean over episodes of -log p(y_test | packed prompt). Recorded on the tape.
Tensor batch_loss(const Model& model, const std::vector<Episode>& episodes, const TrainConfig& cfg);

// Returns the loss before the update. Throws NumericError if it is not finite.
double train_step(Model& model, Optimizer& optimizer, const std::vector<Episode>& episodes,
                  double lr, const TrainConfig& cfg);

// Scales gradients so their global norm is at most max_norm; returns the norm
// before scaling.
double clip_gradients(std::vector<NamedTensor>& params, double max_norm);

// Episodes for step `step` of a run.
std::vector<Episode> training_batch(const TaskFamily& family, const TrainConfig& cfg, std::size_t step);

struct TrainLog {
  std::vector<double> loss;
  std::vector<double> lr;
};

// Full run. `csv`, when given, receives "step,loss,lr" rows.
TrainLog train(Model& model, const TaskFamily& family, const TrainConfig& cfg,
               std::ostream* csv = nullptr,
               const std::function<void(std::size_t, double)>& progress = {});

struct EvalResult {
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seeds
  std::size_t episodes = 0;  // per seed
};

inline const std::vector<std::uint64_t> kEvalSeeds{0, 1, 2, 3, 4};

using EpisodePredictor = std::function<std::size_t(const Episode&)>;

EvalResult evaluate(const EpisodePredictor& predictor, const TaskFamily& family, std::size_t test_k,
                    std::size_t episodes, const std::vector<std::uint64_t>& seeds = kEvalSeeds);

struct FusionOptions {
  FusionScheme scheme = FusionScheme::single;
  std::size_t groups = 1;
  PackOptions pack;
};

EvalResult evaluate(const Model& model, const TaskFamily& family, std::size_t test_k,
                    std::size_t episodes, const std::vector<std::uint64_t>& seeds = kEvalSeeds,
                    const FusionOptions& fusion = {});

}  // namespace saicl
