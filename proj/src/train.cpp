// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "saicl/train.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <unordered_map>

#include "saicl/error.hpp"
#include "saicl/ops.hpp"

namespace saicl {
namespace {

// Evaluation episodes come from a stream disjoint from training batches.
constexpr std::uint64_t kEvalStream = 0x5A1C1E7A1ull;

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamOptions o) : o_(o) {}

  void step(std::vector<NamedTensor>& params, double lr) override {
    ++t_;
    const double c1 = 1.0 - std::pow(o_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(o_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      auto& [m, v] = state_[name];
      if (m.empty()) m.assign(p.numel(), 0.0), v.assign(p.numel(), 0.0);
      const auto g = p.grad();
      auto w = p.mutable_data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = o_.beta1 * m[i] + (1.0 - o_.beta1) * g[i];
        v[i] = o_.beta2 * v[i] + (1.0 - o_.beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + o_.eps);
      }
    }
  }

 private:
  AdamOptions o_;
  std::size_t t_ = 0;
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> state_;
};

class Adafactor final : public Optimizer {
 public:
  explicit Adafactor(AdafactorOptions o) : o_(o) {}

  void step(std::vector<NamedTensor>& params, double lr) override {
    ++t_;
    const double c2 = 1.0 - std::pow(o_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      const auto g = p.grad();
      auto w = p.mutable_data();
      std::vector<double> u(w.size());
      auto& s = state_[name];
      if (p.shape().size() == 2) {
        const std::size_t R = p.shape()[0], C = p.shape()[1];
        if (s.row.empty()) s.row.assign(R, 0.0), s.col.assign(C, 0.0);
        std::vector<double> rs(R, 0.0), cs(C, 0.0);
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < C; ++c) {
            const double g2 = g[r * C + c] * g[r * C + c] + o_.eps;
            rs[r] += g2 / static_cast<double>(C);
            cs[c] += g2 / static_cast<double>(R);
          }
        double row_mean = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          s.row[r] = o_.beta2 * s.row[r] + (1.0 - o_.beta2) * rs[r];
          row_mean += s.row[r] / c2 / static_cast<double>(R);
        }
        for (std::size_t c = 0; c < C; ++c) s.col[c] = o_.beta2 * s.col[c] + (1.0 - o_.beta2) * cs[c];
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < C; ++c) {
            const double vhat = (s.row[r] / c2) * (s.col[c] / c2) / row_mean;
            u[r * C + c] = g[r * C + c] / std::sqrt(vhat);
          }
      } else {
        if (s.full.empty()) s.full.assign(w.size(), 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
          s.full[i] = o_.beta2 * s.full[i] + (1.0 - o_.beta2) * (g[i] * g[i] + o_.eps);
          u[i] = g[i] / std::sqrt(s.full[i] / c2);
        }
      }
      double rms = 0.0;
      for (double x : u) rms += x * x;
      rms = std::sqrt(rms / static_cast<double>(u.size()));
      const double shrink = std::max(1.0, rms / o_.clip_threshold);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * u[i] / shrink;
    }
  }

 private:
  struct State {
    std::vector<double> row, col, full;
  };
  AdafactorOptions o_;
  std::size_t t_ = 0;
  std::unordered_map<std::string, State> state_;
};

}  // namespace

std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "adafactor";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adafactor") return OptimizerKind::adafactor;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (steps < 1) throw Error("train config: steps must be >= 1");
  if (batch < 1) throw Error("train config: batch must be >= 1");
  if (train_k < 1) throw Error("train config: train_k must be >= 1");
  if (!(warmup >= 0.0 && warmup < 1.0)) throw Error("train config: warmup fraction must lie in [0, 1)");
  if (!(lr > 0.0)) throw Error("train config: lr must be positive");
  if (l_max < 1) throw Error("train config: l_max must be >= 1");
  for (std::size_t k : test_k)
    if (k < 1) throw Error("train config: every test_k must be >= 1");
}

double lr_schedule(std::size_t step, const TrainConfig& cfg) {
  if (step > cfg.steps) throw Error("lr_schedule: step beyond the end of training");
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(cfg.steps);
  const double warm = cfg.warmup * total;
  if (s < warm) return cfg.lr * s / warm;
  if (warm >= total) return cfg.lr;
  return cfg.lr * (total - s) / (total - warm);
}

std::unique_ptr<Optimizer> make_adam(AdamOptions options) { return std::make_unique<Adam>(options); }
std::unique_ptr<Optimizer> make_adafactor(AdafactorOptions options) {
  return std::make_unique<Adafactor>(options);
}
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? make_adam() : make_adafactor();
}

Tensor batch_loss(const Model& model, const std::vector<Episode>& episodes, const TrainConfig& cfg) {
  if (episodes.empty()) throw Error("batch_loss: empty batch");
  Tensor total;
  for (const Episode& e : episodes) {
    const PromptPack p = pack_prompt(e.demos, cfg.format == PromptFormat::direct ? e.test.x : e.test.y,
                                     e.demos.size(), cfg.l_max, cfg.format);
    const Tokens& target = cfg.format == PromptFormat::direct ? e.test.y : e.test.x;
    const Tensor lp = model.sequence_logprob(model.encode(p), target);
    total = total.defined() ? add(total, lp) : lp;
  }
  return scale(total, -1.0 / static_cast<double>(episodes.size()));
}

double clip_gradients(std::vector<NamedTensor>& params, double max_norm) {
  double ss = 0.0;
  for (const auto& [name, p] : params)
    for (double g : p.grad()) ss += g * g;
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm)
    for (auto& [name, p] : params)
      for (double& g : p.mutable_grad()) g *= max_norm / norm;
  return norm;
}

double train_step(Model& model, Optimizer& optimizer, const std::vector<Episode>& episodes,
                  double lr, const TrainConfig& cfg) {
  GradTape::current().clear();
  model.zero_grad();
  double value = 0.0;
  try {
    const Tensor loss = batch_loss(model, episodes, cfg);
    value = loss.item();
    if (!std::isfinite(value)) throw NumericError("training loss is not finite");
    backward(loss);
  } catch (...) {
    GradTape::current().clear();
    throw;
  }
  clip_gradients(model.parameters(), cfg.clip_norm);
  optimizer.step(model.parameters(), lr);
  return value;
}

std::vector<Episode> training_batch(const TaskFamily& family, const TrainConfig& cfg, std::size_t step) {
  std::vector<Episode> batch;
  for (std::size_t b = 0; b < cfg.batch; ++b)
    batch.push_back(sample_episode(family, cfg.train_k, episode_seed(cfg.seed, step * cfg.batch + b)));
  return batch;
}

TrainLog train(Model& model, const TaskFamily& family, const TrainConfig& cfg, std::ostream* csv,
               const std::function<void(std::size_t, double)>& progress) {
  cfg.validate();
  auto optimizer = make_optimizer(cfg.optimizer);
  Rng dropout_rng(cfg.seed ^ 0xD0D0ull);
  model.set_training(&dropout_rng);
  TrainLog log;
  if (csv) *csv << "step,loss,lr\n";
  try {
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      const double lr = lr_schedule(s + 1, cfg);
      const double loss = train_step(model, *optimizer, training_batch(family, cfg, s), lr, cfg);
      log.loss.push_back(loss);
      log.lr.push_back(lr);
      if (csv) *csv << s + 1 << ',' << loss << ',' << lr << '\n';
      if (progress) progress(s + 1, loss);
    }
  } catch (...) {
    model.set_training(nullptr);
    throw;
  }
  model.set_training(nullptr);
  return log;
}

EvalResult evaluate(const EpisodePredictor& predictor, const TaskFamily& family, std::size_t test_k,
                    std::size_t episodes, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty() || episodes == 0) throw Error("evaluate needs at least one seed and one episode");
  EvalResult r;
  r.episodes = episodes;
  for (std::uint64_t seed : seeds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < episodes; ++i) {
      const Episode e = sample_episode(family, test_k, episode_seed(seed ^ kEvalStream, i));
      const auto it = std::find(e.test.options.begin(), e.test.options.end(), e.test.y);
      if (it == e.test.options.end()) throw Error("evaluate needs episodes with candidate options");
      if (predictor(e) == static_cast<std::size_t>(it - e.test.options.begin())) ++correct;
    }
    r.per_seed.push_back(static_cast<double>(correct) / static_cast<double>(episodes));
  }
  for (double a : r.per_seed) r.mean += a / static_cast<double>(r.per_seed.size());
  if (r.per_seed.size() > 1) {
    double ss = 0.0;
    for (double a : r.per_seed) ss += (a - r.mean) * (a - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.per_seed.size() - 1));
  }
  return r;
}

EvalResult evaluate(const Model& model, const TaskFamily& family, std::size_t test_k,
                    std::size_t episodes, const std::vector<std::uint64_t>& seeds,
                    const FusionOptions& fusion) {
  return evaluate(
      [&](const Episode& e) {
        return fused_predict(model, e.demos, e.test.x, CandidateSet{e.test.options}, fusion.scheme,
                             fusion.groups, fusion.pack);
      },
      family, test_k, episodes, seeds);
}

}  // namespace saicl
