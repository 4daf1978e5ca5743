// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dtgfn/error.h"

namespace dtgfn {

void TrainConfig::Validate() const {
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 0");
  if (batch_forward < 0 || batch_replay < 0 || batch_forward + batch_replay < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one trajectory per batch");
  }
  if (buffer_capacity < 0) throw Error(ErrorCode::kInvalidArgument, "negative buffer capacity");
  if (!(lr_end_factor >= 0.0 && lr_end_factor <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lr_end_factor must lie in [0, 1]");
  }
  if (!(lr >= 0.0) || !(lr_log_z >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rates must be >= 0");
  }
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= epsilon_start)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 <= epsilon_end <= epsilon_start <= 1");
  }
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"steps", steps},
          {"lr", lr},
          {"lr_log_z", lr_log_z},
          {"lr_end_factor", lr_end_factor},
          {"warm_start_log_z", warm_start_log_z},
          {"batch_forward", batch_forward},
          {"batch_replay", batch_replay},
          {"buffer_capacity", buffer_capacity},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_epsilon", adam_epsilon},
          {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.lr = j.value("lr", c.lr);
  c.lr_log_z = j.value("lr_log_z", c.lr_log_z);
  c.lr_end_factor = j.value("lr_end_factor", c.lr_end_factor);
  c.warm_start_log_z = j.value("warm_start_log_z", c.warm_start_log_z);
  c.batch_forward = j.value("batch_forward", c.batch_forward);
  c.batch_replay = j.value("batch_replay", c.batch_replay);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
  c.epsilon_end = j.value("epsilon_end", c.epsilon_end);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
  return c;
}

double TbLoss(double log_z, double log_pf, double log_pb, double log_reward) {
  if (!std::isfinite(log_z) || !std::isfinite(log_pf) || !std::isfinite(log_pb) ||
      !std::isfinite(log_reward)) {
    throw Error(ErrorCode::kNonFinite, "trajectory balance inputs must be finite");
  }
  const double r = log_z + log_pf - log_pb - log_reward;
  return r * r;
}

double EpsilonAt(int step, const TrainConfig& cfg) {
  if (cfg.steps <= 0) return cfg.epsilon_start;
  const double frac = std::clamp(static_cast<double>(step) / cfg.steps, 0.0, 1.0);
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

void ReplayBuffer::Insert(const TreeState& tree, double log_reward) {
  if (capacity_ == 0 || members_.count(tree)) return;
  if (entries_.size() == capacity_ && log_reward <= entries_.back().log_reward) return;
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), log_reward,
                              [](double v, const Entry& e) { return v > e.log_reward; });
  entries_.insert(pos, Entry{tree, log_reward});
  members_.insert(tree);
  if (entries_.size() > capacity_) {
    members_.erase(entries_.back().tree);
    entries_.pop_back();
  }
}

std::optional<double> ReplayBuffer::min_log_reward() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.back().log_reward;
}

std::optional<double> ReplayBuffer::max_log_reward() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().log_reward;
}

Adam::Adam(const PolicyModel& model, const TrainConfig& cfg) : cfg_(cfg) {
  for (const Matrix* p : model.Parameters()) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void Adam::Step(PolicyModel& model, const PolicyModel& grads) {
  ++t_;
  auto params = model.Parameters();
  const auto g = grads.Parameters();
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
  const double progress =
      cfg_.steps > 0 ? std::min(1.0, static_cast<double>(t_ - 1) / cfg_.steps) : 0.0;
  const double scale = 1.0 + (cfg_.lr_end_factor - 1.0) * progress;
  for (std::size_t i = 0; i < params.size(); ++i) {
    // log_z is the last tensor and has its own step size.
    const double lr = scale * (i + 1 == params.size() ? cfg_.lr_log_z : cfg_.lr);
    m_[i] = b1 * m_[i] + (1.0 - b1) * *g[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * g[i]->cwiseProduct(*g[i]);
    if (lr == 0.0) continue;
    *params[i] -= (lr / c1) * m_[i].cwiseQuotient(((v_[i] / c2).cwiseSqrt().array() + cfg_.adam_epsilon).matrix());
  }
}

Trainer::Trainer(PolicyModel model, Dataset data, RewardParams reward, TrainConfig cfg)
    : model_(std::move(model)),
      data_(std::move(data)),
      reward_(std::move(reward)),
      cfg_(cfg),
      optimizer_(model_, cfg),
      buffer_(static_cast<std::size_t>(cfg.buffer_capacity)),
      rng_(cfg.seed) {
  cfg_.Validate();
  reward_.Validate();
  data_.Validate();
  if (static_cast<int>(reward_.alpha.size()) != data_.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "alpha length must equal class count");
  }
}

double Trainer::CachedLogReward(const TreeState& tree) {
  auto it = reward_cache_.find(tree);
  if (it != reward_cache_.end()) return it->second;
  const double r = LogReward(tree, data_, reward_);
  reward_cache_.emplace(tree, r);
  return r;
}

StepMetrics Trainer::TrainStep(int step) {
  StepMetrics metrics;
  metrics.step = step;
  metrics.epsilon = EpsilonAt(step, cfg_);

  std::vector<Trajectory> batch =
      SampleTrajectories(model_, data_, static_cast<std::size_t>(cfg_.batch_forward),
                         metrics.epsilon, rng_);
  const std::size_t fresh = batch.size();
  if (cfg_.batch_replay > 0 && buffer_.size() >= static_cast<std::size_t>(cfg_.batch_replay)) {
    for (int i = 0; i < cfg_.batch_replay; ++i) {
      const auto& entry = buffer_.entries()[rng_.UniformIndex(buffer_.size())];
      batch.push_back(SampleBackwardTrajectory(entry.tree, rng_));
    }
  }
  std::vector<double> log_rewards;
  log_rewards.reserve(batch.size());
  for (const auto& traj : batch) log_rewards.push_back(CachedLogReward(traj.terminal()));

  if (cfg_.warm_start_log_z && !log_z_started_) {
    const BatchObjective probe = TrajectoryBalance(model_, data_, batch, log_rewards, nullptr);
    std::vector<double> log_w(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      log_w[i] = log_rewards[i] + probe.log_pb[i] - probe.log_pf[i];
    }
    model_.set_log_z(LogSumExp(log_w) - std::log(static_cast<double>(batch.size())));
  }
  log_z_started_ = true;

  PolicyModel grads = model_.ZerosLike();
  const BatchObjective objective = TrajectoryBalance(model_, data_, batch, log_rewards, &grads);
  if (!std::isfinite(objective.loss)) {
    throw Error(ErrorCode::kNonFinite, "trajectory balance loss at step " + std::to_string(step));
  }
  optimizer_.Step(model_, grads);

  for (std::size_t i = 0; i < fresh; ++i) buffer_.Insert(batch[i].terminal(), log_rewards[i]);

  metrics.mean_loss = objective.loss;
  metrics.log_z = model_.log_z();
  metrics.buffer_min = buffer_.min_log_reward().value_or(0.0);
  metrics.buffer_max = buffer_.max_log_reward().value_or(0.0);
  metrics.trajectories = batch.size();
  return metrics;
}

std::vector<StepMetrics> Trainer::Train() {
  std::vector<StepMetrics> out;
  out.reserve(static_cast<std::size_t>(cfg_.steps));
  for (int step = 0; step < cfg_.steps; ++step) out.push_back(TrainStep(step));
  return out;
}

std::string MetricsCsv(const std::vector<StepMetrics>& metrics) {
  std::string out = "step,mean_loss,log_z,epsilon,buffer_min,buffer_max\n";
  char buf[256];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.step, m.mean_loss,
                  m.log_z, m.epsilon, m.buffer_min, m.buffer_max);
    out += buf;
  }
  return out;
}

}  // namespace dtgfn
