// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "dtgfn/dataset.h"
#include "dtgfn/policy.h"
#include "dtgfn/random.h"
#include "dtgfn/reward.h"
#include "dtgfn/trajectory.h"

namespace dtgfn {

struct TrainConfig {
  int steps = 100;
  double lr = 0.01;
  // Step size for the log-partition scalar.
  double lr_log_z = 0.1;
  // Both step sizes decay linearly to this fraction by the last step.
  double lr_end_factor = 1.0;
  // Before the first update, set log_z to the importance-sampling estimate
  // log mean exp(log R + log P_B - log P_F) over the first batch.
  bool warm_start_log_z = true;
  int batch_forward = 90;
  int batch_replay = 10;
  int buffer_capacity = 100;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

// (log_z + log_pf - log_pb - log_reward)^2. Throws kNonFinite on non-finite
// input.
double TbLoss(double log_z, double log_pf, double log_pb, double log_reward);

// Linear from epsilon_start at step 0 to epsilon_end at step cfg.steps.
double EpsilonAt(int step, const TrainConfig& cfg);

// Top-K terminal trees by log reward, without duplicates.
class ReplayBuffer {
 public:
  struct Entry {
    TreeState tree;
    double log_reward = 0.0;
  };

  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  // No-op for a tree already present; otherwise inserts and evicts the
  // lowest-reward entry when over capacity.
  void Insert(const TreeState& tree, double log_reward);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Sorted by log_reward, descending.
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<double> min_log_reward() const;
  std::optional<double> max_log_reward() const;

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
  std::unordered_set<TreeState, TreeHash> members_;
};

// Adaptive-moment optimizer over a PolicyModel's parameter list.
class Adam {
 public:
  Adam(const PolicyModel& model, const TrainConfig& cfg);
  void Step(PolicyModel& model, const PolicyModel& grads);

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

struct StepMetrics {
  int step = 0;
  double mean_loss = 0.0;
  double log_z = 0.0;
  double epsilon = 0.0;
  double buffer_min = 0.0;
  double buffer_max = 0.0;
  std::size_t trajectories = 0;
};

// Owns the mutable training state: model, optimizer moments, replay buffer,
// reward cache and the generator.
class Trainer {
 public:
  Trainer(PolicyModel model, Dataset data, RewardParams reward, TrainConfig cfg);

  // One optimization step at the given step index.
  StepMetrics TrainStep(int step);
  // cfg.steps iterations; returns the per-step metrics.
  std::vector<StepMetrics> Train();

  double CachedLogReward(const TreeState& tree);

  const PolicyModel& model() const { return model_; }
  PolicyModel& model() { return model_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Dataset& data() const { return data_; }
  const RewardParams& reward_params() const { return reward_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  PolicyModel model_;
  Dataset data_;
  RewardParams reward_;
  TrainConfig cfg_;
  Adam optimizer_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::unordered_map<TreeState, double, TreeHash> reward_cache_;
  bool log_z_started_ = false;
};

// Writes step, mean_loss, log_z, epsilon, buffer_min, buffer_max.
std::string MetricsCsv(const std::vector<StepMetrics>& metrics);

}  // namespace dtgfn
