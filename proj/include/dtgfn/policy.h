// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtgfn/mlp.h"
#include "dtgfn/tree.h"

namespace dtgfn {

struct PolicyConfig {
  int num_features = 1;
  int num_thresholds = 1;
  int max_depth = 1;
  int hidden_units = 256;
  int encoder_layers = 3;
  int head_hidden_layers = 1;
  int one_hot_cutoff = EncodingLayout::kDefaultOneHotCutoff;
  std::uint64_t init_seed = 0;

  nlohmann::json ToJson() const;
  static PolicyConfig FromJson(const nlohmann::json& j);
  // Stable digest of the architecture fields (not the seed).
  std::string Hash() const;
};

// Log-probabilities of the forward policy at one state. Masked splits hold
// -inf; split_log_probs is frontier x features x thresholds.
struct ActionDistribution {
  std::vector<int> frontier;
  int num_features = 0;
  int num_thresholds = 0;
  double terminate_log_prob = 0.0;
  std::vector<double> split_log_probs;

  // -inf for actions that are masked or not representable.
  double LogProb(const Action& action) const;
};

// Forward policy: an encoder maps each frontier leaf's root-to-leaf path to
// an embedding; a rule head scores the d x t splits of each leaf from its own
// embedding, and a termination head scores stopping from the mean leaf
// embedding. log_z is the learned log-partition estimate.
class PolicyModel {
 public:
  PolicyModel() = default;
  explicit PolicyModel(const PolicyConfig& config);

  const PolicyConfig& config() const { return config_; }
  const EncodingLayout& layout() const { return layout_; }

  const Mlp& encoder() const { return encoder_; }
  const Mlp& term_head() const { return term_head_; }
  const Mlp& rule_head() const { return rule_head_; }
  Mlp& encoder() { return encoder_; }
  Mlp& term_head() { return term_head_; }
  Mlp& rule_head() { return rule_head_; }

  double log_z() const { return log_z_(0, 0); }
  void set_log_z(double v) { log_z_(0, 0) = v; }

  // Same shapes, all zeros; used as a gradient accumulator.
  PolicyModel ZerosLike() const;
  // Encoder, term head, rule head tensors, then log_z (as a 1x1 matrix).
  std::vector<Matrix*> Parameters();
  std::vector<const Matrix*> Parameters() const;
  std::vector<std::string> ParameterNames() const;
  std::size_t NumParameters() const;

  // Distribution over Terminate and the unmasked splits of a non-terminal
  // state. With no legal split, Terminate gets probability 1.
  ActionDistribution Forward(const TreeState& state, const ActionMask& mask) const;

  nlohmann::json ToJson() const;
  static PolicyModel FromJson(const nlohmann::json& j);
  void Save(const std::string& path, const nlohmann::json& metadata = {}) const;
  static PolicyModel Load(const std::string& path, nlohmann::json* metadata = nullptr);

 private:
  PolicyConfig config_;
  EncodingLayout layout_;
  Mlp encoder_;
  Mlp term_head_;
  Mlp rule_head_;
  Matrix log_z_ = Matrix::Zero(1, 1);
};

// Numerically stable log(sum(exp(v))) over finite entries; -inf if none.
double LogSumExp(const std::vector<double>& v);

}  // namespace dtgfn
