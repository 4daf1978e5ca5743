// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtgfn/dataset.h"
#include "dtgfn/policy.h"
#include "dtgfn/random.h"
#include "dtgfn/reward.h"
#include "dtgfn/tree.h"

namespace dtgfn {

// m independent on-policy (epsilon = 0) terminal trees; duplicates kept.
std::vector<TreeState> SampleTrees(const PolicyModel& model, const Dataset& data,
                                   std::size_t m, Rng& rng);

enum class LeafParamMode { kMean, kSample };

// One class-probability vector per frontier leaf (aligned with
// tree.Frontier()): Dirichlet(n_l + alpha) draws or posterior means.
std::vector<std::vector<double>> LeafPosteriorParams(const TreeState& tree, const Dataset& data,
                                                     std::span<const double> alpha,
                                                     LeafParamMode mode, Rng& rng);

// Softmax of log-posteriors via max-shifted log-sum-exp.
std::vector<double> NormalizedWeights(std::span<const double> log_posteriors);

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

// Bayesian model average over sampled trees.
class Ensemble {
 public:
  struct Member {
    TreeState tree;
    double log_posterior = 0.0;
    std::vector<std::vector<double>> leaf_params;
  };

  Ensemble() = default;
  Ensemble(std::vector<Member> members, std::vector<double> alpha);

  // log_posterior = log reward at temperature 1 on `data`; leaf parameters
  // from the same data.
  static Ensemble Build(std::span<const TreeState> trees, const Dataset& data,
                        const RewardParams& params, LeafParamMode mode, Rng& rng);

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int num_classes() const { return static_cast<int>(alpha_.size()); }
  const std::vector<Member>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& alpha() const { return alpha_; }

  // Throws kEmptyEnsemble.
  Prediction Predict(std::span<const double> x) const;
  // Mean total node count over members.
  double MeanModelSize() const;

  nlohmann::json ToJson() const;
  static Ensemble FromJson(const nlohmann::json& j);

 private:
  std::vector<Member> members_;
  std::vector<double> alpha_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> leaf_index_;  // per member: slot -> leaf position
};

// Per-row BMA probability mass on the normal class(es).
std::vector<double> OodScores(const Ensemble& ensemble, const Dataset& rows,
                              std::span<const int> normal_classes);

// Anomalous iff score < mean - 2 * std (population std over all rows).
// Throws kInvalidArgument with fewer than two rows.
std::vector<bool> OodClassify(std::span<const double> scores);

// F1 of the positive class.
double BinaryF1(std::span<const int> predicted, std::span<const int> truth, int positive);
// Unweighted mean of per-class F1 over classes present in truth or predictions.
double MacroF1(std::span<const int> predicted, std::span<const int> truth, int num_classes);

struct EvalReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  double model_size = 0.0;
  std::vector<EvalReport> per_seed;

  nlohmann::json ToJson() const;
};

// Accuracy, F1 (positive class 1 when binary, macro otherwise) and mean
// model size.
EvalReport Evaluate(const Ensemble& ensemble, const Dataset& test);

// Argmax log reward at temperature 1; ties go to fewer decision nodes, then
// the smaller canonical hash.
TreeState SelectMapTree(std::span<const TreeState> samples, const Dataset& data,
                        const RewardParams& params);

}  // namespace dtgfn
