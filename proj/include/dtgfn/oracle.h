// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dtgfn/dataset.h"
#include "dtgfn/policy.h"
#include "dtgfn/random.h"
#include "dtgfn/reward.h"
#include "dtgfn/tree.h"

namespace dtgfn {

constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

// Every terminal tree reachable under the data masks, each exactly once, in
// depth-first discovery order (Terminate first, then splits in canonical
// order). Throws kCapExceeded once more than `cap` trees are found.
std::vector<TreeState> EnumerateTrees(const Dataset& data, int max_depth, int num_thresholds,
                                      std::size_t cap = kDefaultEnumerationCap);

struct ExactPosterior {
  std::vector<TreeState> trees;
  std::vector<double> log_rewards;
  double log_partition = 0.0;
  std::vector<double> probabilities;

  // -1 when the tree is outside the support.
  int IndexOf(const TreeState& tree) const;
  nlohmann::json ToJson(std::size_t top_k = 10) const;

 private:
  friend ExactPosterior ComputeExactPosterior(std::vector<TreeState>, const Dataset&,
                                              const RewardParams&);
  std::unordered_map<TreeState, int, TreeHash> index_;
};

ExactPosterior ComputeExactPosterior(std::vector<TreeState> trees, const Dataset& data,
                                     const RewardParams& params);

struct Divergence {
  double tv_distance = 0.0;
  double log_z_gap = 0.0;
  std::vector<double> empirical;  // aligned with exact.trees
};

// Total variation between the empirical distribution of `samples` and the
// exact posterior. Throws kOutOfSupport for a sample not in the support.
double EmpiricalTv(const ExactPosterior& exact, std::span<const TreeState> samples,
                   std::vector<double>* empirical = nullptr);

// Draws num_samples on-policy trees and compares them with the exact
// posterior; log_z_gap = |model.log_z - log_partition|.
Divergence SamplerDivergence(const PolicyModel& model, const Dataset& data,
                             const ExactPosterior& exact, std::size_t num_samples, Rng& rng);

}  // namespace dtgfn
