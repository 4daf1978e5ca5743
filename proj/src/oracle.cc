// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/oracle.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "dtgfn/error.h"
#include "dtgfn/inference.h"

namespace dtgfn {

std::vector<TreeState> EnumerateTrees(const Dataset& data, int max_depth, int num_thresholds,
                                      std::size_t cap) {
  // Terminal trees are in bijection with reachable non-terminal states, so
  // it suffices to visit each non-terminal state once.
  std::vector<TreeState> out;
  std::unordered_set<TreeState, TreeHash> seen;
  std::vector<TreeState> stack{TreeState::Empty(max_depth, num_thresholds)};
  seen.insert(stack.back());
  while (!stack.empty()) {
    const TreeState state = std::move(stack.back());
    stack.pop_back();
    out.push_back(state.Apply(Action::Terminate()));
    if (out.size() > cap) {
      throw Error(ErrorCode::kCapExceeded, "more than " + std::to_string(cap) +
                                               " trees (found " + std::to_string(out.size()) +
                                               " so far)");
    }
    const ActionMask mask = LegalActionMask(state, data);
    std::vector<TreeState> children;
    for (std::size_t k = 0; k < mask.frontier.size(); ++k) {
      for (int f = 0; f < mask.num_features; ++f) {
        for (int t = 0; t < mask.num_thresholds; ++t) {
          if (!mask.split_ok(k, f, t)) continue;
          TreeState child = state.Apply(
              Action::Split(mask.frontier[k], DecisionRule::Make(f, t, num_thresholds)));
          if (seen.insert(child).second) children.push_back(std::move(child));
        }
      }
    }
    // Reverse so the first child in canonical order is expanded first.
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }
  return out;
}

int ExactPosterior::IndexOf(const TreeState& tree) const {
  auto it = index_.find(tree);
  return it == index_.end() ? -1 : it->second;
}

nlohmann::json ExactPosterior::ToJson(std::size_t top_k) const {
  std::vector<std::size_t> order(trees.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probabilities[a] > probabilities[b]; });
  nlohmann::json top = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top_k, order.size()); ++i) {
    const std::size_t k = order[i];
    top.push_back({{"tree", trees[k].ToJson()},
                   {"log_reward", log_rewards[k]},
                   {"probability", probabilities[k]}});
  }
  return {{"num_trees", trees.size()}, {"log_partition", log_partition}, {"top_k", top}};
}

ExactPosterior ComputeExactPosterior(std::vector<TreeState> trees, const Dataset& data,
                                     const RewardParams& params) {
  if (trees.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree list");
  ExactPosterior post;
  post.trees = std::move(trees);
  for (std::size_t i = 0; i < post.trees.size(); ++i) {
    if (!post.index_.emplace(post.trees[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate tree in the support");
    }
    post.log_rewards.push_back(LogReward(post.trees[i], data, params));
  }
  post.probabilities = NormalizedWeights(post.log_rewards);
  const double m = *std::max_element(post.log_rewards.begin(), post.log_rewards.end());
  double z = 0.0;
  for (double r : post.log_rewards) z += std::exp(r - m);
  post.log_partition = m + std::log(z);
  return post;
}

double EmpiricalTv(const ExactPosterior& exact, std::span<const TreeState> samples,
                   std::vector<double>* empirical) {
  std::vector<double> freq(exact.trees.size(), 0.0);
  for (const auto& tree : samples) {
    const int k = exact.IndexOf(tree);
    if (k < 0) throw Error(ErrorCode::kOutOfSupport, "sampled tree missing from the enumeration");
    freq[k] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    if (!samples.empty()) freq[k] /= static_cast<double>(samples.size());
    tv += std::abs(freq[k] - exact.probabilities[k]);
  }
  if (empirical) *empirical = std::move(freq);
  return 0.5 * tv;
}

Divergence SamplerDivergence(const PolicyModel& model, const Dataset& data,
                             const ExactPosterior& exact, std::size_t num_samples, Rng& rng) {
  Divergence d;
  const auto samples = SampleTrees(model, data, num_samples, rng);
  d.tv_distance = EmpiricalTv(exact, samples, &d.empirical);
  d.log_z_gap = std::abs(model.log_z() - exact.log_partition);
  return d;
}

}  // namespace dtgfn
