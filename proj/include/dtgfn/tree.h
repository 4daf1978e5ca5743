// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtgfn/dataset.h"

namespace dtgfn {

// Threshold k of a grid with t interior points: (k + 1) / (t + 1).
inline double ThresholdValue(int threshold_index, int num_thresholds) {
  return (threshold_index + 1.0) / (num_thresholds + 1.0);
}

// x[feature] <= threshold_value goes left.
struct DecisionRule {
  int feature = 0;
  int threshold_index = 0;
  double threshold_value = 0.0;

  static DecisionRule Make(int feature, int threshold_index, int num_thresholds) {
    return {feature, threshold_index, ThresholdValue(threshold_index, num_thresholds)};
  }
  bool GoesLeft(std::span<const double> x) const { return x[feature] <= threshold_value; }
  bool operator==(const DecisionRule& o) const {
    return feature == o.feature && threshold_index == o.threshold_index;
  }
};

enum class SlotKind : std::uint8_t { kUnspecified, kDecision, kLeaf };

struct Slot {
  SlotKind kind = SlotKind::kUnspecified;
  DecisionRule rule;
};

struct Action {
  enum class Kind : std::uint8_t { kSplit, kTerminate };
  Kind kind = Kind::kTerminate;
  int slot = 0;
  DecisionRule rule;

  static Action Split(int slot, DecisionRule rule) { return {Kind::kSplit, slot, rule}; }
  static Action Terminate() { return {}; }
  bool is_terminate() const { return kind == Kind::kTerminate; }
  bool operator==(const Action& o) const {
    return kind == o.kind && (is_terminate() || (slot == o.slot && rule == o.rule));
  }
};

// One edge on a root-to-node path.
struct PathStep {
  DecisionRule rule;
  bool right = false;
};

// Breadth-first array of 2^(max_depth+1) - 1 slots; children of slot i are
// 2i+1 and 2i+2. Immutable: transitions return new states.
class TreeState {
 public:
  // Throws kInvalidArgument when max_depth < 1 or num_thresholds < 1.
  static TreeState Empty(int max_depth, int num_thresholds);

  int max_depth() const { return max_depth_; }
  int num_thresholds() const { return num_thresholds_; }
  bool terminal() const { return terminal_; }
  std::size_t num_slots() const { return slots_.size(); }
  const Slot& slot(std::size_t i) const { return slots_[i]; }
  std::span<const Slot> slots() const { return slots_; }

  static int DepthOf(std::size_t slot);

  // Nodes that are (or will become at termination) leaves: children of a
  // decision slot that are not decisions themselves, or the root when the
  // tree has no decisions. Ascending slot order.
  std::vector<int> Frontier() const;
  bool IsFrontier(int slot) const;

  int NumDecisionNodes() const;
  // Decision nodes plus leaves.
  int NumNodes() const;

  // Decision slots whose children are both non-decisions.
  std::vector<int> RemovableNodes() const;

  std::vector<PathStep> PathTo(int slot) const;

  // Structural transition. Throws kTerminalState, kNotFrontier,
  // kDepthExceeded or kInvalidArgument (rule out of range). Does not consult
  // the data mask.
  TreeState Apply(const Action& action) const;

  // Inverse operations used by the backward policy.
  TreeState Unterminated() const;
  TreeState WithoutNode(int slot) const;

  // Frontier slot reached by x. Valid on terminal and non-terminal states.
  int Route(std::span<const double> x) const;

  std::uint64_t Hash() const;
  bool operator==(const TreeState& o) const;

  nlohmann::json ToJson() const;
  static TreeState FromJson(const nlohmann::json& j);

 private:
  int max_depth_ = 1;
  int num_thresholds_ = 1;
  bool terminal_ = false;
  std::vector<Slot> slots_;
};

struct TreeHash {
  std::size_t operator()(const TreeState& t) const { return t.Hash(); }
};

// Per-frontier-leaf class counts.
struct LeafStats {
  int num_classes = 0;
  std::vector<int> slots;
  std::vector<std::int64_t> counts;  // slots.size() x num_classes, row-major

  std::span<const std::int64_t> leaf(std::size_t k) const {
    return {counts.data() + k * num_classes, static_cast<std::size_t>(num_classes)};
  }
  std::size_t num_leaves() const { return slots.size(); }
  std::int64_t total() const;
};

LeafStats EmptyLeafStats(const TreeState& tree, int num_classes);
// Adds one batch of rows; batches may arrive in any order.
void AccumulateLeafCounts(const TreeState& tree, const Dataset& batch, LeafStats& stats);
LeafStats LeafCounts(const TreeState& tree, const Dataset& data);

// Row indices reaching each frontier slot, aligned with tree.Frontier().
std::vector<std::vector<std::size_t>> PartitionRows(const TreeState& tree,
                                                    const Dataset& data);

// d x t flags: split (f, k) is legal iff some row goes left and some row goes
// right. All false for an empty row set.
std::vector<std::uint8_t> LeafSplitMask(const Dataset& data,
                                        std::span<const std::size_t> rows,
                                        int num_thresholds);

// Legal actions of a non-terminal state. Terminate is always legal.
struct ActionMask {
  std::vector<int> frontier;
  int num_features = 0;
  int num_thresholds = 0;
  std::vector<std::uint8_t> split_valid;  // frontier x features x thresholds

  std::size_t rules_per_leaf() const {
    return static_cast<std::size_t>(num_features) * num_thresholds;
  }
  bool split_ok(std::size_t leaf, int feature, int threshold_index) const {
    return split_valid[leaf * rules_per_leaf() + feature * num_thresholds + threshold_index];
  }
  bool IsLegal(const Action& a) const;
  std::size_t NumLegalSplits() const;
};

// Throws kTerminalState on terminal input.
ActionMask LegalActionMask(const TreeState& tree, const Dataset& data);

// Layout of the per-leaf path vectors fed to the policy encoder: max_depth
// blocks, each [feature code, threshold value, right bit]. The feature code
// is a one-hot of width d, or f/d when d exceeds the cutoff.
struct EncodingLayout {
  static constexpr int kDefaultOneHotCutoff = 64;

  int num_features = 0;
  int max_depth = 0;
  bool one_hot = true;

  static EncodingLayout For(int num_features, int max_depth,
                            int one_hot_cutoff = kDefaultOneHotCutoff);
  int block_size() const { return (one_hot ? num_features : 1) + 2; }
  int width() const { return max_depth * block_size(); }
};

void EncodePath(const EncodingLayout& layout, std::span<const PathStep> path,
                std::span<double> out);

// One vector per frontier slot, aligned with tree.Frontier().
std::vector<std::vector<double>> LeafPathEncoding(const TreeState& tree,
                                                  const EncodingLayout& layout);

}  // namespace dtgfn
