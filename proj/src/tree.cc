// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/tree.h"

#include <algorithm>
#include <bit>
#include <limits>

#include "dtgfn/error.h"

namespace dtgfn {
namespace {

int Parent(int slot) { return (slot - 1) / 2; }

void CheckRule(const DecisionRule& rule, int num_thresholds) {
  if (rule.feature < 0 || rule.threshold_index < 0 ||
      rule.threshold_index >= num_thresholds) {
    throw Error(ErrorCode::kInvalidArgument, "decision rule out of range");
  }
}

}  // namespace

TreeState TreeState::Empty(int max_depth, int num_thresholds) {
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 1");
  if (max_depth > 20) throw Error(ErrorCode::kInvalidArgument, "max_depth too large");
  if (num_thresholds < 1) {
    throw Error(ErrorCode::kInvalidArgument, "num_thresholds must be >= 1");
  }
  TreeState s;
  s.max_depth_ = max_depth;
  s.num_thresholds_ = num_thresholds;
  s.slots_.assign((std::size_t{1} << (max_depth + 1)) - 1, Slot{});
  return s;
}

int TreeState::DepthOf(std::size_t slot) {
  return std::bit_width(slot + 1) - 1;
}

bool TreeState::IsFrontier(int slot) const {
  if (slot < 0 || static_cast<std::size_t>(slot) >= slots_.size()) return false;
  if (slots_[slot].kind == SlotKind::kDecision) return false;
  return slot == 0 || slots_[Parent(slot)].kind == SlotKind::kDecision;
}

std::vector<int> TreeState::Frontier() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(slots_.size()); ++i) {
    if (IsFrontier(i)) out.push_back(i);
  }
  return out;
}

int TreeState::NumDecisionNodes() const {
  return static_cast<int>(std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) {
    return s.kind == SlotKind::kDecision;
  }));
}

int TreeState::NumNodes() const { return 2 * NumDecisionNodes() + 1; }

std::vector<int> TreeState::RemovableNodes() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(slots_.size()); ++i) {
    if (slots_[i].kind != SlotKind::kDecision) continue;
    // Decisions never sit at max depth, so both children exist.
    if (slots_[2 * i + 1].kind != SlotKind::kDecision &&
        slots_[2 * i + 2].kind != SlotKind::kDecision) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<PathStep> TreeState::PathTo(int slot) const {
  std::vector<PathStep> path;
  while (slot > 0) {
    const int parent = Parent(slot);
    path.push_back({slots_[parent].rule, slot == 2 * parent + 2});
    slot = parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

TreeState TreeState::Apply(const Action& action) const {
  if (terminal_) throw Error(ErrorCode::kTerminalState, "no actions from a terminal state");
  TreeState next = *this;
  if (action.is_terminate()) {
    for (int slot : Frontier()) next.slots_[slot].kind = SlotKind::kLeaf;
    next.terminal_ = true;
    return next;
  }
  if (!IsFrontier(action.slot)) {
    throw Error(ErrorCode::kNotFrontier, "slot " + std::to_string(action.slot));
  }
  if (DepthOf(action.slot) >= max_depth_) {
    throw Error(ErrorCode::kDepthExceeded, "slot " + std::to_string(action.slot) +
                                               " is at max depth " +
                                               std::to_string(max_depth_));
  }
  CheckRule(action.rule, num_thresholds_);
  next.slots_[action.slot].kind = SlotKind::kDecision;
  next.slots_[action.slot].rule =
      DecisionRule::Make(action.rule.feature, action.rule.threshold_index, num_thresholds_);
  return next;
}

TreeState TreeState::Unterminated() const {
  TreeState s = *this;
  for (auto& slot : s.slots_) {
    if (slot.kind == SlotKind::kLeaf) slot.kind = SlotKind::kUnspecified;
  }
  s.terminal_ = false;
  return s;
}

TreeState TreeState::WithoutNode(int slot) const {
  const auto removable = RemovableNodes();
  if (terminal_ || std::find(removable.begin(), removable.end(), slot) == removable.end()) {
    throw Error(ErrorCode::kIllegalAction, "slot " + std::to_string(slot) + " is not removable");
  }
  TreeState s = *this;
  s.slots_[slot] = Slot{};
  return s;
}

int TreeState::Route(std::span<const double> x) const {
  int i = 0;
  while (slots_[i].kind == SlotKind::kDecision) {
    i = slots_[i].rule.GoesLeft(x) ? 2 * i + 1 : 2 * i + 2;
  }
  return i;
}

std::uint64_t TreeState::Hash() const {
  // FNV-1a over the slot array.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(max_depth_));
  mix(static_cast<std::uint64_t>(num_thresholds_));
  mix(terminal_ ? 1 : 0);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    if (s.kind == SlotKind::kUnspecified) continue;
    mix(i);
    mix(static_cast<std::uint64_t>(s.kind));
    if (s.kind == SlotKind::kDecision) {
      mix(static_cast<std::uint64_t>(s.rule.feature));
      mix(static_cast<std::uint64_t>(s.rule.threshold_index));
    }
  }
  return h;
}

bool TreeState::operator==(const TreeState& o) const {
  if (max_depth_ != o.max_depth_ || num_thresholds_ != o.num_thresholds_ ||
      terminal_ != o.terminal_) {
    return false;
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].kind != o.slots_[i].kind) return false;
    if (slots_[i].kind == SlotKind::kDecision && !(slots_[i].rule == o.slots_[i].rule)) {
      return false;
    }
  }
  return true;
}

nlohmann::json TreeState::ToJson() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    if (s.kind == SlotKind::kDecision) {
      nodes.push_back({{"index", i},
                       {"kind", "decision"},
                       {"feature", s.rule.feature},
                       {"threshold_index", s.rule.threshold_index}});
    } else if (s.kind == SlotKind::kLeaf) {
      nodes.push_back({{"index", i}, {"kind", "leaf"}});
    }
  }
  return {{"d_max", max_depth_},
          {"num_thresholds", num_thresholds_},
          {"terminal", terminal_},
          {"nodes", std::move(nodes)}};
}

TreeState TreeState::FromJson(const nlohmann::json& j) {
  try {
    TreeState s = Empty(j.at("d_max").get<int>(), j.at("num_thresholds").get<int>());
    for (const auto& node : j.at("nodes")) {
      const auto index = node.at("index").get<std::size_t>();
      if (index >= s.slots_.size()) throw Error(ErrorCode::kParse, "node index out of range");
      const auto kind = node.at("kind").get<std::string>();
      if (kind == "decision") {
        if (DepthOf(index) >= s.max_depth_) {
          throw Error(ErrorCode::kParse, "decision node at max depth");
        }
        DecisionRule rule = DecisionRule::Make(node.at("feature").get<int>(),
                                               node.at("threshold_index").get<int>(),
                                               s.num_thresholds_);
        CheckRule(rule, s.num_thresholds_);
        s.slots_[index] = {SlotKind::kDecision, rule};
      } else if (kind == "leaf") {
        s.slots_[index].kind = SlotKind::kLeaf;
      } else {
        throw Error(ErrorCode::kParse, "unknown node kind '" + kind + "'");
      }
    }
    s.terminal_ = j.value("terminal", true);
    for (std::size_t i = 1; i < s.slots_.size(); ++i) {
      if (s.slots_[i].kind != SlotKind::kUnspecified &&
          s.slots_[Parent(static_cast<int>(i))].kind != SlotKind::kDecision) {
        throw Error(ErrorCode::kParse, "node " + std::to_string(i) + " has no decision parent");
      }
    }
    for (int f : s.Frontier()) {
      const bool leaf = s.slots_[f].kind == SlotKind::kLeaf;
      if (leaf != s.terminal_) throw Error(ErrorCode::kParse, "frontier/terminal mismatch");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

std::int64_t LeafStats::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

LeafStats EmptyLeafStats(const TreeState& tree, int num_classes) {
  LeafStats stats;
  stats.num_classes = num_classes;
  stats.slots = tree.Frontier();
  stats.counts.assign(stats.slots.size() * num_classes, 0);
  return stats;
}

void AccumulateLeafCounts(const TreeState& tree, const Dataset& batch, LeafStats& stats) {
  if (batch.num_classes > stats.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "batch has more classes than the stats");
  }
  std::vector<int> leaf_of_slot(tree.num_slots(), -1);
  for (std::size_t k = 0; k < stats.slots.size(); ++k) leaf_of_slot[stats.slots[k]] = static_cast<int>(k);
  for (std::size_t i = 0; i < batch.num_rows(); ++i) {
    const int k = leaf_of_slot[tree.Route(batch.row(i))];
    ++stats.counts[static_cast<std::size_t>(k) * stats.num_classes + batch.labels[i]];
  }
}

LeafStats LeafCounts(const TreeState& tree, const Dataset& data) {
  LeafStats stats = EmptyLeafStats(tree, data.num_classes);
  AccumulateLeafCounts(tree, data, stats);
  return stats;
}

std::vector<std::vector<std::size_t>> PartitionRows(const TreeState& tree,
                                                    const Dataset& data) {
  const auto frontier = tree.Frontier();
  std::vector<int> leaf_of_slot(tree.num_slots(), -1);
  for (std::size_t k = 0; k < frontier.size(); ++k) leaf_of_slot[frontier[k]] = static_cast<int>(k);
  std::vector<std::vector<std::size_t>> parts(frontier.size());
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    parts[leaf_of_slot[tree.Route(data.row(i))]].push_back(i);
  }
  return parts;
}

std::vector<std::uint8_t> LeafSplitMask(const Dataset& data,
                                        std::span<const std::size_t> rows,
                                        int num_thresholds) {
  const std::size_t d = data.num_features();
  std::vector<std::uint8_t> mask(d * num_thresholds, 0);
  if (rows.empty()) return mask;
  for (std::size_t f = 0; f < d; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r : rows) {
      const double v = data.at(r, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Some row goes left (lo <= thr) and some goes right (hi > thr).
    for (int k = 0; k < num_thresholds; ++k) {
      const double thr = ThresholdValue(k, num_thresholds);
      mask[f * num_thresholds + k] = lo <= thr && hi > thr;
    }
  }
  return mask;
}

bool ActionMask::IsLegal(const Action& a) const {
  if (a.is_terminate()) return true;
  auto it = std::find(frontier.begin(), frontier.end(), a.slot);
  if (it == frontier.end()) return false;
  if (a.rule.feature < 0 || a.rule.feature >= num_features || a.rule.threshold_index < 0 ||
      a.rule.threshold_index >= num_thresholds) {
    return false;
  }
  return split_ok(static_cast<std::size_t>(it - frontier.begin()), a.rule.feature,
                  a.rule.threshold_index);
}

std::size_t ActionMask::NumLegalSplits() const {
  return static_cast<std::size_t>(std::count(split_valid.begin(), split_valid.end(), 1));
}

ActionMask LegalActionMask(const TreeState& tree, const Dataset& data) {
  if (tree.terminal()) throw Error(ErrorCode::kTerminalState, "mask of a terminal state");
  ActionMask mask;
  mask.frontier = tree.Frontier();
  mask.num_features = static_cast<int>(data.num_features());
  mask.num_thresholds = tree.num_thresholds();
  const std::size_t per_leaf = mask.rules_per_leaf();
  mask.split_valid.assign(mask.frontier.size() * per_leaf, 0);
  const auto parts = PartitionRows(tree, data);
  for (std::size_t k = 0; k < mask.frontier.size(); ++k) {
    if (TreeState::DepthOf(mask.frontier[k]) >= tree.max_depth()) continue;
    const auto leaf_mask = LeafSplitMask(data, parts[k], tree.num_thresholds());
    std::copy(leaf_mask.begin(), leaf_mask.end(), mask.split_valid.begin() + k * per_leaf);
  }
  return mask;
}

EncodingLayout EncodingLayout::For(int num_features, int max_depth, int one_hot_cutoff) {
  return {num_features, max_depth, num_features <= one_hot_cutoff};
}

void EncodePath(const EncodingLayout& layout, std::span<const PathStep> path,
                std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int block = layout.block_size();
  for (std::size_t k = 0; k < path.size() && static_cast<int>(k) < layout.max_depth; ++k) {
    double* b = out.data() + k * block;
    int off = 0;
    if (layout.one_hot) {
      b[path[k].rule.feature] = 1.0;
      off = layout.num_features;
    } else {
      b[0] = static_cast<double>(path[k].rule.feature) / layout.num_features;
      off = 1;
    }
    b[off] = path[k].rule.threshold_value;
    b[off + 1] = path[k].right ? 1.0 : 0.0;
  }
}

std::vector<std::vector<double>> LeafPathEncoding(const TreeState& tree,
                                                  const EncodingLayout& layout) {
  std::vector<std::vector<double>> out;
  for (int slot : tree.Frontier()) {
    std::vector<double> v(layout.width());
    EncodePath(layout, tree.PathTo(slot), v);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace dtgfn
