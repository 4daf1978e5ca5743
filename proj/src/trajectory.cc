// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/trajectory.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

#include "dtgfn/error.h"

namespace dtgfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::uint8_t> MaskForRows(const Dataset& data, std::span<const std::size_t> rows,
                                      int slot, int max_depth, int num_thresholds) {
  if (TreeState::DepthOf(slot) >= max_depth) {
    return std::vector<std::uint8_t>(data.num_features() * num_thresholds, 0);
  }
  return LeafSplitMask(data, rows, num_thresholds);
}

std::vector<std::size_t> RowsForPath(const Dataset& data, std::span<const PathStep> path) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    const auto x = data.row(i);
    bool reaches = true;
    for (const auto& step : path) {
      if (step.rule.GoesLeft(x) == step.right) {
        reaches = false;
        break;
      }
    }
    if (reaches) rows.push_back(i);
  }
  return rows;
}

std::string PathKey(std::span<const PathStep> path) {
  std::string key;
  key.reserve(path.size() * 9);
  for (const auto& step : path) {
    const std::int32_t f = step.rule.feature, k = step.rule.threshold_index;
    key.append(reinterpret_cast<const char*>(&f), sizeof(f));
    key.append(reinterpret_cast<const char*>(&k), sizeof(k));
    key.push_back(step.right ? 'R' : 'L');
  }
  return key;
}

// Distinct root-to-leaf paths referenced by a batch, with their encodings
// and split masks.
struct LeafTable {
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<double>> encodings;
  std::vector<std::vector<std::uint8_t>> masks;

  int Intern(const TreeState& state, int slot, const Dataset& data, const EncodingLayout& layout) {
    const auto path = state.PathTo(slot);
    auto key = PathKey(path);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(encodings.size());
    index.emplace(std::move(key), id);
    std::vector<double> enc(layout.width());
    EncodePath(layout, path, enc);
    encodings.push_back(std::move(enc));
    masks.push_back(MaskForRows(data, RowsForPath(data, path), slot, state.max_depth(),
                                state.num_thresholds()));
    return id;
  }
};

struct StepRef {
  std::size_t trajectory = 0;
  std::vector<int> leaves;  // leaf-table ids in frontier order
  int chosen_leaf = -1;     // position in `leaves`, -1 for Terminate
  int chosen_rule = 0;      // feature * t + threshold_index
};

Matrix Stack(const std::vector<std::vector<double>>& rows, int width) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return m;
}

// Distinct frontiers (as leaf-id lists) of a batch; one term-head row each.
struct StateTable {
  std::map<std::vector<int>, int> index;
  std::vector<const std::vector<int>*> leaves;

  int Intern(const std::vector<int>& ids) {
    auto [it, inserted] = index.emplace(ids, static_cast<int>(leaves.size()));
    if (inserted) leaves.push_back(&it->first);
    return it->second;
  }
};

Matrix MeanPool(const Matrix& emb, const StateTable& states) {
  Matrix pooled(static_cast<Eigen::Index>(states.leaves.size()), emb.cols());
  for (std::size_t s = 0; s < states.leaves.size(); ++s) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(emb.cols());
    for (int leaf : *states.leaves[s]) sum += emb.row(leaf);
    pooled.row(static_cast<Eigen::Index>(s)) = sum / static_cast<double>(states.leaves[s]->size());
  }
  return pooled;
}

// Log normalizer over Terminate plus every unmasked split of the frontier.
double FrontierLogNormalizer(double term_logit, const std::vector<int>& leaves,
                             const LeafTable& table, const Matrix& rule_logits) {
  double m = term_logit;
  for (int leaf : leaves) {
    const auto& mask = table.masks[leaf];
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask[r]) m = std::max(m, rule_logits(leaf, static_cast<Eigen::Index>(r)));
    }
  }
  double z = std::exp(term_logit - m);
  for (int leaf : leaves) {
    const auto& mask = table.masks[leaf];
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask[r]) z += std::exp(rule_logits(leaf, static_cast<Eigen::Index>(r)) - m);
    }
  }
  return m + std::log(z);
}

struct LiveTrajectory {
  TreeState state;
  std::map<int, int> leaves;  // frontier slot -> leaf-table id, ascending slots
  Trajectory trajectory;
  bool done = false;
};

}  // namespace

Trajectory ReplayActions(int max_depth, int num_thresholds, std::span<const Action> actions) {
  Trajectory t;
  t.states.push_back(TreeState::Empty(max_depth, num_thresholds));
  for (const Action& a : actions) {
    t.states.push_back(t.states.back().Apply(a));
    t.actions.push_back(a);
  }
  return t;
}

double LogPb(const Trajectory& trajectory) {
  double total = 0.0;
  for (std::size_t i = 1; i < trajectory.states.size(); ++i) {
    const TreeState& s = trajectory.states[i];
    if (s.terminal()) continue;
    total -= std::log(static_cast<double>(s.RemovableNodes().size()));
  }
  return total;
}

Trajectory SampleBackwardTrajectory(const TreeState& terminal_tree, Rng& rng) {
  if (!terminal_tree.terminal()) {
    throw Error(ErrorCode::kInvalidArgument, "backward sampling needs a terminal tree");
  }
  std::vector<TreeState> reversed{terminal_tree};
  std::vector<Action> reversed_actions{Action::Terminate()};
  TreeState s = terminal_tree.Unterminated();
  reversed.push_back(s);
  while (s.NumDecisionNodes() > 0) {
    const auto removable = s.RemovableNodes();
    const int slot = removable[rng.UniformIndex(removable.size())];
    reversed_actions.push_back(Action::Split(slot, s.slot(slot).rule));
    s = s.WithoutNode(slot);
    reversed.push_back(s);
  }
  Trajectory t;
  t.states.assign(reversed.rbegin(), reversed.rend());
  t.actions.assign(reversed_actions.rbegin(), reversed_actions.rend());
  return t;
}

std::vector<Trajectory> SampleTrajectories(const PolicyModel& model, const Dataset& data,
                                           std::size_t count, double epsilon, Rng& rng) {
  const PolicyConfig& cfg = model.config();
  if (static_cast<int>(data.num_features()) != cfg.num_features) {
    throw Error(ErrorCode::kConfigMismatch, "dataset width differs from the policy's");
  }
  const int t = cfg.num_thresholds;
  const std::size_t per_leaf = static_cast<std::size_t>(cfg.num_features) * t;
  const EncodingLayout& layout = model.layout();

  // Paths recur across trajectories; each is encoded and evaluated once.
  LeafTable table;
  Matrix emb(0, cfg.hidden_units), rule_logits(0, per_leaf);
  std::vector<LiveTrajectory> live(count);
  for (auto& lt : live) {
    lt.state = TreeState::Empty(cfg.max_depth, t);
    lt.trajectory.states.push_back(lt.state);
    lt.leaves.emplace(0, table.Intern(lt.state, 0, data, layout));
  }

  std::vector<double> logits;
  for (;;) {
    const auto evaluated = emb.rows();
    const auto fresh = static_cast<Eigen::Index>(table.encodings.size()) - evaluated;
    if (fresh > 0) {
      std::vector<std::vector<double>> pending(table.encodings.begin() + evaluated,
                                               table.encodings.end());
      const Matrix e = model.encoder().Forward(Stack(pending, layout.width()));
      const Matrix r = model.rule_head().Forward(e);
      emb.conservativeResize(evaluated + fresh, Eigen::NoChange);
      rule_logits.conservativeResize(evaluated + fresh, Eigen::NoChange);
      emb.bottomRows(fresh) = e;
      rule_logits.bottomRows(fresh) = r;
    }

    std::vector<LiveTrajectory*> active;
    StateTable states;
    std::vector<int> state_of;
    for (auto& lt : live) {
      if (lt.done) continue;
      active.push_back(&lt);
      std::vector<int> ids;
      for (const auto& [slot, leaf] : lt.leaves) ids.push_back(leaf);
      state_of.push_back(states.Intern(ids));
    }
    if (active.empty()) break;
    const Matrix term = model.term_head().Forward(MeanPool(emb, states));

    for (std::size_t a = 0; a < active.size(); ++a) {
      LiveTrajectory& lt = *active[a];
      // Canonical action order: Terminate, then (slot, feature, threshold).
      logits.assign(1, term(state_of[a], 0));
      std::vector<std::pair<int, int>> ids{{-1, 0}};
      for (const auto& [slot, leaf] : lt.leaves) {
        const auto& mask = table.masks[leaf];
        for (std::size_t r = 0; r < per_leaf; ++r) {
          if (!mask[r]) continue;
          logits.push_back(rule_logits(leaf, static_cast<Eigen::Index>(r)));
          ids.emplace_back(slot, static_cast<int>(r));
        }
      }
      const double lse = LogSumExp(logits);
      std::size_t choice = 0;
      if (epsilon > 0.0 && rng.Uniform() < epsilon) {
        choice = rng.UniformIndex(logits.size());
      } else {
        double u = rng.Uniform();
        choice = logits.size() - 1;
        for (std::size_t i = 0; i < logits.size(); ++i) {
          u -= std::exp(logits[i] - lse);
          if (u < 0.0) {
            choice = i;
            break;
          }
        }
      }
      const auto [slot, rule] = ids[choice];
      const Action action =
          slot < 0 ? Action::Terminate()
                   : Action::Split(slot, DecisionRule::Make(rule / t, rule % t, t));
      lt.trajectory.step_log_pf.push_back(logits[choice] - lse);
      lt.trajectory.actions.push_back(action);
      lt.state = lt.state.Apply(action);
      lt.trajectory.states.push_back(lt.state);
      if (action.is_terminate()) {
        lt.done = true;
        continue;
      }
      lt.leaves.erase(slot);
      lt.leaves.emplace(2 * slot + 1, table.Intern(lt.state, 2 * slot + 1, data, layout));
      lt.leaves.emplace(2 * slot + 2, table.Intern(lt.state, 2 * slot + 2, data, layout));
    }
  }

  std::vector<Trajectory> out;
  out.reserve(count);
  for (auto& lt : live) out.push_back(std::move(lt.trajectory));
  return out;
}

Trajectory SampleTrajectory(const PolicyModel& model, const Dataset& data, double epsilon,
                            Rng& rng) {
  return std::move(SampleTrajectories(model, data, 1, epsilon, rng).front());
}

BatchObjective TrajectoryBalance(const PolicyModel& model, const Dataset& data,
                                 std::span<const Trajectory> trajectories,
                                 std::span<const double> log_rewards, PolicyModel* grads) {
  const PolicyConfig& cfg = model.config();
  if (static_cast<int>(data.num_features()) != cfg.num_features) {
    throw Error(ErrorCode::kConfigMismatch, "dataset width differs from the policy's");
  }
  if (log_rewards.size() != trajectories.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one log reward per trajectory required");
  }
  const int t = cfg.num_thresholds;
  const std::size_t per_leaf = static_cast<std::size_t>(cfg.num_features) * t;

  LeafTable table;
  std::vector<StepRef> steps;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    if (traj.states.size() != traj.actions.size() + 1 || traj.actions.empty() ||
        !traj.terminal().terminal()) {
      throw Error(ErrorCode::kInvalidArgument, "incomplete trajectory");
    }
    for (std::size_t s = 0; s < traj.actions.size(); ++s) {
      const TreeState& state = traj.states[s];
      const Action& action = traj.actions[s];
      StepRef step;
      step.trajectory = i;
      const auto frontier = state.Frontier();
      for (std::size_t k = 0; k < frontier.size(); ++k) {
        step.leaves.push_back(table.Intern(state, frontier[k], data, model.layout()));
        if (!action.is_terminate() && frontier[k] == action.slot) {
          step.chosen_leaf = static_cast<int>(k);
        }
      }
      if (!action.is_terminate()) {
        const auto& rule = action.rule;
        if (step.chosen_leaf < 0 || rule.feature < 0 || rule.feature >= cfg.num_features ||
            rule.threshold_index < 0 || rule.threshold_index >= t) {
          throw Error(ErrorCode::kIllegalAction, "split outside the action space");
        }
        step.chosen_rule = rule.feature * t + rule.threshold_index;
        if (!table.masks[step.leaves[step.chosen_leaf]][step.chosen_rule]) {
          throw Error(ErrorCode::kIllegalAction,
                      "masked split at slot " + std::to_string(action.slot));
        }
      }
      steps.push_back(std::move(step));
    }
  }

  StateTable states;
  std::vector<int> state_of(steps.size());
  for (std::size_t s = 0; s < steps.size(); ++s) state_of[s] = states.Intern(steps[s].leaves);

  MlpTrace enc_trace, rule_trace, term_trace;
  const bool need_grad = grads != nullptr;
  const Matrix emb = model.encoder().Forward(Stack(table.encodings, model.layout().width()),
                                             need_grad ? &enc_trace : nullptr);
  const Matrix rule_logits = model.rule_head().Forward(emb, need_grad ? &rule_trace : nullptr);
  const Matrix term =
      model.term_head().Forward(MeanPool(emb, states), need_grad ? &term_trace : nullptr);
  std::vector<double> state_lse(states.leaves.size());
  for (std::size_t u = 0; u < state_lse.size(); ++u) {
    state_lse[u] = FrontierLogNormalizer(term(static_cast<Eigen::Index>(u), 0), *states.leaves[u],
                                         table, rule_logits);
  }

  const std::size_t batch = trajectories.size();
  BatchObjective out;
  out.log_pf.assign(batch, 0.0);
  out.log_pb.resize(batch);
  out.residual.resize(batch);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const StepRef& step = steps[s];
    const double chosen = step.chosen_leaf < 0
                              ? term(state_of[s], 0)
                              : rule_logits(step.leaves[step.chosen_leaf], step.chosen_rule);
    out.log_pf[step.trajectory] += chosen - state_lse[state_of[s]];
  }

  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    out.log_pb[i] = LogPb(trajectories[i]);
    out.residual[i] = model.log_z() + out.log_pf[i] - out.log_pb[i] - log_rewards[i];
    loss += out.residual[i] * out.residual[i];
  }
  out.loss = batch > 0 ? loss / static_cast<double>(batch) : 0.0;
  if (!need_grad || batch == 0) return out;

  // Reverse pass. d(loss)/d(log_pf_i) = 2 residual_i / B, and
  // d(log p_chosen)/d(logit_k) = [k chosen] - softmax_k. Softmax terms are
  // shared by every step at the same frontier, so their weights are summed
  // per frontier first.
  Matrix d_rule = Matrix::Zero(rule_logits.rows(), rule_logits.cols());
  Matrix d_term = Matrix::Zero(term.rows(), 1);
  std::vector<double> state_weight(states.leaves.size(), 0.0);
  double d_log_z = 0.0;
  for (std::size_t i = 0; i < batch; ++i) d_log_z += 2.0 * out.residual[i] / batch;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const StepRef& step = steps[s];
    const double g = 2.0 * out.residual[step.trajectory] / batch;
    state_weight[state_of[s]] += g;
    if (step.chosen_leaf < 0) {
      d_term(state_of[s], 0) += g;
    } else {
      d_rule(step.leaves[step.chosen_leaf], step.chosen_rule) += g;
    }
  }
  for (std::size_t u = 0; u < states.leaves.size(); ++u) {
    const double g = state_weight[u];
    if (g == 0.0) continue;
    const auto ui = static_cast<Eigen::Index>(u);
    d_term(ui, 0) -= g * std::exp(term(ui, 0) - state_lse[u]);
    for (int leaf : *states.leaves[u]) {
      const auto& mask = table.masks[leaf];
      for (std::size_t r = 0; r < per_leaf; ++r) {
        if (!mask[r]) continue;
        const auto ri = static_cast<Eigen::Index>(r);
        d_rule(leaf, ri) -= g * std::exp(rule_logits(leaf, ri) - state_lse[u]);
      }
    }
  }

  const Matrix d_pooled = model.term_head().Backward(term_trace, d_term, grads->term_head());
  Matrix d_emb = model.rule_head().Backward(rule_trace, d_rule, grads->rule_head());
  for (std::size_t u = 0; u < states.leaves.size(); ++u) {
    const double inv = 1.0 / static_cast<double>(states.leaves[u]->size());
    for (int leaf : *states.leaves[u]) {
      d_emb.row(leaf) += inv * d_pooled.row(static_cast<Eigen::Index>(u));
    }
  }
  model.encoder().Backward(enc_trace, d_emb, grads->encoder());
  grads->set_log_z(grads->log_z() + d_log_z);
  return out;
}

double LogPf(const PolicyModel& model, const Dataset& data, const Trajectory& trajectory) {
  const double zero = 0.0;
  return TrajectoryBalance(model, data, std::span(&trajectory, 1), std::span(&zero, 1), nullptr)
      .log_pf[0];
}

}  // namespace dtgfn
