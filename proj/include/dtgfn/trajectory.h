// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "dtgfn/dataset.h"
#include "dtgfn/policy.h"
#include "dtgfn/random.h"
#include "dtgfn/tree.h"

namespace dtgfn {

// Complete trajectory s_0 -> ... -> s_n from the empty tree to a terminal
// tree. states has one more entry than actions.
struct Trajectory {
  std::vector<TreeState> states;
  std::vector<Action> actions;
  // Model log-probability of each action when the trajectory was sampled
  // forward; empty for trajectories built by the backward policy.
  std::vector<double> step_log_pf;

  const TreeState& terminal() const { return states.back(); }
  std::size_t length() const { return actions.size(); }
};

// Upper bound on trajectory length: one split per internal slot plus the
// final Terminate.
inline std::size_t MaxTrajectoryLength(int max_depth) {
  return (std::size_t{1} << max_depth) - 1 + 1;
}

// Replays actions from the empty tree. Throws on structurally invalid steps.
Trajectory ReplayActions(int max_depth, int num_thresholds, std::span<const Action> actions);

// Uniform backward policy: each non-terminal state s_t (t >= 1) contributes
// -log |removable decision nodes of s_t|; the terminal step contributes 0.
double LogPb(const Trajectory& trajectory);

// Walks backward from a terminal tree, deleting a uniformly chosen removable
// decision node at each step, and returns the reversed (forward) trajectory.
Trajectory SampleBackwardTrajectory(const TreeState& terminal_tree, Rng& rng);

// Samples `count` trajectories in lockstep. At each step an action is drawn
// uniformly from the legal set with probability epsilon and from the policy
// otherwise; step_log_pf always records the policy's log-probability.
std::vector<Trajectory> SampleTrajectories(const PolicyModel& model, const Dataset& data,
                                           std::size_t count, double epsilon, Rng& rng);
Trajectory SampleTrajectory(const PolicyModel& model, const Dataset& data, double epsilon,
                            Rng& rng);

// Per-trajectory quantities of a batch evaluation.
struct BatchObjective {
  std::vector<double> log_pf;
  std::vector<double> log_pb;
  std::vector<double> residual;  // log_z + log_pf - log_pb - log_reward
  double loss = 0.0;             // mean squared residual
};

// Evaluates log P_F of every trajectory under the model (sharing leaf
// computations across the batch) and the mean trajectory-balance loss. When
// grads is non-null, d(loss)/d(parameters) is added into it. Throws
// kIllegalAction when a step is masked under `data`.
BatchObjective TrajectoryBalance(const PolicyModel& model, const Dataset& data,
                                 std::span<const Trajectory> trajectories,
                                 std::span<const double> log_rewards, PolicyModel* grads);

// Sum of per-step forward log-probabilities under the model.
double LogPf(const PolicyModel& model, const Dataset& data, const Trajectory& trajectory);

}  // namespace dtgfn
