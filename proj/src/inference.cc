// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/inference.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtgfn/error.h"
#include "dtgfn/trajectory.h"

namespace dtgfn {

std::vector<TreeState> SampleTrees(const PolicyModel& model, const Dataset& data,
                                   std::size_t m, Rng& rng) {
  std::vector<TreeState> trees;
  trees.reserve(m);
  for (auto& traj : SampleTrajectories(model, data, m, 0.0, rng)) {
    trees.push_back(traj.terminal());
  }
  return trees;
}

std::vector<std::vector<double>> LeafPosteriorParams(const TreeState& tree, const Dataset& data,
                                                     std::span<const double> alpha,
                                                     LeafParamMode mode, Rng& rng) {
  if (!tree.terminal()) throw Error(ErrorCode::kInvalidArgument, "leaf params of a non-terminal tree");
  if (static_cast<int>(alpha.size()) != data.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "alpha length must equal class count");
  }
  const LeafStats stats = LeafCounts(tree, data);
  std::vector<std::vector<double>> out(stats.num_leaves());
  for (std::size_t l = 0; l < stats.num_leaves(); ++l) {
    const auto counts = stats.leaf(l);
    auto& theta = out[l];
    theta.resize(alpha.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < alpha.size(); ++c) {
      const double concentration = static_cast<double>(counts[c]) + alpha[c];
      theta[c] = mode == LeafParamMode::kMean ? concentration : rng.Gamma(concentration);
      sum += theta[c];
    }
    if (!(sum > 0.0)) {
      // Every gamma draw underflowed; fall back to the posterior mean.
      sum = 0.0;
      for (std::size_t c = 0; c < alpha.size(); ++c) {
        theta[c] = static_cast<double>(counts[c]) + alpha[c];
        sum += theta[c];
      }
    }
    for (double& v : theta) v /= sum;
  }
  return out;
}

std::vector<double> NormalizedWeights(std::span<const double> log_posteriors) {
  if (log_posteriors.empty()) return {};
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_posteriors) m = std::max(m, v);
  if (!std::isfinite(m)) throw Error(ErrorCode::kNonFinite, "no finite log posterior");
  double z = 0.0;
  for (double v : log_posteriors) z += std::exp(v - m);
  const double log_norm = m + std::log(z);
  std::vector<double> w(log_posteriors.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_posteriors[i] - log_norm);
  return w;
}

Ensemble::Ensemble(std::vector<Member> members, std::vector<double> alpha)
    : members_(std::move(members)), alpha_(std::move(alpha)) {
  std::vector<double> lp;
  for (const auto& m : members_) {
    if (!m.tree.terminal()) throw Error(ErrorCode::kInvalidArgument, "ensemble member not terminal");
    const auto frontier = m.tree.Frontier();
    if (m.leaf_params.size() != frontier.size()) {
      throw Error(ErrorCode::kInvalidArgument, "one parameter vector per leaf required");
    }
    std::vector<int> index(m.tree.num_slots(), -1);
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      if (m.leaf_params[k].size() != alpha_.size()) {
        throw Error(ErrorCode::kInvalidArgument, "leaf parameter width != class count");
      }
      index[frontier[k]] = static_cast<int>(k);
    }
    leaf_index_.push_back(std::move(index));
    lp.push_back(m.log_posterior);
  }
  weights_ = NormalizedWeights(lp);
}

Ensemble Ensemble::Build(std::span<const TreeState> trees, const Dataset& data,
                         const RewardParams& params, LeafParamMode mode, Rng& rng) {
  RewardParams posterior = params;
  posterior.temperature = 1.0;
  std::vector<Member> members;
  members.reserve(trees.size());
  for (const auto& tree : trees) {
    const LeafStats stats = LeafCounts(tree, data);
    members.push_back({tree, LogReward(tree, stats, posterior),
                       LeafPosteriorParams(tree, data, params.alpha, mode, rng)});
  }
  return Ensemble(std::move(members), params.alpha);
}

Prediction Ensemble::Predict(std::span<const double> x) const {
  if (members_.empty()) throw Error(ErrorCode::kEmptyEnsemble, "cannot predict");
  Prediction p;
  p.probabilities.assign(alpha_.size(), 0.0);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const int leaf = leaf_index_[i][members_[i].tree.Route(x)];
    const auto& theta = members_[i].leaf_params[leaf];
    for (std::size_t c = 0; c < theta.size(); ++c) p.probabilities[c] += weights_[i] * theta[c];
  }
  p.label = static_cast<int>(std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                             p.probabilities.begin());
  return p;
}

double Ensemble::MeanModelSize() const {
  if (members_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& m : members_) total += m.tree.NumNodes();
  return total / static_cast<double>(members_.size());
}

nlohmann::json Ensemble::ToJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : members_) {
    arr.push_back({{"tree", m.tree.ToJson()},
                   {"log_posterior", m.log_posterior},
                   {"alpha", alpha_},
                   {"leaf_params", m.leaf_params}});
  }
  return arr;
}

Ensemble Ensemble::FromJson(const nlohmann::json& j) {
  try {
    if (!j.is_array()) throw Error(ErrorCode::kParse, "ensemble must be a JSON array");
    std::vector<Member> members;
    std::vector<double> alpha;
    for (const auto& item : j) {
      auto a = item.at("alpha").get<std::vector<double>>();
      if (!alpha.empty() && a != alpha) throw Error(ErrorCode::kParse, "members disagree on alpha");
      alpha = std::move(a);
      members.push_back({TreeState::FromJson(item.at("tree")),
                         item.at("log_posterior").get<double>(),
                         item.at("leaf_params").get<std::vector<std::vector<double>>>()});
    }
    return Ensemble(std::move(members), std::move(alpha));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

std::vector<double> OodScores(const Ensemble& ensemble, const Dataset& rows,
                              std::span<const int> normal_classes) {
  std::vector<double> scores(rows.num_rows());
  for (std::size_t i = 0; i < rows.num_rows(); ++i) {
    const auto p = ensemble.Predict(rows.row(i));
    double s = 0.0;
    for (int c : normal_classes) s += p.probabilities.at(c);
    scores[i] = std::clamp(s, 0.0, 1.0);
  }
  return scores;
}

std::vector<bool> OodClassify(std::span<const double> scores) {
  if (scores.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two scores");
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(scores.size()));
  const double cutoff = mean - 2.0 * sd;
  std::vector<bool> anomalous(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) anomalous[i] = scores[i] < cutoff;
  return anomalous;
}

double BinaryF1(std::span<const int> predicted, std::span<const int> truth, int positive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == positive, t = truth[i] == positive;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double MacroF1(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const bool seen = std::find(truth.begin(), truth.end(), c) != truth.end() ||
                      std::find(predicted.begin(), predicted.end(), c) != predicted.end();
    if (!seen) continue;
    sum += BinaryF1(predicted, truth, c);
    ++present;
  }
  return present > 0 ? sum / present : 0.0;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json j = {{"accuracy", accuracy}, {"f1", f1}, {"model_size", model_size}};
  if (!per_seed.empty()) {
    j["per_seed"] = nlohmann::json::array();
    for (const auto& r : per_seed) j["per_seed"].push_back(r.ToJson());
  }
  return j;
}

EvalReport Evaluate(const Ensemble& ensemble, const Dataset& test) {
  if (test.num_rows() == 0) throw Error(ErrorCode::kEmptyDataset, "empty test set");
  std::vector<int> predicted(test.num_rows());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.num_rows(); ++i) {
    predicted[i] = ensemble.Predict(test.row(i)).label;
    correct += predicted[i] == test.labels[i];
  }
  EvalReport r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(test.num_rows());
  r.f1 = test.num_classes == 2 ? BinaryF1(predicted, test.labels, 1)
                               : MacroF1(predicted, test.labels, test.num_classes);
  r.model_size = ensemble.MeanModelSize();
  return r;
}

TreeState SelectMapTree(std::span<const TreeState> samples, const Dataset& data,
                        const RewardParams& params) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples to select from");
  RewardParams posterior = params;
  posterior.temperature = 1.0;
  std::size_t best = 0;
  double best_reward = LogReward(samples[0], data, posterior);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double r = LogReward(samples[i], data, posterior);
    const TreeState& a = samples[i];
    const TreeState& b = samples[best];
    bool better = r > best_reward;
    if (r == best_reward) {
      const int na = a.NumDecisionNodes(), nb = b.NumDecisionNodes();
      better = na < nb || (na == nb && a.Hash() < b.Hash());
    }
    if (better) {
      best = i;
      best_reward = r;
    }
  }
  return samples[best];
}

}  // namespace dtgfn
