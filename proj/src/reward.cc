// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/reward.h"

#include <cmath>
#include <functional>
#include <limits>

#include "dtgfn/error.h"

namespace dtgfn {

RewardParams RewardParams::Defaults(int num_classes, int num_features) {
  RewardParams p;
  p.alpha.assign(num_classes, 0.1);
  p.beta = std::log(4.0) + std::log(static_cast<double>(num_features));
  return p;
}

void RewardParams::Validate() const {
  if (alpha.empty()) throw Error(ErrorCode::kInvalidArgument, "alpha is empty");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::kInvalidArgument, "alpha entries must be positive");
    }
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must be nonnegative");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

double LogLikelihoodGivenTheta(const LeafStats& stats,
                               std::span<const std::vector<double>> theta) {
  if (theta.size() != stats.num_leaves()) {
    throw Error(ErrorCode::kInvalidArgument, "one theta vector per leaf required");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < stats.num_leaves(); ++l) {
    const auto counts = stats.leaf(l);
    for (int c = 0; c < stats.num_classes; ++c) {
      if (counts[c] == 0) continue;
      if (theta[l][c] <= 0.0) return -std::numeric_limits<double>::infinity();
      total += static_cast<double>(counts[c]) * std::log(theta[l][c]);
    }
  }
  return total;
}

double LogMarginalLikelihood(const LeafStats& stats, std::span<const double> alpha) {
  if (static_cast<int>(alpha.size()) != stats.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "alpha length must equal class count");
  }
  double alpha_sum = 0.0, lgamma_alpha_sum = 0.0;
  for (double a : alpha) {
    alpha_sum += a;
    lgamma_alpha_sum += std::lgamma(a);
  }
  const double per_leaf_norm = std::lgamma(alpha_sum) - lgamma_alpha_sum;
  double total = 0.0;
  for (std::size_t l = 0; l < stats.num_leaves(); ++l) {
    const auto counts = stats.leaf(l);
    double n_leaf = 0.0, term = per_leaf_norm;
    for (int c = 0; c < stats.num_classes; ++c) {
      term += std::lgamma(static_cast<double>(counts[c]) + alpha[c]);
      n_leaf += static_cast<double>(counts[c]);
    }
    total += term - std::lgamma(n_leaf + alpha_sum);
  }
  return total;
}

double LogPrior(const TreeState& tree, double beta) {
  return -beta * tree.NumDecisionNodes();
}

double LogReward(const TreeState& tree, const LeafStats& stats, const RewardParams& params) {
  if (!tree.terminal()) throw Error(ErrorCode::kInvalidArgument, "reward of a non-terminal tree");
  return (LogMarginalLikelihood(stats, params.alpha) + LogPrior(tree, params.beta)) /
         params.temperature;
}

double LogReward(const TreeState& tree, const Dataset& data, const RewardParams& params) {
  if (!tree.terminal()) throw Error(ErrorCode::kInvalidArgument, "reward of a non-terminal tree");
  return LogReward(tree, LeafCounts(tree, data), params);
}

double BetaHeuristic(int num_features, int num_thresholds) {
  if (num_features < 1 || num_thresholds < 1) {
    throw Error(ErrorCode::kInvalidArgument, "d and t must be >= 1");
  }
  return std::log(4.0) + std::log(static_cast<double>(num_features)) +
         std::log(static_cast<double>(num_thresholds));
}

namespace {

BigInt Binomial(int n, int k) {
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

// Trees of exactly depth `depth`: level k holds n_k decision nodes chosen
// among the 2 n_{k-1} child positions, each picking one of the p - k features
// not used above it.
BigInt CountExactDepth(int p, int depth) {
  BigInt total = 0;
  std::function<void(int, int, const BigInt&)> expand = [&](int level, int prev,
                                                            const BigInt& acc) {
    if (level == depth) {
      total += acc;
      return;
    }
    const BigInt base = p - level;
    for (int n = 1; n <= 2 * prev; ++n) {
      expand(level + 1, n, acc * Binomial(2 * prev, n) * boost::multiprecision::pow(base, n));
    }
  };
  expand(1, 1, BigInt(p));
  return total;
}

}  // namespace

std::vector<BigInt> CountTreesPerDepth(int num_features, int max_depth) {
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  if (num_features < max_depth) {
    throw Error(ErrorCode::kInvalidArgument, "need p >= d (features are not reused on a path)");
  }
  std::vector<BigInt> out;
  for (int d = 1; d <= max_depth; ++d) out.push_back(CountExactDepth(num_features, d));
  return out;
}

BigInt CountTrees(int num_features, int max_depth) {
  BigInt sum = 0;
  for (const auto& v : CountTreesPerDepth(num_features, max_depth)) sum += v;
  return sum;
}

std::string ScientificTruncated(const BigInt& value, int digits) {
  if (value < 0) return "-" + ScientificTruncated(-value, digits);
  std::string s = value.str();
  const int exponent = static_cast<int>(s.size()) - 1;
  s.resize(static_cast<std::size_t>(digits) + 1, '0');
  std::string mantissa = s.substr(0, 1);
  if (digits > 0) mantissa += "." + s.substr(1);
  return mantissa + " x 10^" + std::to_string(exponent);
}

}  // namespace dtgfn
