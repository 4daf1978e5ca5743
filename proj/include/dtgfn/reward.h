// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dtgfn/dataset.h"
#include "dtgfn/tree.h"

namespace dtgfn {

struct RewardParams {
  std::vector<double> alpha;  // Dirichlet prior over leaf class probabilities
  double beta = 0.0;          // structure prior coefficient per decision node
  double temperature = 1.0;

  // alpha = 0.1 per class and beta = log 4 + log d.
  static RewardParams Defaults(int num_classes, int num_features);
  void Validate() const;
};

// sum_l sum_c n_lc log theta_lc. theta is one probability vector per leaf,
// aligned with stats. A zero probability on an observed class gives -inf.
double LogLikelihoodGivenTheta(const LeafStats& stats,
                               std::span<const std::vector<double>> theta);

// Dirichlet-multinomial evidence with the leaf parameters integrated out,
// evaluated in log space.
double LogMarginalLikelihood(const LeafStats& stats, std::span<const double> alpha);

// -beta * (number of decision nodes).
double LogPrior(const TreeState& tree, double beta);

// (log marginal likelihood + log prior) / temperature. Throws
// kInvalidArgument when the tree is not terminal.
double LogReward(const TreeState& tree, const Dataset& data, const RewardParams& params);
double LogReward(const TreeState& tree, const LeafStats& stats, const RewardParams& params);

// log 4 + log d + log t.
double BetaHeuristic(int num_features, int num_thresholds);

using BigInt = boost::multiprecision::cpp_int;

// Number of distinct full binary trees of exactly depth 1..max_depth over p
// binary features, one entry per depth. Throws kInvalidArgument if p < depth.
std::vector<BigInt> CountTreesPerDepth(int num_features, int max_depth);
// Cumulative count over depths 1..max_depth.
BigInt CountTrees(int num_features, int max_depth);

// "d.ddd x 10^e" with the mantissa truncated (not rounded) to the requested
// digits, the convention of published search-space tables.
std::string ScientificTruncated(const BigInt& value, int digits = 3);

}  // namespace dtgfn
