// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include "doctest.h"

#include "dtgfn/error.h"
#include "dtgfn/inference.h"
#include "test_util.h"

namespace dtgfn {
namespace {

TreeState Stump() { return TreeState::Empty(2, 1).Apply(Action::Terminate()); }

TreeState RootSplit(int f) {
  return TreeState::Empty(2, 1).Apply(Action::Split(0, DecisionRule::Make(f, 0, 1))).Apply(Action::Terminate());
}

TEST_CASE("posterior-mean leaf parameters") {
  const Dataset d = testing::MakeDataset({{0.1}, {0.2}, {0.3}, {0.4}}, {0, 0, 0, 1}, 2);
  Rng rng(1);
  const std::vector<double> alpha{1.0, 1.0};
  const auto theta = LeafPosteriorParams(Stump(), d, alpha, LeafParamMode::kMean, rng);
  REQUIRE(theta.size() == 1);
  CHECK(theta[0][0] == doctest::Approx(4.0 / 6));
  CHECK(theta[0][1] == doctest::Approx(2.0 / 6));

  // Every row goes left, so the right leaf sees no data and keeps the prior mean.
  const std::vector<double> skew{0.5, 1.5};
  const auto split = LeafPosteriorParams(RootSplit(0), d, skew, LeafParamMode::kMean, rng);
  REQUIRE(split.size() == 2);
  CHECK(split[1][0] == doctest::Approx(0.25));
  CHECK(split[1][1] == doctest::Approx(0.75));
}

TEST_CASE("sampled leaf parameters are probability vectors") {
  Rng rng(2);
  const Dataset d = testing::RandomDataset(rng, 40, 2, 3);
  const std::vector<double> alpha{0.1, 0.1, 0.1};
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& th : LeafPosteriorParams(RootSplit(trial % 2), d, alpha, LeafParamMode::kSample, rng)) {
      CHECK(std::accumulate(th.begin(), th.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (double v : th) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("normalized weights are shift invariant") {
  Rng rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> lp(1 + rng.UniformIndex(8));
    for (double& v : lp) v = -1000.0 * rng.Uniform();
    const double shift = (rng.Uniform() - 0.5) * 1e4;
    std::vector<double> shifted = lp;
    for (double& v : shifted) v += shift;
    const auto a = NormalizedWeights(lp);
    const auto b = NormalizedWeights(shifted);
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
  }
  const std::vector<double> equal{-3.0, -3.0};
  for (double w : NormalizedWeights(equal)) CHECK(w == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("model averaging") {
  Ensemble::Member a{Stump(), -1.0, {{0.8, 0.2}}};
  Ensemble one({a}, {0.1, 0.1});
  const std::vector<double> x{0.3};
  const Prediction p = one.Predict(x);
  CHECK(p.probabilities == std::vector<double>{0.8, 0.2});
  CHECK(p.label == 0);

  Ensemble::Member b{Stump(), -1.0, {{0.2, 0.8}}};
  Ensemble::Member c{Stump(), -1.0, {{0.1, 0.9}}};
  Ensemble three({a, b, c}, {0.1, 0.1});
  const Prediction q = three.Predict(x);
  CHECK(q.probabilities[0] == doctest::Approx(1.1 / 3));
  CHECK(q.label == 1);

  CHECK_THROWS_AS(Ensemble().Predict(x), Error);
}

TEST_CASE("ensemble built from data routes rows to their leaves") {
  const Dataset d = GenHiddenXor(80, 0, NoiseKind::kBinary, 5);
  const RewardParams p = RewardParams::Defaults(2, 2);
  Rng rng(1);
  TreeState xor_tree = testing::FullDepth2(2, 1, 0, 0, 1, 0).Apply(Action::Terminate());
  const std::vector<TreeState> trees{xor_tree, Stump()};
  const Ensemble e = Ensemble::Build(trees, d, p, LeafParamMode::kMean, rng);
  CHECK(e.weights()[0] > 0.999);
  CHECK(e.members()[0].log_posterior == doctest::Approx(LogReward(xor_tree, d, p)));
  const EvalReport r = Evaluate(e, d);
  CHECK(r.accuracy == doctest::Approx(1.0));
  CHECK(r.f1 == doctest::Approx(1.0));
  CHECK(e.MeanModelSize() == doctest::Approx((7.0 + 1.0) / 2));

  const Ensemble back = Ensemble::FromJson(e.ToJson());
  REQUIRE(back.size() == e.size());
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    CHECK(back.Predict(d.row(i)).probabilities == e.Predict(d.row(i)).probabilities);
  }
}

TEST_CASE("model size counts leaves and decisions") {
  CHECK(RootSplit(0).NumNodes() == 3);
  CHECK(Stump().NumNodes() == 1);
}

TEST_CASE("out-of-distribution rule") {
  std::vector<double> scores(20, 0.9);
  scores.push_back(0.05);
  const auto flags = OodClassify(scores);
  for (std::size_t i = 0; i + 1 < flags.size(); ++i) CHECK(!flags[i]);
  CHECK(flags.back());
  const std::vector<double> flat(5, 0.4);
  for (bool f : OodClassify(flat)) CHECK(!f);
  CHECK_THROWS_AS(OodClassify(std::vector<double>{0.3}), Error);

  Ensemble::Member m{Stump(), 0.0, {{0.7, 0.2, 0.1}}};
  const Ensemble e({m}, {0.1, 0.1, 0.1});
  const Dataset rows = testing::MakeDataset({{0.1}, {0.9}}, {0, 2}, 3);
  const std::vector<int> normal{0, 1};
  for (double s : OodScores(e, rows, normal)) CHECK(s == doctest::Approx(0.9));
}

TEST_CASE("f1 and accuracy") {
  const std::vector<int> truth{1, 1, 0, 0, 1};
  const std::vector<int> pred{1, 0, 0, 1, 1};
  // tp 2, fp 1, fn 1.
  CHECK(BinaryF1(pred, truth, 1) == doctest::Approx(2.0 / 3));
  CHECK(BinaryF1(pred, truth, 0) == doctest::Approx(0.5));
  CHECK(MacroF1(pred, truth, 2) == doctest::Approx((2.0 / 3 + 0.5) / 2));
  const std::vector<int> none{0, 0};
  CHECK(BinaryF1(none, none, 1) == 0.0);
}

TEST_CASE("map tree selection breaks ties toward simpler trees") {
  // A constant feature makes the split and the stump tie at beta = 0.
  const Dataset d = testing::MakeDataset({{0.2, 0.1}, {0.3, 0.9}, {0.4, 0.9}}, {0, 1, 1}, 2);
  RewardParams p = RewardParams::Defaults(2, 2);
  p.beta = 0.0;
  const std::vector<TreeState> samples{RootSplit(0), Stump(), RootSplit(0)};
  CHECK(LogReward(RootSplit(0), d, p) == doctest::Approx(LogReward(Stump(), d, p)));
  CHECK(SelectMapTree(samples, d, p) == Stump());
  const std::vector<TreeState> better{Stump(), RootSplit(1)};
  CHECK(SelectMapTree(better, d, p) == RootSplit(1));
}

}  // namespace
}  // namespace dtgfn
