// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "dtgfn/error.h"
#include "dtgfn/run_config.h"
#include "test_util.h"

namespace dtgfn {
namespace {

TEST_CASE("run config round trip and hash") {
  RunConfig c;
  c.dataset.source = "xor";
  c.dataset.xor_n = 200;
  c.max_depth = 3;
  c.alpha = std::vector<double>{0.5, 0.5};
  c.train.steps = 11;
  const RunConfig back = RunConfig::FromJson(c.ToJson());
  CHECK(back.ToJson() == c.ToJson());
  CHECK(back.Hash() == c.Hash());

  RunConfig moved = c;
  moved.output_dir = "elsewhere";
  CHECK(moved.Hash() == c.Hash());
  RunConfig changed = c;
  changed.train.lr = 0.5;
  CHECK(changed.Hash() != c.Hash());
  CHECK(HexDigest("abc") != HexDigest("abd"));
  CHECK(HexDigest("abc").size() == 16);
}

TEST_CASE("run config rejects unknown keys and bad values") {
  const nlohmann::json base = RunConfig{}.ToJson();
  for (const char* path : {"/typo", "/dataset/typo", "/train/typo"}) {
    nlohmann::json j = base;
    j[nlohmann::json::json_pointer(path)] = 1;
    INFO(path);
    CHECK_THROWS_AS(RunConfig::FromJson(j), Error);
  }
  nlohmann::json j = base;
  j["leaf_params"] = "median";
  CHECK_THROWS_AS(RunConfig::FromJson(j), Error);
  j = base;
  j["max_depth"] = "deep";
  CHECK_THROWS_AS(RunConfig::FromJson(j), Error);
  j = base;
  j["seeds"] = nlohmann::json::array();
  CHECK_THROWS_AS(RunConfig::FromJson(j), Error);
}

TEST_CASE("reward and policy settings derive from the data") {
  RunConfig c;
  c.dataset.source = "xor";
  c.dataset.xor_n = 100;
  c.dataset.xor_noise = 2;
  c.num_thresholds = 9;
  const Dataset d = LoadDataset(c);
  CHECK(d.num_features() == 4);
  RewardParams p = c.Reward(d);
  CHECK(p.alpha == std::vector<double>{0.1, 0.1});
  CHECK(p.beta == doctest::Approx(std::log(16.0)));
  c.structure_prior = "coding";
  CHECK(c.Reward(d).beta == doctest::Approx(std::log(16.0 * 9)));
  c.beta = 0.25;
  CHECK(c.Reward(d).beta == 0.25);
  const PolicyConfig pc = c.Policy(d, 7);
  CHECK(pc.num_features == 4);
  CHECK(pc.num_thresholds == 9);
  CHECK(pc.init_seed == 7);

  const PreparedData split = PrepareData(c, 1);
  CHECK(split.train.num_rows() == 80);
  CHECK(split.test.num_rows() == 20);
}

TEST_CASE("shipped example configs parse") {
  const std::filesystem::path dir = std::filesystem::path(DTGFN_TEST_DATA_DIR) / ".." / ".." / "configs";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    INFO(entry.path().string());
    std::ifstream in(entry.path());
    CHECK_NOTHROW(RunConfig::FromJson(nlohmann::json::parse(in)));
    ++seen;
  }
  CHECK(seen >= 3);
}

}  // namespace
}  // namespace dtgfn
