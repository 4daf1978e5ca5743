// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"

#include "dtgfn/dataset.h"
#include "dtgfn/error.h"
#include "test_util.h"

namespace dtgfn {
namespace {

using testing::MakeDataset;
using testing::TempPath;
using testing::WriteText;

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

TEST_CASE("iris loads with four scaled features and three balanced classes") {
  const Dataset d = LoadCsv(testing::IrisPath(), {"species", {}, true});
  CHECK(d.num_rows() == 150);
  CHECK(d.num_features() == 4);
  CHECK(d.num_classes == 3);
  CHECK(d.ClassCounts() == std::vector<std::int64_t>{50, 50, 50});
  for (double v : d.features) CHECK((v >= 0.0 && v <= 1.0));
  for (std::size_t j = 0; j < 4; ++j) {
    double lo = 1, hi = 0;
    for (std::size_t i = 0; i < d.num_rows(); ++i) {
      lo = std::min(lo, d.at(i, j));
      hi = std::max(hi, d.at(i, j));
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
  CHECK_NOTHROW(d.Validate());
}

TEST_CASE("csv errors are distinct") {
  const auto path = TempPath("errs.csv");
  CHECK(CodeOf([] { LoadCsv(TempPath("does_not_exist.csv"), {"y", {}, true}); }) ==
        ErrorCode::kMissingFile);

  WriteText(path, "a,b\n1,2\n");
  CHECK(CodeOf([&] { LoadCsv(path, {"y", {}, true}); }) == ErrorCode::kMissingColumn);

  WriteText(path, "a,y\n");
  CHECK(CodeOf([&] { LoadCsv(path, {"y", {}, true}); }) == ErrorCode::kEmptyDataset);

  WriteText(path, "a,y\n1,0\nfoo,1\n");
  CHECK(CodeOf([&] { LoadCsv(path, {"y", {}, true}); }) == ErrorCode::kUnparseableCell);

  WriteText(path, "a,y\n1,0\n,1\n");
  CHECK(CodeOf([&] { LoadCsv(path, {"y", {}, true}); }) == ErrorCode::kUnparseableCell);

  WriteText(path, "a,y\n1,0\n2,0\n");
  CHECK(CodeOf([&] { LoadCsv(path, {"y", {}, true}); }) == ErrorCode::kSingleClass);
}

TEST_CASE("a two-level categorical column becomes two binary features") {
  const auto path = TempPath("cat.csv");
  WriteText(path, "color,size,y\nred,1,a\nblue,3,b\nred,2,a\n");
  const Dataset d = LoadCsv(path, {"y", {"color"}, true});
  REQUIRE(d.num_features() == 3);
  CHECK(d.feature_names[0] == "color=blue");
  CHECK(d.feature_names[1] == "color=red");
  CHECK(d.feature_names[2] == "size");
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(0, 1) == 1.0);
  CHECK(d.at(1, 0) == 1.0);
  CHECK(d.at(2, 2) == doctest::Approx(0.5));
  CHECK(d.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("integer labels are densified in numeric order") {
  const auto path = TempPath("labels.csv");
  WriteText(path, "a,y\n1,10\n2,2\n3,10\n4,7\n");
  const Dataset d = LoadCsv(path, {"y", {}, true});
  CHECK(d.num_classes == 3);
  CHECK(d.labels == std::vector<int>{2, 0, 2, 1});
}

TEST_CASE("minmax scaling") {
  CHECK(MinMaxScale(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1});
  CHECK(MinMaxScale(std::vector<double>{5, 5, 5}) == std::vector<double>{0, 0, 0});
  CHECK(MinMaxScale(std::vector<double>{0, 1}) == std::vector<double>{0, 1});
  CHECK(CodeOf([] { MinMaxScale(std::vector<double>{1, std::nan("")}); }) == ErrorCode::kNonFinite);
  CHECK(CodeOf([] {
          MinMaxScale(std::vector<double>{1, std::numeric_limits<double>::infinity()});
        }) == ErrorCode::kNonFinite);
}

TEST_CASE("minmax scaling is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> col(1 + rng.UniformIndex(20));
    for (double& v : col) v = rng.Normal() * 100.0;
    const auto once = MinMaxScale(col);
    CHECK(MinMaxScale(once) == once);
  }
}

TEST_CASE("iris split at 0.8 gives 120 and 30 and is a partition") {
  const Dataset d = LoadCsv(testing::IrisPath(), {"species", {}, true});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [train, test] = TrainTestSplit(d, {seed, 0.8});
    CHECK(train.num_rows() == 120);
    CHECK(test.num_rows() == 30);
  }
  // Tag each row by its index to check the partition law exactly.
  Dataset tagged = d;
  tagged.feature_names.push_back("id");
  tagged.features.clear();
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) tagged.features.push_back(d.at(i, j));
    tagged.features.push_back(static_cast<double>(i));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [a, b] = TrainTestSplit(tagged, {seed, 0.7});
    std::set<int> ids;
    for (std::size_t i = 0; i < a.num_rows(); ++i) ids.insert(static_cast<int>(a.at(i, 4)));
    for (std::size_t i = 0; i < b.num_rows(); ++i) ids.insert(static_cast<int>(b.at(i, 4)));
    CHECK(ids.size() == d.num_rows());
    CHECK(a.num_rows() + b.num_rows() == d.num_rows());
    const auto [a2, b2] = TrainTestSplit(tagged, {seed, 0.7});
    CHECK(a2.features == a.features);
    CHECK(b2.features == b.features);
  }
}

TEST_CASE("degenerate split fractions are rejected") {
  const Dataset d = MakeDataset({{0.0}, {1.0}, {0.5}}, {0, 1, 0}, 2);
  CHECK(CodeOf([&] { TrainTestSplit(d, {1, 1.0}); }) == ErrorCode::kDegenerateSplit);
  CHECK(CodeOf([&] { TrainTestSplit(d, {1, 0.1}); }) == ErrorCode::kDegenerateSplit);
}

TEST_CASE("domain shift split respects the threshold") {
  Rng rng(5);
  Dataset d;
  d.num_classes = 2;
  d.feature_names = {"bmi", "other"};
  for (int i = 0; i < 400; ++i) {
    d.features.push_back(15.0 + 30.0 * rng.Uniform());
    d.features.push_back(rng.Uniform());
    d.labels.push_back(static_cast<int>(rng.UniformIndex(2)));
  }
  const ShiftSplit s = DomainShiftSplit(d, {0, 30.0}, 0.2, 1);
  std::size_t below = 0;
  for (std::size_t i = 0; i < d.num_rows(); ++i) below += d.at(i, 0) < 30.0;
  CHECK(s.train.num_rows() + s.test_id.num_rows() == below);
  CHECK(s.test_ood.num_rows() == d.num_rows() - below);
  CHECK(s.test_id.num_rows() == below / 5);
  for (std::size_t i = 0; i < s.train.num_rows(); ++i) CHECK(s.train.at(i, 0) < 30.0);
  for (std::size_t i = 0; i < s.test_id.num_rows(); ++i) CHECK(s.test_id.at(i, 0) < 30.0);
  for (std::size_t i = 0; i < s.test_ood.num_rows(); ++i) CHECK(s.test_ood.at(i, 0) >= 30.0);

  CHECK(CodeOf([&] { DomainShiftSplit(d, {0, 10.0}, 0.2, 1); }) == ErrorCode::kEmptyPartition);
  CHECK(CodeOf([&] { DomainShiftSplit(d, {0, 99.0}, 0.2, 1); }) == ErrorCode::kEmptyPartition);
}

TEST_CASE("hidden xor") {
  SUBCASE("twenty features and the label law") {
    for (auto kind : {NoiseKind::kBinary, NoiseKind::kReal}) {
      for (std::uint64_t seed : {0u, 1u, 7u}) {
        const Dataset d = GenHiddenXor(1000, 18, kind, seed);
        CHECK(d.num_features() == 20);
        CHECK(d.num_rows() == 1000);
        for (std::size_t i = 0; i < d.num_rows(); ++i) {
          const int a = static_cast<int>(d.at(i, 0)), b = static_cast<int>(d.at(i, 1));
          CHECK(d.labels[i] == (a ^ b));
        }
        CHECK_NOTHROW(d.Validate());
      }
    }
  }
  SUBCASE("four rows cover the four patterns") {
    const Dataset d = GenHiddenXor(4, 0, NoiseKind::kBinary, 3);
    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < 4; ++i) {
      seen.emplace(static_cast<int>(d.at(i, 0)), static_cast<int>(d.at(i, 1)));
    }
    CHECK(seen.size() == 4);
  }
  SUBCASE("determinism") {
    const Dataset a = GenHiddenXor(200, 5, NoiseKind::kReal, 9);
    const Dataset b = GenHiddenXor(200, 5, NoiseKind::kReal, 9);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
  }
  SUBCASE("too few rows") {
    CHECK(CodeOf([] { GenHiddenXor(3, 1, NoiseKind::kBinary, 0); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("csv round trip is exact") {
  for (auto kind : {NoiseKind::kBinary, NoiseKind::kReal}) {
    const Dataset d = GenHiddenXor(100, 4, kind, 2);
    const auto path = TempPath("xor_rt.csv");
    WriteCsv(d, path);
    const Dataset back = LoadCsv(path, {"label", {}, true});
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    CHECK(back.feature_names == d.feature_names);
  }
}

TEST_CASE("validate catches broken invariants") {
  Dataset d = MakeDataset({{0.2}, {0.4}}, {0, 1}, 2);
  CHECK_NOTHROW(d.Validate());
  d.labels[1] = 2;
  CHECK_THROWS_AS(d.Validate(), Error);
  d.labels[1] = 1;
  d.features[0] = 1.5;
  CHECK_THROWS_AS(d.Validate(), Error);
  CHECK_NOTHROW(d.Validate(false));
}

}  // namespace
}  // namespace dtgfn
