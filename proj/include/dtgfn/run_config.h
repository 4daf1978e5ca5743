// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtgfn/dataset.h"
#include "dtgfn/policy.h"
#include "dtgfn/reward.h"
#include "dtgfn/training.h"

namespace dtgfn {

struct DatasetSpec {
  std::string source = "csv";  // "csv" or "xor"
  std::string csv;
  std::string label_column = "label";
  std::vector<std::string> categorical_columns;
  double train_fraction = 0.8;
  std::size_t xor_n = 1000;
  std::size_t xor_noise = 18;
  std::string xor_noise_kind = "binary";
  std::uint64_t xor_seed = 0;
};

// Everything a run needs, serialized as one JSON file. Unknown keys are
// rejected at every level.
struct RunConfig {
  DatasetSpec dataset;
  int max_depth = 5;
  int num_thresholds = 99;
  int num_samples = 1000;
  int hidden_units = 256;
  int encoder_layers = 3;
  int head_hidden_layers = 1;
  TrainConfig train;
  std::optional<std::vector<double>> alpha;  // default 0.1 per class
  std::optional<double> beta;                // overrides structure_prior
  // "table": beta = log 4 + log d; "coding": log 4 + log d + log t.
  std::string structure_prior = "table";
  double temperature = 1.0;
  std::string leaf_params = "mean";          // "mean" or "sample"
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir = "runs/default";
  std::size_t enumeration_cap = 1'000'000;
  int oracle_samples = 10000;
  double oracle_max_tv = 0.15;
  double oracle_max_log_z_gap = 0.1;

  nlohmann::json ToJson() const;
  // Throws kInvalidArgument on unknown keys or bad values.
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig Load(const std::string& path);
  // Digest of the canonical JSON form.
  std::string Hash() const;

  RewardParams Reward(const Dataset& data) const;
  PolicyConfig Policy(const Dataset& data, std::uint64_t init_seed) const;
};

struct PreparedData {
  Dataset train;
  Dataset test;
};

// Loads (or generates) the full, scaled dataset.
Dataset LoadDataset(const RunConfig& config);

// LoadDataset followed by the seeded train/test split.
PreparedData PrepareData(const RunConfig& config, std::uint64_t split_seed);

std::string HexDigest(const std::string& bytes);

}  // namespace dtgfn
