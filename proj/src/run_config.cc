// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/run_config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "dtgfn/error.h"

namespace dtgfn {
namespace {

void RejectUnknownKeys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json DatasetToJson(const DatasetSpec& d) {
  return {{"source", d.source},
          {"csv", d.csv},
          {"label_column", d.label_column},
          {"categorical_columns", d.categorical_columns},
          {"train_fraction", d.train_fraction},
          {"xor_n", d.xor_n},
          {"xor_noise", d.xor_noise},
          {"xor_noise_kind", d.xor_noise_kind},
          {"xor_seed", d.xor_seed}};
}

}  // namespace

std::string HexDigest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json j = {{"dataset", DatasetToJson(dataset)},
                      {"max_depth", max_depth},
                      {"num_thresholds", num_thresholds},
                      {"num_samples", num_samples},
                      {"hidden_units", hidden_units},
                      {"encoder_layers", encoder_layers},
                      {"head_hidden_layers", head_hidden_layers},
                      {"train", train.ToJson()},
                      {"temperature", temperature},
                      {"leaf_params", leaf_params},
                      {"structure_prior", structure_prior},
                      {"seeds", seeds},
                      {"output_dir", output_dir},
                      {"enumeration_cap", enumeration_cap},
                      {"oracle_samples", oracle_samples},
                      {"oracle_max_tv", oracle_max_tv},
                      {"oracle_max_log_z_gap", oracle_max_log_z_gap}};
  j["alpha"] = alpha ? nlohmann::json(*alpha) : nlohmann::json(nullptr);
  j["beta"] = beta ? nlohmann::json(*beta) : nlohmann::json(nullptr);
  return j;
}

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  try {
    RejectUnknownKeys(j,
                      {"dataset", "max_depth", "num_thresholds", "num_samples", "hidden_units",
                       "encoder_layers", "head_hidden_layers", "train", "alpha", "beta",
                       "temperature", "leaf_params", "structure_prior", "seeds", "output_dir", "enumeration_cap",
                       "oracle_samples", "oracle_max_tv", "oracle_max_log_z_gap"},
                      "config");
    RunConfig c;
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      RejectUnknownKeys(d,
                        {"source", "csv", "label_column", "categorical_columns", "train_fraction",
                         "xor_n", "xor_noise", "xor_noise_kind", "xor_seed"},
                        "dataset");
      Read(d, "source", c.dataset.source);
      Read(d, "csv", c.dataset.csv);
      Read(d, "label_column", c.dataset.label_column);
      Read(d, "categorical_columns", c.dataset.categorical_columns);
      Read(d, "train_fraction", c.dataset.train_fraction);
      Read(d, "xor_n", c.dataset.xor_n);
      Read(d, "xor_noise", c.dataset.xor_noise);
      Read(d, "xor_noise_kind", c.dataset.xor_noise_kind);
      Read(d, "xor_seed", c.dataset.xor_seed);
    }
    if (j.contains("train")) {
      RejectUnknownKeys(j.at("train"),
                        {"steps", "lr", "lr_log_z", "lr_end_factor", "warm_start_log_z", "batch_forward", "batch_replay",
                         "buffer_capacity", "epsilon_start", "epsilon_end", "adam_beta1",
                         "adam_beta2", "adam_epsilon", "seed"},
                        "train");
      c.train = TrainConfig::FromJson(j.at("train"));
    }
    Read(j, "max_depth", c.max_depth);
    Read(j, "num_thresholds", c.num_thresholds);
    Read(j, "num_samples", c.num_samples);
    Read(j, "hidden_units", c.hidden_units);
    Read(j, "encoder_layers", c.encoder_layers);
    Read(j, "head_hidden_layers", c.head_hidden_layers);
    Read(j, "temperature", c.temperature);
    Read(j, "leaf_params", c.leaf_params);
    Read(j, "structure_prior", c.structure_prior);
    Read(j, "seeds", c.seeds);
    Read(j, "output_dir", c.output_dir);
    Read(j, "enumeration_cap", c.enumeration_cap);
    Read(j, "oracle_samples", c.oracle_samples);
    Read(j, "oracle_max_tv", c.oracle_max_tv);
    Read(j, "oracle_max_log_z_gap", c.oracle_max_log_z_gap);
    if (j.contains("alpha") && !j.at("alpha").is_null()) c.alpha = j.at("alpha").get<std::vector<double>>();
    if (j.contains("beta") && !j.at("beta").is_null()) c.beta = j.at("beta").get<double>();

    if (c.dataset.source != "csv" && c.dataset.source != "xor") {
      throw Error(ErrorCode::kInvalidArgument, "dataset.source must be 'csv' or 'xor'");
    }
    if (c.dataset.xor_noise_kind != "binary" && c.dataset.xor_noise_kind != "real") {
      throw Error(ErrorCode::kInvalidArgument, "dataset.xor_noise_kind must be 'binary' or 'real'");
    }
    if (c.leaf_params != "mean" && c.leaf_params != "sample") {
      throw Error(ErrorCode::kInvalidArgument, "leaf_params must be 'mean' or 'sample'");
    }
    if (c.structure_prior != "table" && c.structure_prior != "coding") {
      throw Error(ErrorCode::kInvalidArgument, "structure_prior must be 'table' or 'coding'");
    }
    if (c.max_depth < 1 || c.num_thresholds < 1 || c.num_samples < 0 || c.hidden_units < 1 ||
        c.encoder_layers < 1 || c.head_hidden_layers < 0) {
      throw Error(ErrorCode::kInvalidArgument, "structural sizes out of range");
    }
    if (c.seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "seeds must be nonempty");
    c.train.Validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  return FromJson(j);
}

std::string RunConfig::Hash() const {
  nlohmann::json j = ToJson();
  // Where outputs go does not change what is computed.
  j.erase("output_dir");
  return HexDigest(j.dump());
}

RewardParams RunConfig::Reward(const Dataset& data) const {
  RewardParams p = RewardParams::Defaults(data.num_classes, static_cast<int>(data.num_features()));
  if (alpha) p.alpha = *alpha;
  if (structure_prior == "coding") {
    p.beta = BetaHeuristic(static_cast<int>(data.num_features()), num_thresholds);
  }
  if (beta) p.beta = *beta;
  p.temperature = temperature;
  p.Validate();
  if (static_cast<int>(p.alpha.size()) != data.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "alpha length must equal class count");
  }
  return p;
}

PolicyConfig RunConfig::Policy(const Dataset& data, std::uint64_t init_seed) const {
  PolicyConfig p;
  p.num_features = static_cast<int>(data.num_features());
  p.num_thresholds = num_thresholds;
  p.max_depth = max_depth;
  p.hidden_units = hidden_units;
  p.encoder_layers = encoder_layers;
  p.head_hidden_layers = head_hidden_layers;
  p.init_seed = init_seed;
  return p;
}

Dataset LoadDataset(const RunConfig& config) {
  Dataset full;
  if (config.dataset.source == "xor") {
    full = GenHiddenXor(config.dataset.xor_n, config.dataset.xor_noise,
                        config.dataset.xor_noise_kind == "real" ? NoiseKind::kReal
                                                                : NoiseKind::kBinary,
                        config.dataset.xor_seed);
  } else {
    full = LoadCsv(config.dataset.csv,
                   {config.dataset.label_column, config.dataset.categorical_columns, true});
  }
  full.Validate();
  return full;
}

PreparedData PrepareData(const RunConfig& config, std::uint64_t split_seed) {
  auto [train, test] = TrainTestSplit(LoadDataset(config), {split_seed, config.dataset.train_fraction});
  return {std::move(train), std::move(test)};
}

}  // namespace dtgfn
