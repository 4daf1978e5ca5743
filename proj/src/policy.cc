// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/policy.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dtgfn/error.h"

namespace dtgfn {
namespace {

constexpr char kCheckpointFormat[] = "dtgfn-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string Fnv1aHex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<int> Sizes(int in, int hidden, int layers, int out) {
  std::vector<int> s{in};
  for (int i = 0; i < layers; ++i) s.push_back(hidden);
  if (out > 0) s.push_back(out);
  return s;
}

}  // namespace

nlohmann::json PolicyConfig::ToJson() const {
  return {{"num_features", num_features},     {"num_thresholds", num_thresholds},
          {"max_depth", max_depth},           {"hidden_units", hidden_units},
          {"encoder_layers", encoder_layers}, {"head_hidden_layers", head_hidden_layers},
          {"one_hot_cutoff", one_hot_cutoff}, {"init_seed", init_seed}};
}

PolicyConfig PolicyConfig::FromJson(const nlohmann::json& j) {
  PolicyConfig c;
  c.num_features = j.at("num_features").get<int>();
  c.num_thresholds = j.at("num_thresholds").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.hidden_units = j.at("hidden_units").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.head_hidden_layers = j.at("head_hidden_layers").get<int>();
  c.one_hot_cutoff = j.at("one_hot_cutoff").get<int>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

std::string PolicyConfig::Hash() const {
  nlohmann::json j = ToJson();
  j.erase("init_seed");
  return Fnv1aHex(j.dump());
}

double ActionDistribution::LogProb(const Action& action) const {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (action.is_terminate()) return terminate_log_prob;
  for (std::size_t k = 0; k < frontier.size(); ++k) {
    if (frontier[k] != action.slot) continue;
    if (action.rule.feature < 0 || action.rule.feature >= num_features ||
        action.rule.threshold_index < 0 || action.rule.threshold_index >= num_thresholds) {
      return neg_inf;
    }
    return split_log_probs[(k * num_features + action.rule.feature) * num_thresholds +
                           action.rule.threshold_index];
  }
  return neg_inf;
}

double LogSumExp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

PolicyModel::PolicyModel(const PolicyConfig& config)
    : config_(config),
      layout_(EncodingLayout::For(config.num_features, config.max_depth, config.one_hot_cutoff)) {
  if (config.num_features < 1 || config.num_thresholds < 1 || config.max_depth < 1 ||
      config.hidden_units < 1 || config.encoder_layers < 1 || config.head_hidden_layers < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid policy config");
  }
  Rng rng(config.init_seed);
  const int h = config.hidden_units;
  encoder_ = Mlp(Sizes(layout_.width(), h, config.encoder_layers, 0), true, false, rng);
  term_head_ = Mlp(Sizes(h, h, config.head_hidden_layers, 1), false, true, rng);
  rule_head_ = Mlp(Sizes(h, h, config.head_hidden_layers,
                         config.num_features * config.num_thresholds),
                   false, true, rng);
}

PolicyModel PolicyModel::ZerosLike() const {
  PolicyModel z = *this;
  z.encoder_ = encoder_.ZerosLike();
  z.term_head_ = term_head_.ZerosLike();
  z.rule_head_ = rule_head_.ZerosLike();
  z.log_z_.setZero();
  return z;
}

std::vector<Matrix*> PolicyModel::Parameters() {
  std::vector<Matrix*> out;
  for (Mlp* m : {&encoder_, &term_head_, &rule_head_}) {
    for (Matrix* p : m->Parameters()) out.push_back(p);
  }
  out.push_back(&log_z_);
  return out;
}

std::vector<const Matrix*> PolicyModel::Parameters() const {
  std::vector<const Matrix*> out;
  for (const Mlp* m : {&encoder_, &term_head_, &rule_head_}) {
    for (const Matrix* p : m->Parameters()) out.push_back(p);
  }
  out.push_back(&log_z_);
  return out;
}

std::vector<std::string> PolicyModel::ParameterNames() const {
  std::vector<std::string> names;
  auto add = [&names](const std::string& prefix, const Mlp& m) {
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      names.push_back(prefix + "." + std::to_string(l) + ".weight");
      names.push_back(prefix + "." + std::to_string(l) + ".bias");
    }
  };
  add("encoder", encoder_);
  add("term_head", term_head_);
  add("rule_head", rule_head_);
  names.push_back("log_z");
  return names;
}

std::size_t PolicyModel::NumParameters() const {
  std::size_t n = 0;
  for (const auto* p : Parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

ActionDistribution PolicyModel::Forward(const TreeState& state, const ActionMask& mask) const {
  if (state.terminal()) throw Error(ErrorCode::kTerminalState, "forward on a terminal state");
  if (mask.num_features != config_.num_features ||
      mask.num_thresholds != config_.num_thresholds) {
    throw Error(ErrorCode::kInvalidArgument, "mask does not match the policy action space");
  }
  const auto encodings = LeafPathEncoding(state, layout_);
  const auto num_leaves = static_cast<Eigen::Index>(encodings.size());
  Matrix x(num_leaves, layout_.width());
  for (Eigen::Index k = 0; k < num_leaves; ++k) {
    for (int j = 0; j < layout_.width(); ++j) x(k, j) = encodings[k][j];
  }
  const Matrix embeddings = encoder_.Forward(x);
  const Matrix rule_logits = rule_head_.Forward(embeddings);
  const Matrix pooled = embeddings.colwise().mean();
  const double term_logit = term_head_.Forward(pooled)(0, 0);

  const double neg_inf = -std::numeric_limits<double>::infinity();
  const std::size_t per_leaf = mask.rules_per_leaf();
  std::vector<double> logits(1 + encodings.size() * per_leaf, neg_inf);
  logits[0] = term_logit;
  for (std::size_t k = 0; k < encodings.size(); ++k) {
    for (std::size_t r = 0; r < per_leaf; ++r) {
      if (mask.split_valid[k * per_leaf + r]) {
        logits[1 + k * per_leaf + r] = rule_logits(static_cast<Eigen::Index>(k),
                                                   static_cast<Eigen::Index>(r));
      }
    }
  }
  const double lse = LogSumExp(logits);
  ActionDistribution dist;
  dist.frontier = mask.frontier;
  dist.num_features = mask.num_features;
  dist.num_thresholds = mask.num_thresholds;
  dist.terminate_log_prob = logits[0] - lse;
  dist.split_log_probs.resize(logits.size() - 1);
  for (std::size_t i = 1; i < logits.size(); ++i) {
    dist.split_log_probs[i - 1] = std::isfinite(logits[i]) ? logits[i] - lse : neg_inf;
  }
  return dist;
}

nlohmann::json PolicyModel::ToJson() const {
  nlohmann::json tensors = nlohmann::json::array();
  const auto names = ParameterNames();
  const auto params = Parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& m = *params[i];
    std::vector<double> data(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data[r * m.cols() + c] = m(r, c);
    }
    tensors.push_back({{"name", names[i]}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", data}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", config_.ToJson()},
          {"config_hash", config_.Hash()},
          {"log_z", log_z()},
          {"tensors", std::move(tensors)}};
}

PolicyModel PolicyModel::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorCode::kParse, "not a checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::kParse, "unsupported checkpoint version");
    }
    PolicyModel model(PolicyConfig::FromJson(j.at("config")));
    if (j.at("config_hash").get<std::string>() != model.config_.Hash()) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint config hash mismatch");
    }
    const auto names = model.ParameterNames();
    auto params = model.Parameters();
    const auto& tensors = j.at("tensors");
    if (tensors.size() != params.size()) throw Error(ErrorCode::kParse, "tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = tensors[i];
      Matrix& m = *params[i];
      if (t.at("name").get<std::string>() != names[i] || t.at("rows").get<Eigen::Index>() != m.rows() ||
          t.at("cols").get<Eigen::Index>() != m.cols()) {
        throw Error(ErrorCode::kParse, "tensor " + names[i] + " has the wrong shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw Error(ErrorCode::kParse, "tensor " + names[i] + " has the wrong length");
      }
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[r * m.cols() + c];
      }
    }
    if (j.at("log_z").get<double>() != model.log_z()) {
      throw Error(ErrorCode::kParse, "log_z field disagrees with its tensor");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

void PolicyModel::Save(const std::string& path, const nlohmann::json& metadata) const {
  nlohmann::json j = ToJson();
  if (!metadata.is_null()) j["metadata"] = metadata;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path);
  out << j.dump() << '\n';
}

PolicyModel PolicyModel::Load(const std::string& path, nlohmann::json* metadata) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  if (metadata) *metadata = j.value("metadata", nlohmann::json::object());
  return FromJson(j);
}

}  // namespace dtgfn
