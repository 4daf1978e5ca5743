// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point. Exit codes: 0 ok, 1 usage or config, 2 data,
// 3 runtime, 4 acceptance threshold exceeded.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dtgfn/dataset.h"
#include "dtgfn/error.h"
#include "dtgfn/inference.h"
#include "dtgfn/oracle.h"
#include "dtgfn/policy.h"
#include "dtgfn/reward.h"
#include "dtgfn/run_config.h"
#include "dtgfn/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dtgfn {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitThreshold = 4;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
      return kExitUsage;
    case ErrorCode::kMissingFile:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kUnparseableCell:
    case ErrorCode::kSingleClass:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kDegenerateSplit:
    case ErrorCode::kEmptyPartition:
    case ErrorCode::kConfigMismatch:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

// Relative output paths are placed under $DTGFN_OUTPUT_ROOT when it is set.
fs::path ResolveOutput(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("DTGFN_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  }
  return p;
}

// Writes through a temporary so a failed run never leaves a partial file.
void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorCode::kMissingFile, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string SeedDirName(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

// A trained run directory: config.json at the top, one checkpoint per seed.
struct LoadedRun {
  RunConfig config;
  PolicyModel model;
  std::uint64_t seed = 0;
  PreparedData data;
};

LoadedRun LoadRun(const fs::path& run_dir, std::optional<std::uint64_t> seed) {
  LoadedRun run;
  run.config = RunConfig::Load((run_dir / "config.json").string());
  run.seed = seed.value_or(run.config.seeds.front());
  const fs::path ckpt = run_dir / SeedDirName(run.seed) / "checkpoint.json";
  if (!fs::exists(ckpt)) throw Error(ErrorCode::kMissingFile, ckpt.string());
  json meta;
  run.model = PolicyModel::Load(ckpt.string(), &meta);
  const std::string want = run.config.Hash();
  if (meta.value("config_hash", std::string()) != want) {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint was trained under a different config (hash " +
                                                meta.value("config_hash", std::string("?")) +
                                                ", expected " + want + ")");
  }
  run.data = PrepareData(run.config, run.seed);
  return run;
}

std::vector<std::uint64_t> SelectedSeeds(const RunConfig& config,
                                         const std::vector<std::uint64_t>& override_seeds) {
  return override_seeds.empty() ? config.seeds : override_seeds;
}

int CmdTrain(const std::string& config_path, const std::string& out_override,
             const std::vector<std::uint64_t>& seeds_flag) {
  // Everything that can fail on bad input runs before the first write.
  RunConfig config = RunConfig::Load(config_path);
  if (!out_override.empty()) config.output_dir = out_override;
  const auto seeds = SelectedSeeds(config, seeds_flag);
  std::vector<PreparedData> prepared;
  for (std::uint64_t s : seeds) prepared.push_back(PrepareData(config, s));

  const fs::path out = ResolveOutput(config.output_dir);
  fs::create_directories(out);
  json cfg_json = config.ToJson();
  WriteFileAtomic(out / "config.json", cfg_json.dump(2) + "\n");
  const std::string hash = config.Hash();

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::uint64_t s = seeds[i];
    const Dataset& train = prepared[i].train;
    TrainConfig tc = config.train;
    tc.seed = s;
    Trainer trainer(PolicyModel(config.Policy(train, s)), train, config.Reward(train), tc);
    const auto metrics = trainer.Train();
    const fs::path dir = out / SeedDirName(s);
    fs::create_directories(dir);
    WriteFileAtomic(dir / "metrics.csv", MetricsCsv(metrics));
    trainer.model().Save((dir / "checkpoint.json.tmp").string(),
                         {{"config_hash", hash}, {"seed", s}});
    fs::rename(dir / "checkpoint.json.tmp", dir / "checkpoint.json");
    std::printf("seed %llu: %d steps, final loss %.6g, log_z %.6g -> %s\n",
                static_cast<unsigned long long>(s), tc.steps,
                metrics.empty() ? 0.0 : metrics.back().mean_loss, trainer.model().log_z(),
                dir.string().c_str());
  }
  return kExitOk;
}

int CmdEval(const std::string& run_dir_flag, const std::string& mode, int m,
            const std::vector<std::uint64_t>& seeds_flag, bool sample_leaves) {
  const fs::path run_dir = ResolveOutput(run_dir_flag);
  const RunConfig config = RunConfig::Load((run_dir / "config.json").string());
  const auto seeds = SelectedSeeds(config, seeds_flag);
  const int count = m > 0 ? m : config.num_samples;
  const LeafParamMode leaf_mode =
      sample_leaves || config.leaf_params == "sample" ? LeafParamMode::kSample : LeafParamMode::kMean;

  EvalReport total;
  for (std::uint64_t s : seeds) {
    LoadedRun run = LoadRun(run_dir, s);
    const RewardParams reward = config.Reward(run.data.train);
    Rng rng(s);
    const auto trees = SampleTrees(run.model, run.data.train, static_cast<std::size_t>(count), rng);
    Rng leaf_rng(s ^ 0x9e3779b97f4a7c15ULL);
    Ensemble ensemble;
    if (mode == "single") {
      const TreeState best = SelectMapTree(trees, run.data.train, reward);
      ensemble = Ensemble::Build(std::span(&best, 1), run.data.train, reward, leaf_mode, leaf_rng);
    } else {
      ensemble = Ensemble::Build(trees, run.data.train, reward, leaf_mode, leaf_rng);
    }
    EvalReport r = Evaluate(ensemble, run.data.test);
    total.per_seed.push_back(r);
  }
  for (const auto& r : total.per_seed) {
    total.accuracy += r.accuracy / total.per_seed.size();
    total.f1 += r.f1 / total.per_seed.size();
    total.model_size += r.model_size / total.per_seed.size();
  }
  json report = total.ToJson();
  report["mode"] = mode;
  report["num_samples"] = count;
  report["seeds"] = seeds;
  report["config_hash"] = config.Hash();
  WriteFileAtomic(run_dir / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

int CmdSample(const std::string& run_dir_flag, int m, std::optional<std::uint64_t> seed,
              const std::string& ensemble_out, const std::string& predictions_out) {
  const fs::path run_dir = ResolveOutput(run_dir_flag);
  LoadedRun run = LoadRun(run_dir, seed);
  const RewardParams reward = run.config.Reward(run.data.train);
  const int count = m > 0 ? m : run.config.num_samples;
  Rng rng(run.seed);
  const auto trees = SampleTrees(run.model, run.data.train, static_cast<std::size_t>(count), rng);
  Rng leaf_rng(run.seed ^ 0x9e3779b97f4a7c15ULL);
  const Ensemble ensemble =
      Ensemble::Build(trees, run.data.train, reward,
                      run.config.leaf_params == "sample" ? LeafParamMode::kSample
                                                         : LeafParamMode::kMean,
                      leaf_rng);
  const fs::path dir = run_dir / SeedDirName(run.seed);
  const fs::path ens_path = ensemble_out.empty() ? dir / "ensemble.json" : fs::path(ensemble_out);
  WriteFileAtomic(ens_path, ensemble.ToJson().dump() + "\n");

  std::string csv = "row_id,predicted_class";
  for (int c = 0; c < ensemble.num_classes(); ++c) csv += ",p_" + std::to_string(c);
  csv += "\n";
  char buf[64];
  for (std::size_t i = 0; i < run.data.test.num_rows(); ++i) {
    const Prediction p = ensemble.Predict(run.data.test.row(i));
    csv += std::to_string(i) + "," + std::to_string(p.label);
    for (double v : p.probabilities) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      csv += buf;
    }
    csv += "\n";
  }
  const fs::path pred_path =
      predictions_out.empty() ? dir / "predictions.csv" : fs::path(predictions_out);
  WriteFileAtomic(pred_path, csv);
  std::printf("%zu trees -> %s\n%zu test rows -> %s\n", ensemble.size(), ens_path.string().c_str(),
              run.data.test.num_rows(), pred_path.string().c_str());
  return kExitOk;
}

int CmdCountSpace(int p, int d) {
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  const auto per_depth = CountTreesPerDepth(p, d);
  BigInt cumulative = 0;
  std::printf("depth,exact,cumulative,cumulative_sci\n");
  for (int k = 0; k < d; ++k) {
    cumulative += per_depth[k];
    std::printf("%d,%s,%s,%s\n", k + 1, per_depth[k].str().c_str(), cumulative.str().c_str(),
                ScientificTruncated(cumulative).c_str());
  }
  return kExitOk;
}

int CmdOracleCheck(const std::string& config_path, std::optional<std::size_t> cap_flag,
                   const std::string& report_out) {
  RunConfig config = RunConfig::Load(config_path);
  const std::size_t cap = cap_flag.value_or(config.enumeration_cap);
  const Dataset data = LoadDataset(config);
  const RewardParams reward = config.Reward(data);
  // Enumerate first: an oversized instance fails before any training.
  const ExactPosterior exact = ComputeExactPosterior(
      EnumerateTrees(data, config.max_depth, config.num_thresholds, cap), data, reward);

  const std::uint64_t seed = config.seeds.front();
  TrainConfig tc = config.train;
  tc.seed = seed;
  Trainer trainer(PolicyModel(config.Policy(data, seed)), data, reward, tc);
  trainer.Train();
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);
  const Divergence div = SamplerDivergence(trainer.model(), data, exact,
                                           static_cast<std::size_t>(config.oracle_samples), rng);
  const bool pass =
      div.tv_distance <= config.oracle_max_tv && div.log_z_gap <= config.oracle_max_log_z_gap;
  json report = {{"num_trees", exact.trees.size()},
                 {"log_partition", exact.log_partition},
                 {"log_z", trainer.model().log_z()},
                 {"log_z_gap", div.log_z_gap},
                 {"tv_distance", div.tv_distance},
                 {"samples", config.oracle_samples},
                 {"steps", tc.steps},
                 {"max_tv", config.oracle_max_tv},
                 {"max_log_z_gap", config.oracle_max_log_z_gap},
                 {"pass", pass},
                 {"config_hash", config.Hash()},
                 {"posterior", exact.ToJson(5)}};
  const std::string text = report.dump(2) + "\n";
  if (!report_out.empty()) WriteFileAtomic(ResolveOutput(report_out), text);
  std::cout << text;
  return pass ? kExitOk : kExitThreshold;
}

int CmdXor(std::size_t n, std::size_t noise, const std::string& kind, std::uint64_t seed,
           const std::string& out) {
  if (kind != "binary" && kind != "real") {
    throw Error(ErrorCode::kInvalidArgument, "noise kind must be binary or real");
  }
  const Dataset data =
      GenHiddenXor(n, noise, kind == "real" ? NoiseKind::kReal : NoiseKind::kBinary, seed);
  const fs::path path = ResolveOutput(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  WriteCsv(data, path.string());
  std::printf("%zu rows, %zu features -> %s\n", data.num_rows(), data.num_features(),
              path.string().c_str());
  return kExitOk;
}

int CmdShiftSplit(const std::string& csv, const std::string& label, const std::string& feature,
                  double threshold, double id_fraction, std::uint64_t seed) {
  // Scaling is fit on the raw feature so the threshold is in data units.
  Dataset data = LoadCsv(csv, {label, {}, false});
  std::size_t column = data.feature_names.size();
  for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
    if (data.feature_names[j] == feature) column = j;
  }
  if (column == data.feature_names.size()) throw Error(ErrorCode::kMissingColumn, feature);
  const ShiftSplit split = DomainShiftSplit(data, {column, threshold}, id_fraction, seed);
  json j = {{"train", split.train.num_rows()},
            {"test_id", split.test_id.num_rows()},
            {"test_ood", split.test_ood.num_rows()}};
  std::cout << j.dump() << "\n";
  return kExitOk;
}

}  // namespace
}  // namespace dtgfn

int main(int argc, char** argv) {
  using namespace dtgfn;
  CLI::App app{"Bayesian decision-tree posterior sampling with trajectory-balance training"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir, mode = "ensemble", kind = "binary", xor_out;
  std::string ensemble_out, predictions_out, report_out, csv, label = "label", feature;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> one_seed;
  std::optional<std::size_t> cap;
  int m = 0, p = 10, d = 4;
  std::size_t n = 1000, noise = 18;
  double threshold = 0.0, id_fraction = 0.2;
  bool sample_leaves = false;

  auto* train = app.add_subcommand("train", "Train one policy per seed; writes config, checkpoints, metrics");
  train->add_option("-c,--config", config_path, "Run config JSON")->required();
  train->add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");
  train->add_option("--seed", seeds, "Seeds to run (default: config seeds)");

  auto* eval = app.add_subcommand("eval", "Evaluate trained runs on their test splits");
  eval->add_option("-r,--run", run_dir, "Run directory written by train")->required();
  eval->add_option("--mode", mode, "single (MAP tree) or ensemble")
      ->check(CLI::IsMember({"single", "ensemble"}));
  eval->add_option("-m,--samples", m, "Trees to sample (default: num_samples)");
  eval->add_option("--seed", seeds, "Seeds to evaluate (default: config seeds)");
  eval->add_flag("--sample-leaves", sample_leaves, "Draw leaf parameters instead of posterior means");

  auto* sample = app.add_subcommand("sample", "Sample an ensemble and predict the test split");
  sample->add_option("-r,--run", run_dir, "Run directory written by train")->required();
  sample->add_option("-m,--samples", m, "Trees to sample (default: num_samples)");
  sample->add_option("--seed", one_seed, "Which trained seed to use (default: first)");
  sample->add_option("--ensemble-out", ensemble_out, "Ensemble JSON path");
  sample->add_option("--predictions-out", predictions_out, "Predictions CSV path");

  auto* count = app.add_subcommand("count-space", "Exact number of trees up to a depth");
  count->add_option("-p,--features", p, "Number of features")->required();
  count->add_option("-d,--depth", d, "Maximum depth")->required();

  auto* oracle = app.add_subcommand("oracle-check", "Train on an enumerable instance and compare to the exact posterior");
  oracle->add_option("-c,--config", config_path, "Run config JSON")->required();
  oracle->add_option("--cap", cap, "Enumeration cap (default: config enumeration_cap)");
  oracle->add_option("--report", report_out, "Also write the report here");

  auto* xor_cmd = app.add_subcommand("xor", "Write a hidden-XOR dataset as CSV");
  xor_cmd->add_option("-n,--rows", n, "Number of rows");
  xor_cmd->add_option("--noise", noise, "Number of noise features");
  xor_cmd->add_option("--kind", kind, "binary or real noise")->check(CLI::IsMember({"binary", "real"}));
  xor_cmd->add_option("--seed", seed, "Generator seed");
  xor_cmd->add_option("-o,--out", xor_out, "Output CSV")->required();

  auto* shift = app.add_subcommand("shift-split", "Sizes of a threshold-based domain-shift split");
  shift->add_option("--csv", csv, "Input CSV")->required();
  shift->add_option("--label", label, "Label column");
  shift->add_option("--feature", feature, "Shift feature")->required();
  shift->add_option("--threshold", threshold, "Rows below go to training")->required();
  shift->add_option("--id-fraction", id_fraction, "In-distribution test fraction");
  shift->add_option("--seed", seed, "Shuffle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return CmdTrain(config_path, out_dir, seeds);
    if (*eval) return CmdEval(run_dir, mode, m, seeds, sample_leaves);
    if (*sample) return CmdSample(run_dir, m, one_seed, ensemble_out, predictions_out);
    if (*count) return CmdCountSpace(p, d);
    if (*oracle) return CmdOracleCheck(config_path, cap, report_out);
    if (*xor_cmd) return CmdXor(n, noise, kind, seed, xor_out);
    if (*shift) return CmdShiftSplit(csv, label, feature, threshold, id_fraction, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
