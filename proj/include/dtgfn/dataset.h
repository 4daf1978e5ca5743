// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace dtgfn {

// Tabular classification data. Features are stored row-major.
struct Dataset {
  std::vector<double> features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  std::string provenance;

  std::size_t num_rows() const { return labels.size(); }
  std::size_t num_features() const { return feature_names.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * num_features(), num_features()};
  }
  double at(std::size_t i, std::size_t j) const {
    return features[i * num_features() + j];
  }

  // Class histogram over all rows.
  std::vector<std::int64_t> ClassCounts() const;

  // Rows in the given order; shares num_classes and names.
  Dataset Subset(std::span<const std::size_t> rows) const;

  // Throws kInvalidArgument when a structural invariant is broken. With
  // require_unit_range, every feature must also lie in [0,1].
  void Validate(bool require_unit_range = true) const;
};

struct ShiftSpec {
  std::size_t feature = 0;
  double threshold = 0.0;
};

struct SplitSpec {
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
};

// Per-column affine map to [0,1] fitted on one dataset and applied to others.
// Values outside the fitted range are clamped, which does not change routing
// against interior thresholds.
class MinMaxScaler {
 public:
  static MinMaxScaler Fit(const Dataset& data);
  Dataset Transform(const Dataset& data) const;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

// (x - min) / (max - min); constant columns map to zeros. Throws kNonFinite
// on NaN/Inf and kInvalidArgument on an empty column.
std::vector<double> MinMaxScale(std::span<const double> column);

struct CsvOptions {
  std::string label_column;
  std::vector<std::string> categorical_columns;
  bool scale = true;
};

// Reads a headered, comma-delimited file. Categorical columns are one-hot
// expanded (levels sorted), numeric columns min-max scaled, labels mapped to
// dense indices (numeric order when every label is an integer).
Dataset LoadCsv(const std::string& path, const CsvOptions& options);

// Writes features and the label column in the format LoadCsv reads, with
// enough digits for an exact round trip.
void WriteCsv(const Dataset& data, const std::string& path,
              const std::string& label_column = "label");

// Seeded Fisher-Yates shuffle; the first floor(n * train_fraction) rows of
// the permutation form the train set.
std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& data,
                                           const SplitSpec& spec);

struct ShiftSplit {
  Dataset train;
  Dataset test_id;
  Dataset test_ood;
};

// Rows with feature < threshold are shuffled and split into train and an
// in-distribution test set of floor(n_below * id_test_fraction) rows; rows
// with feature >= threshold form the out-of-distribution test set.
ShiftSplit DomainShiftSplit(const Dataset& data, const ShiftSpec& shift,
                            double id_test_fraction, std::uint64_t seed);

enum class NoiseKind { kBinary, kReal };

// Hidden XOR task: columns 0 and 1 are fair binary coins and the label is
// their XOR; the remaining num_noise columns are label-independent noise.
// The first four rows (before the final shuffle) cover every XOR pattern.
Dataset GenHiddenXor(std::size_t n, std::size_t num_noise, NoiseKind kind,
                     std::uint64_t seed);

}  // namespace dtgfn
