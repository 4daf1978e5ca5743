// Copyright 2026 The dtgfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "dtgfn/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dtgfn/error.h"
#include "dtgfn/random.h"

namespace dtgfn {
namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) {
      cells.push_back(Trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(Trim(cell));
  return cells;
}

std::optional<double> ParseDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<long long> ParseInteger(const std::string& s) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::size_t> Permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.UniformIndex(i)]);
  }
  return perm;
}

}  // namespace

std::vector<std::int64_t> Dataset::ClassCounts() const {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (int y : labels) ++counts[y];
  return counts;
}

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.provenance = provenance;
  const std::size_t d = num_features();
  out.features.reserve(rows.size() * d);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto x = row(r);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[r]);
  }
  return out;
}

void Dataset::Validate(bool require_unit_range) const {
  if (num_rows() == 0) throw Error(ErrorCode::kEmptyDataset, "no rows");
  if (num_features() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no feature columns");
  }
  if (num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  }
  if (features.size() != num_rows() * num_features()) {
    throw Error(ErrorCode::kInvalidArgument, "feature matrix shape mismatch");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(y) + " outside [0, C)");
    }
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "feature value");
    if (require_unit_range && (v < 0.0 || v > 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "feature value outside [0,1]");
    }
  }
}

std::vector<double> MinMaxScale(std::span<const double> column) {
  if (column.empty()) throw Error(ErrorCode::kInvalidArgument, "empty column");
  double lo = column[0], hi = column[0];
  for (double v : column) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "cannot scale");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(column.size(), 0.0);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < column.size(); ++i) {
      out[i] = (column[i] - lo) / range;
    }
  }
  return out;
}

MinMaxScaler MinMaxScaler::Fit(const Dataset& data) {
  MinMaxScaler s;
  const std::size_t d = data.num_features();
  s.min_.assign(d, 0.0);
  s.max_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = data.at(0, j), hi = lo;
    for (std::size_t i = 1; i < data.num_rows(); ++i) {
      lo = std::min(lo, data.at(i, j));
      hi = std::max(hi, data.at(i, j));
    }
    s.min_[j] = lo;
    s.max_[j] = hi;
  }
  return s;
}

Dataset MinMaxScaler::Transform(const Dataset& data) const {
  if (data.num_features() != min_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scaler width mismatch");
  }
  Dataset out = data;
  const std::size_t d = data.num_features();
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double& v = out.features[i * d + j];
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "cannot scale");
      const double range = max_[j] - min_[j];
      v = range > 0.0 ? std::clamp((v - min_[j]) / range, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

Dataset LoadCsv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyDataset, path);
  const std::vector<std::string> header = SplitLine(line);

  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::kMissingColumn, name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_of(options.label_column);
  std::set<std::size_t> categorical;
  for (const auto& name : options.categorical_columns) {
    categorical.insert(column_of(name));
  }

  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto row = SplitLine(line);
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kUnparseableCell,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw Error(ErrorCode::kEmptyDataset, path);
  const std::size_t n = cells.size();

  // Build output columns in header order, one-hot expanding in place.
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    if (categorical.count(c)) {
      std::set<std::string> levels;
      for (const auto& row : cells) {
        if (row[c].empty()) {
          throw Error(ErrorCode::kUnparseableCell, "missing value in " + header[c]);
        }
        levels.insert(row[c]);
      }
      for (const auto& level : levels) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = cells[i][c] == level ? 1.0 : 0.0;
        names.push_back(header[c] + "=" + level);
        columns.push_back(std::move(col));
      }
      continue;
    }
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = ParseDouble(cells[i][c]);
      if (!v) {
        throw Error(ErrorCode::kUnparseableCell,
                    "row " + std::to_string(i + 1) + ", column " + header[c] +
                        ": '" + cells[i][c] + "'");
      }
      if (!std::isfinite(*v)) throw Error(ErrorCode::kNonFinite, header[c]);
      col[i] = *v;
    }
    if (options.scale) col = MinMaxScale(col);
    names.push_back(header[c]);
    columns.push_back(std::move(col));
  }
  if (columns.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no feature columns besides the label");
  }

  // Dense label indices.
  std::vector<std::string> raw_labels(n);
  bool all_integer = true;
  for (std::size_t i = 0; i < n; ++i) {
    raw_labels[i] = cells[i][label_col];
    if (raw_labels[i].empty()) {
      throw Error(ErrorCode::kUnparseableCell, "missing label on row " + std::to_string(i + 1));
    }
    all_integer = all_integer && ParseInteger(raw_labels[i]).has_value();
  }
  std::vector<std::string> levels(raw_labels);
  if (all_integer) {
    std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
      return *ParseInteger(a) < *ParseInteger(b);
    });
    levels.erase(std::unique(levels.begin(), levels.end(),
                             [](const auto& a, const auto& b) {
                               return *ParseInteger(a) == *ParseInteger(b);
                             }),
                 levels.end());
  } else {
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  }
  if (levels.size() < 2) {
    throw Error(ErrorCode::kSingleClass, "label column " + options.label_column);
  }

  Dataset data;
  data.num_classes = static_cast<int>(levels.size());
  data.feature_names = std::move(names);
  data.provenance = "csv:" + path;
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = 0;
    if (all_integer) {
      const long long v = *ParseInteger(raw_labels[i]);
      while (*ParseInteger(levels[idx]) != v) ++idx;
    } else {
      idx = std::lower_bound(levels.begin(), levels.end(), raw_labels[i]) - levels.begin();
    }
    data.labels[i] = static_cast<int>(idx);
  }
  const std::size_t d = columns.size();
  data.features.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.features[i * d + j] = columns[j][i];
  }
  return data;
}

void WriteCsv(const Dataset& data, const std::string& path,
              const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path);
  for (const auto& name : data.feature_names) out << name << ',';
  out << label_column << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    for (double v : data.row(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << data.labels[i] << '\n';
  }
}

std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& data,
                                           const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::kDegenerateSplit, "train_fraction must be in (0,1)");
  }
  const std::size_t n = data.num_rows();
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * spec.train_fraction));
  if (n_train == 0 || n_train == n) {
    throw Error(ErrorCode::kDegenerateSplit,
                "split of " + std::to_string(n) + " rows leaves an empty side");
  }
  const auto perm = Permutation(n, spec.seed);
  std::span<const std::size_t> all(perm);
  return {data.Subset(all.first(n_train)), data.Subset(all.subspan(n_train))};
}

ShiftSplit DomainShiftSplit(const Dataset& data, const ShiftSpec& shift,
                            double id_test_fraction, std::uint64_t seed) {
  if (shift.feature >= data.num_features()) {
    throw Error(ErrorCode::kInvalidArgument, "shift feature out of range");
  }
  if (!(id_test_fraction > 0.0 && id_test_fraction < 1.0)) {
    throw Error(ErrorCode::kDegenerateSplit, "id_test_fraction must be in (0,1)");
  }
  std::vector<std::size_t> below, above;
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    (data.at(i, shift.feature) < shift.threshold ? below : above).push_back(i);
  }
  if (below.empty() || above.empty()) {
    throw Error(ErrorCode::kEmptyPartition,
                "threshold leaves no rows on one side of the shift");
  }
  const auto perm = Permutation(below.size(), seed);
  const auto n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(below.size()) * id_test_fraction));
  if (n_test == 0 || n_test == below.size()) {
    throw Error(ErrorCode::kDegenerateSplit, "in-distribution split is empty");
  }
  std::vector<std::size_t> train, test_id;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    (k < below.size() - n_test ? train : test_id).push_back(below[perm[k]]);
  }
  return {data.Subset(train), data.Subset(test_id), data.Subset(above)};
}

Dataset GenHiddenXor(std::size_t n, std::size_t num_noise, NoiseKind kind,
                     std::uint64_t seed) {
  if (n < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "hidden XOR needs n >= 4 to cover all input patterns");
  }
  Rng rng(seed);
  const std::size_t d = 2 + num_noise;
  std::vector<double> x(n * d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t pattern = i < 4 ? i : rng.UniformIndex(4);
    const int a = static_cast<int>(pattern & 1), b = static_cast<int>(pattern >> 1);
    x[i * d] = a;
    x[i * d + 1] = b;
    y[i] = a ^ b;
    for (std::size_t j = 2; j < d; ++j) {
      x[i * d + j] = kind == NoiseKind::kBinary ? static_cast<double>(rng.UniformIndex(2))
                                                : rng.Uniform();
    }
  }
  // Scale noise so the output is a fixed point of min-max scaling.
  for (std::size_t j = 2; j < d; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = x[i * d + j];
    col = MinMaxScale(col);
    for (std::size_t i = 0; i < n; ++i) x[i * d + j] = col[i];
  }

  Dataset data;
  data.num_classes = 2;
  data.feature_names = {"xor_a", "xor_b"};
  for (std::size_t j = 0; j < num_noise; ++j) {
    data.feature_names.push_back("noise_" + std::to_string(j));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "hidden_xor(n=%zu,noise=%zu,%s,seed=%llu)", n,
                num_noise, kind == NoiseKind::kBinary ? "binary" : "real",
                static_cast<unsigned long long>(seed));
  data.provenance = buf;
  const auto perm = Permutation(n, seed ^ 0x5bd1e995ULL);
  data.features.resize(n * d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.begin() + perm[i] * d, d, data.features.begin() + i * d);
    data.labels[i] = y[perm[i]];
  }
  return data;
}

}  // namespace dtgfn
