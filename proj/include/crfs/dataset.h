// Copyright 2026 The CR-FS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRFS_DATASET_H_
#define CRFS_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace crfs {

// One entry in the feature-removal audit trail.
struct FeatureRemoval {
  std::string feature;
  std::string reason;  // "missing", "constant", "collinear", "unimportant", ...
  double value = 0.0;  // missing fraction, |rho|, importance, ...

  friend bool operator==(const FeatureRemoval&, const FeatureRemoval&) = default;
};

// Dense record x feature matrix with binary (+1/-1) labels.
//
// Values are stored row-major. Cells that were empty in the source are marked
// in the missing mask; until imputed they hold NaN. A Dataset is immutable
// once built: every transformation returns a new instance.
class Dataset {
 public:
  Dataset(std::vector<double> values, std::size_t rows,
          std::vector<std::string> feature_names, std::vector<int> labels,
          std::vector<std::uint8_t> missing_mask = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  bool missing(std::size_t r, std::size_t c) const {
    return missing_[r * cols() + c] != 0;
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }
  std::vector<double> column(std::size_t c) const;
  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> missing_mask() const { return missing_; }

  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t r) const { return labels_[r]; }

  // Returns the column index of `name`; throws if absent.
  std::size_t FeatureIndex(const std::string& name) const;
  bool HasFeature(const std::string& name) const;

  const std::vector<FeatureRemoval>& audit() const { return audit_; }
  const std::vector<std::string>& provenance() const { return provenance_; }

  // Column projection, in the order given.
  Dataset SelectFeatures(std::span<const std::size_t> indices) const;
  Dataset SelectFeatures(const std::vector<std::string>& names) const;
  // Row subset, in the order given (duplicates allowed).
  Dataset SelectRecords(std::span<const std::size_t> indices) const;
  // The neighbouring dataset D^{-j}.
  Dataset WithoutRecord(std::size_t j) const;

  Dataset WithAudit(std::vector<FeatureRemoval> audit) const;
  Dataset WithProvenance(std::string step) const;

  // Class counts as {#label==-1, #label==+1}.
  std::pair<std::size_t, std::size_t> ClassCounts() const;

 private:
  std::vector<double> values_;
  std::size_t rows_;
  std::vector<std::string> names_;
  std::vector<int> labels_;
  std::vector<std::uint8_t> missing_;
  std::vector<FeatureRemoval> audit_;
  std::vector<std::string> provenance_;
};

struct CsvOptions {
  std::string label_column;
  // Columns whose string values are integer-encoded by sorted category order.
  std::set<std::string> categorical_columns;
  // Columns dropped on load (identifiers and the like).
  std::set<std::string> ignore_columns;
  // Label value mapped to +1. Empty: the lexicographically larger of the two
  // observed label values.
  std::string positive_label;
};

// Reads a comma-separated file with a header row. Empty cells are missing.
Dataset LoadCsv(const std::string& path, const CsvOptions& options);
Dataset LoadCsv(const std::string& path, const std::string& label_column);

struct PreprocessConfig {
  double missing_threshold = 0.2;  // T_mv
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
};

// Removes features whose missing fraction exceeds T_mv and features with fewer
// than two distinct observed values, then imputes surviving missing cells with
// the feature median. Removals are appended to the audit trail.
Dataset DropMissingAndConstant(const Dataset& ds, const PreprocessConfig& cfg);

// Per-feature affine map of the observed range onto [-1, 1].
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max)
      : min_(std::move(min)), max_(std::move(max)) {}

  static MinMaxScaler Fit(const Dataset& ds);
  Dataset Transform(const Dataset& ds) const;
  Dataset Inverse(const Dataset& ds) const;

  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

// Fits a MinMaxScaler and applies it. When `scaler` is non-null the fitted
// parameters are stored there for the inverse transform.
Dataset Normalize(const Dataset& ds, MinMaxScaler* scaler = nullptr);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Stratified, seeded split. Each class contributes round(ratio * count)
// records to the training side, clamped so both sides keep at least one.
Split TrainTestSplit(const Dataset& ds, const PreprocessConfig& cfg);

// Features then the +-1 label; missing cells are left empty. Names are
// written unquoted.
void WriteCsv(const Dataset& ds, std::ostream& out, const std::string& label_column = "label");

nlohmann::json AuditToJson(const std::vector<FeatureRemoval>& audit);

}  // namespace crfs

#endif  // CRFS_DATASET_H_
