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

#include "crfs/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "crfs/common.h"
#include "crfs/random.h"

namespace crfs {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string Trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool ParseDouble(const std::string& s, double* out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last && std::isfinite(*out);
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Dataset::Dataset(std::vector<double> values, std::size_t rows,
                 std::vector<std::string> feature_names, std::vector<int> labels,
                 std::vector<std::uint8_t> missing_mask)
    : values_(std::move(values)),
      rows_(rows),
      names_(std::move(feature_names)),
      labels_(std::move(labels)),
      missing_(std::move(missing_mask)) {
  if (values_.size() != rows_ * names_.size()) {
    throw Error("Dataset: value count does not match rows x features");
  }
  if (labels_.size() != rows_) throw Error("Dataset: label count does not match rows");
  for (int y : labels_) {
    if (y != 1 && y != -1) throw Error("Dataset: labels must be +1 or -1");
  }
  if (missing_.empty()) missing_.assign(values_.size(), 0);
  if (missing_.size() != values_.size()) {
    throw Error("Dataset: missing mask has the wrong size");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error("Dataset: duplicate feature name '" + n + "'");
  }
}

std::vector<double> Dataset::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

std::size_t Dataset::FeatureIndex(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error("unknown feature '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

bool Dataset::HasFeature(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Dataset Dataset::SelectFeatures(std::span<const std::size_t> indices) const {
  const std::size_t n = indices.size();
  std::vector<double> values(rows_ * n);
  std::vector<std::uint8_t> mask(rows_ * n);
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (indices[k] >= cols()) throw Error("SelectFeatures: index out of range");
    names.push_back(names_[indices[k]]);
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      values[r * n + k] = at(r, indices[k]);
      mask[r * n + k] = missing_[r * cols() + indices[k]];
    }
  }
  Dataset out(std::move(values), rows_, std::move(names), labels_, std::move(mask));
  out.audit_ = audit_;
  out.provenance_ = provenance_;
  return out;
}

Dataset Dataset::SelectFeatures(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(FeatureIndex(n));
  return SelectFeatures(idx);
}

Dataset Dataset::SelectRecords(std::span<const std::size_t> indices) const {
  const std::size_t n = cols();
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::vector<int> labels;
  values.reserve(indices.size() * n);
  mask.reserve(indices.size() * n);
  labels.reserve(indices.size());
  for (std::size_t r : indices) {
    if (r >= rows_) throw Error("SelectRecords: index out of range");
    values.insert(values.end(), values_.begin() + r * n, values_.begin() + (r + 1) * n);
    mask.insert(mask.end(), missing_.begin() + r * n, missing_.begin() + (r + 1) * n);
    labels.push_back(labels_[r]);
  }
  Dataset out(std::move(values), indices.size(), names_, std::move(labels), std::move(mask));
  out.audit_ = audit_;
  out.provenance_ = provenance_;
  return out;
}

Dataset Dataset::WithoutRecord(std::size_t j) const {
  if (j >= rows_) throw Error("WithoutRecord: index out of range");
  std::vector<std::size_t> keep;
  keep.reserve(rows_ - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    if (r != j) keep.push_back(r);
  }
  return SelectRecords(keep);
}

Dataset Dataset::WithAudit(std::vector<FeatureRemoval> audit) const {
  Dataset out = *this;
  out.audit_ = std::move(audit);
  return out;
}

Dataset Dataset::WithProvenance(std::string step) const {
  Dataset out = *this;
  out.provenance_.push_back(std::move(step));
  return out;
}

std::pair<std::size_t, std::size_t> Dataset::ClassCounts() const {
  std::size_t pos = std::count(labels_.begin(), labels_.end(), 1);
  return {rows_ - pos, pos};
}

Dataset LoadCsv(const std::string& path, const std::string& label_column) {
  CsvOptions options;
  options.label_column = label_column;
  return LoadCsv(path, options);
}

Dataset LoadCsv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("CSV file '" + path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = SplitCsvLine(line);
  for (auto& h : header) h = Trim(h);

  auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) {
    throw Error("label column '" + options.label_column + "' not found in '" + path + "'");
  }
  const std::size_t label_col = label_it - header.begin();

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col || options.ignore_columns.count(header[c])) continue;
    if (!seen.insert(header[c]).second) {
      throw Error("duplicate feature name '" + header[c] + "' in '" + path + "'");
    }
    feature_cols.push_back(c);
    names.push_back(header[c]);
  }

  std::vector<std::vector<std::string>> cells;  // raw text, row-major
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> parts = SplitCsvLine(line);
    if (parts.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << header.size() << " cells, got "
          << parts.size();
      throw Error(msg.str());
    }
    std::string label = Trim(parts[label_col]);
    if (label.empty()) {
      throw Error(path + ":" + std::to_string(line_no) + ": missing label");
    }
    raw_labels.push_back(label);
    std::vector<std::string> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) row.push_back(Trim(parts[c]));
    cells.push_back(std::move(row));
  }

  const std::size_t rows = cells.size();
  const std::size_t cols = feature_cols.size();
  std::vector<double> values(rows * cols, kNaN);
  std::vector<std::uint8_t> mask(rows * cols, 0);

  for (std::size_t k = 0; k < cols; ++k) {
    const bool categorical = options.categorical_columns.count(names[k]) > 0;
    std::map<std::string, int> codes;
    if (categorical) {
      for (std::size_t r = 0; r < rows; ++r) {
        if (!cells[r][k].empty()) codes.emplace(cells[r][k], 0);
      }
      int next = 0;
      for (auto& [category, code] : codes) code = next++;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string& text = cells[r][k];
      if (text.empty()) {
        mask[r * cols + k] = 1;
        continue;
      }
      if (categorical) {
        values[r * cols + k] = codes.at(text);
      } else if (!ParseDouble(text, &values[r * cols + k])) {
        std::ostringstream msg;
        msg << path << ": cannot parse '" << text << "' at data row " << (r + 1)
            << ", column '" << names[k] << "'";
        throw Error(msg.str());
      }
    }
  }

  std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() != 2) {
    throw Error("label column '" + options.label_column + "' must have exactly two values, found " +
                std::to_string(distinct.size()));
  }
  std::string positive = options.positive_label.empty() ? *distinct.rbegin()
                                                         : options.positive_label;
  if (!distinct.count(positive)) {
    throw Error("positive label '" + positive + "' does not occur in the data");
  }
  std::vector<int> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) labels[r] = raw_labels[r] == positive ? 1 : -1;

  if (rows < 2 || cols < 1) throw Error("CSV '" + path + "' needs at least 2 records and 1 feature");
  Dataset ds(std::move(values), rows, std::move(names), std::move(labels), std::move(mask));
  return ds.WithProvenance("load_csv:" + path);
}

Dataset DropMissingAndConstant(const Dataset& ds, const PreprocessConfig& cfg) {
  if (!(cfg.missing_threshold >= 0.0 && cfg.missing_threshold <= 1.0)) {
    throw Error("missing threshold T_mv must lie in [0, 1]");
  }
  std::vector<FeatureRemoval> audit = ds.audit();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    std::size_t n_missing = 0;
    std::set<double> distinct;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (ds.missing(r, c)) {
        ++n_missing;
      } else if (distinct.size() < 2) {
        distinct.insert(ds.at(r, c));
      }
    }
    double fraction = static_cast<double>(n_missing) / ds.rows();
    if (fraction > cfg.missing_threshold) {
      audit.push_back({ds.feature_names()[c], "missing", fraction});
    } else if (distinct.size() < 2) {
      audit.push_back({ds.feature_names()[c], "constant", distinct.empty() ? 0.0 : *distinct.begin()});
    } else {
      keep.push_back(c);
    }
  }
  if (keep.empty()) throw Error("every feature was removed by the missing/constant filter");

  Dataset kept = ds.SelectFeatures(keep);
  std::vector<double> values(kept.values().begin(), kept.values().end());
  const std::size_t n = kept.cols();
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> observed;
    for (std::size_t r = 0; r < kept.rows(); ++r) {
      if (!kept.missing(r, c)) observed.push_back(kept.at(r, c));
    }
    if (observed.size() == kept.rows()) continue;
    double median = Median(std::move(observed));
    for (std::size_t r = 0; r < kept.rows(); ++r) {
      if (kept.missing(r, c)) values[r * n + c] = median;
    }
  }
  Dataset out(std::move(values), kept.rows(), kept.feature_names(), kept.labels(),
              std::vector<std::uint8_t>(kept.missing_mask().begin(), kept.missing_mask().end()));
  out = out.WithAudit(std::move(audit));
  for (const auto& step : ds.provenance()) out = out.WithProvenance(step);
  bool already = !ds.provenance().empty() && ds.provenance().back() == "drop_missing_and_constant";
  return already ? out : out.WithProvenance("drop_missing_and_constant");
}

MinMaxScaler MinMaxScaler::Fit(const Dataset& ds) {
  std::vector<double> lo(ds.cols(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(ds.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      if (ds.missing(r, c) && std::isnan(ds.at(r, c))) continue;
      lo[c] = std::min(lo[c], ds.at(r, c));
      hi[c] = std::max(hi[c], ds.at(r, c));
    }
  }
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    if (!(lo[c] < hi[c])) {
      throw Error("cannot normalize constant feature '" + ds.feature_names()[c] + "'");
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

Dataset MinMaxScaler::Transform(const Dataset& ds) const {
  if (ds.cols() != min_.size()) throw Error("MinMaxScaler: feature count mismatch");
  std::vector<double> values(ds.values().begin(), ds.values().end());
  const std::size_t n = ds.cols();
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double& v = values[r * n + c];
      v = std::clamp(2.0 * (v - min_[c]) / (max_[c] - min_[c]) - 1.0, -1.0, 1.0);
    }
  }
  Dataset out(std::move(values), ds.rows(), ds.feature_names(), ds.labels(),
              std::vector<std::uint8_t>(ds.missing_mask().begin(), ds.missing_mask().end()));
  out = out.WithAudit(ds.audit());
  for (const auto& step : ds.provenance()) out = out.WithProvenance(step);
  return out.WithProvenance("normalize");
}

Dataset MinMaxScaler::Inverse(const Dataset& ds) const {
  if (ds.cols() != min_.size()) throw Error("MinMaxScaler: feature count mismatch");
  std::vector<double> values(ds.values().begin(), ds.values().end());
  const std::size_t n = ds.cols();
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double& v = values[r * n + c];
      v = min_[c] + (v + 1.0) * 0.5 * (max_[c] - min_[c]);
    }
  }
  Dataset out(std::move(values), ds.rows(), ds.feature_names(), ds.labels(),
              std::vector<std::uint8_t>(ds.missing_mask().begin(), ds.missing_mask().end()));
  return out.WithAudit(ds.audit());
}

Dataset Normalize(const Dataset& ds, MinMaxScaler* scaler) {
  MinMaxScaler fitted = MinMaxScaler::Fit(ds);
  Dataset out = fitted.Transform(ds);
  if (scaler != nullptr) *scaler = std::move(fitted);
  return out;
}

Split TrainTestSplit(const Dataset& ds, const PreprocessConfig& cfg) {
  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
    throw Error("split ratio must lie in (0, 1)");
  }
  NoiseSource src(cfg.seed);
  Split split{ds, ds, {}, {}};
  for (int cls : {-1, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (ds.label(r) == cls) members.push_back(r);
    }
    if (members.size() < 2) {
      throw Error("class " + std::to_string(cls) + " has fewer than 2 records; cannot stratify");
    }
    Shuffle<std::size_t>(members, src);
    auto n_train = static_cast<std::size_t>(std::llround(cfg.split_ratio * members.size()));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    split.train_indices.insert(split.train_indices.end(), members.begin(),
                               members.begin() + n_train);
    split.test_indices.insert(split.test_indices.end(), members.begin() + n_train, members.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  split.train = ds.SelectRecords(split.train_indices);
  split.test = ds.SelectRecords(split.test_indices);
  return split;
}

nlohmann::json AuditToJson(const std::vector<FeatureRemoval>& audit) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : audit) {
    out.push_back({{"feature", r.feature}, {"reason", r.reason}, {"value", r.value}});
  }
  return out;
}

void WriteCsv(const Dataset& ds, std::ostream& out, const std::string& label_column) {
  for (const auto& name : ds.feature_names()) out << name << ',';
  out << label_column << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      if (!ds.missing(r, c)) out << FormatDouble(ds.at(r, c));
      out << ',';
    }
    out << ds.label(r) << '\n';
  }
}

}  // namespace crfs
