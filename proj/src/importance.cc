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

#include "crfs/importance.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crfs/common.h"
#include "crfs/mechanisms.h"

namespace crfs {

std::vector<std::size_t> ImportanceVector::DescendingOrder() const {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [this](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

ImportanceVector ImportanceVector::Select(const std::vector<std::size_t>& indices) const {
  ImportanceVector out;
  out.values.reserve(indices.size());
  for (std::size_t i : indices) out.values.push_back(values.at(i));
  return out;
}

ImportanceVector Renormalized(ImportanceVector imp) {
  double total = 0.0;
  for (double v : imp.values) total += v;
  if (imp.values.empty()) throw Error("cannot normalise an empty importance vector");
  if (total > 0.0) {
    for (double& v : imp.values) v /= total;
    imp.uniform_fallback = false;
  } else {
    std::fill(imp.values.begin(), imp.values.end(), 1.0 / imp.values.size());
    imp.uniform_fallback = true;
  }
  imp.normalized = true;
  return imp;
}

ImportanceVector GiniImportance(const Forest& forest) {
  ImportanceVector imp;
  imp.values.assign(forest.n_features(), 0.0);
  for (const auto& tree : forest.trees()) {
    const auto& d = tree.impurity_decrease();
    for (std::size_t f = 0; f < d.size(); ++f) imp.values[f] += d[f];
  }
  for (double& v : imp.values) v /= static_cast<double>(forest.trees().size());
  return Renormalized(std::move(imp));
}

ImportanceVector ForestImportance(const Dataset& ds, const ForestConfig& cfg) {
  return GiniImportance(TrainForest(ds, cfg));
}

double RecordSensitivityFim(const Dataset& ds, std::size_t i, const ForestConfig& cfg) {
  if (ds.rows() < 3) throw Error("record sensitivity of importance needs at least 3 records");
  ImportanceVector imp = ForestImportance(ds.WithoutRecord(i), cfg);
  std::vector<double> sorted = imp.values;
  std::sort(sorted.begin(), sorted.end());
  return sorted.back() - sorted.front();
}

double SensitivityFim(const Dataset& ds, const ForestConfig& cfg, FimSensitivityMode mode,
                      const std::vector<std::size_t>& scope) {
  if (mode == FimSensitivityMode::kBound) return 1.0;
  if (ds.rows() < 3) throw Error("exact importance sensitivity needs at least 3 records");
  std::vector<std::size_t> records = scope;
  if (records.empty()) {
    records.resize(ds.rows());
    std::iota(records.begin(), records.end(), 0);
  }
  double best = 0.0;
  for (std::size_t i : records) best = std::max(best, RecordSensitivityFim(ds, i, cfg));
  return best;
}

double FimDeletionDistance(const Dataset& ds, const ForestConfig& cfg) {
  ImportanceVector full = ForestImportance(ds, cfg);
  double best = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    ImportanceVector reduced = ForestImportance(ds.WithoutRecord(i), cfg);
    double d = 0.0;
    for (std::size_t f = 0; f < full.size(); ++f) d += std::abs(full[f] - reduced[f]);
    best = std::max(best, d);
  }
  return best;
}

ImportanceVector DpImportance(const ImportanceVector& imp, double sensitivity, double epsilon,
                              NoiseSource& src) {
  if (!imp.normalized) throw Error("DP importance expects a normalised importance vector");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(sensitivity >= 0.0)) throw Error("importance sensitivity must be nonnegative");
  if (sensitivity == 0.0) return imp;
  ImportanceVector out;
  out.values = PerturbVector(imp.values, sensitivity, epsilon, src);
  for (double& v : out.values) v = std::max(v, 0.0);
  return Renormalized(std::move(out));
}

nlohmann::ordered_json ImportanceToJson(const ImportanceVector& imp,
                                        const std::vector<std::string>& names) {
  if (names.size() != imp.size()) throw Error("importance/feature-name length mismatch");
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < names.size(); ++f) out[names[f]] = imp[f];
  return out;
}

}  // namespace crfs
