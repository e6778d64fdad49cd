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

#ifndef CRFS_IMPORTANCE_H_
#define CRFS_IMPORTANCE_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "crfs/dataset.h"
#include "crfs/random.h"
#include "crfs/random_forest.h"
#include "json.hpp"

namespace crfs {

// Per-feature importance weights, aligned with a dataset's feature order.
struct ImportanceVector {
  std::vector<double> values;
  bool normalized = false;
  // Set when the vector was replaced by the uniform vector (no signal, or
  // every perturbed coordinate clamped to zero).
  bool uniform_fallback = false;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  // Feature indices ordered by decreasing importance; ties keep index order.
  std::vector<std::size_t> DescendingOrder() const;
  ImportanceVector Select(const std::vector<std::size_t>& indices) const;
};

ImportanceVector Renormalized(ImportanceVector imp);

// Mean decrease in Gini impurity averaged over the trees, normalised to 1.
ImportanceVector GiniImportance(const Forest& forest);

// Trains a forest on ds and returns its Gini importance.
ImportanceVector ForestImportance(const Dataset& ds, const ForestConfig& cfg);

// Range (largest minus smallest entry) of the importance vector of the forest
// trained without record i.
double RecordSensitivityFim(const Dataset& ds, std::size_t i, const ForestConfig& cfg);

enum class FimSensitivityMode { kExact, kBound };

// kExact: max over records in `scope` (all when empty) of RecordSensitivityFim.
// kBound: 1, the range of any normalised importance vector.
double SensitivityFim(const Dataset& ds, const ForestConfig& cfg, FimSensitivityMode mode,
                      const std::vector<std::size_t>& scope = {});

// Diagnostic only: max_i ||fim(D) - fim(D^{-i})||_1. Not used for calibration.
double FimDeletionDistance(const Dataset& ds, const ForestConfig& cfg);

// Adds Laplace(sensitivity / epsilon) to each coordinate, clamps negatives to
// 0 and renormalises to sum 1. sensitivity == 0 returns the input unchanged.
ImportanceVector DpImportance(const ImportanceVector& imp, double sensitivity, double epsilon,
                              NoiseSource& src);

// {"feature": weight, ...} in feature order.
nlohmann::ordered_json ImportanceToJson(const ImportanceVector& imp,
                                        const std::vector<std::string>& names);

}  // namespace crfs

#endif  // CRFS_IMPORTANCE_H_
