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

#ifndef CRFS_SELECTION_H_
#define CRFS_SELECTION_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crfs/correlation.h"
#include "crfs/dataset.h"
#include "crfs/importance.h"
#include "crfs/learners.h"
#include "crfs/mechanisms.h"
#include "crfs/random.h"
#include "crfs/random_forest.h"
#include "json.hpp"

namespace crfs {

// Which query calibrates the output-perturbation noise of a trained model.
// kLabelMean: mean of the +-1 labels, delta_j = |y_j - mean| / (l - 1).
// kCount: count of all records, delta_j = 1.
enum class TrainingCalibration { kLabelMean, kCount };

std::string CalibrationName(TrainingCalibration c);
TrainingCalibration ParseCalibration(const std::string& name);

struct SelectionConfig {
  double collinearity_threshold = 0.9;  // T_cf
  double importance_threshold = 0.9;    // T_fi, cumulative coverage
  double missing_threshold = 0.2;       // T_mv
  double score_tolerance = 0.01;        // T
  double correlation_threshold = 0.9;   // theta_0
  double selection_fraction = 0.5;      // epsilon_1 / epsilon
  int noise_repeats = 5;
  double validation_fraction = 0.25;
  // Unset: exact up to kExactFimLimit training records, bound above.
  std::optional<FimSensitivityMode> fim_mode;
  bool strict_accounting = false;
  TrainingCalibration calibration = TrainingCalibration::kLabelMean;
  // Keep every candidate's correlation matrix in the result.
  bool keep_matrices = false;

  static constexpr std::size_t kExactFimLimit = 500;

  void Validate() const;
  FimSensitivityMode ResolvedFimMode(std::size_t records) const;
};

nlohmann::json SelectionConfigToJson(const SelectionConfig& cfg);
SelectionConfig SelectionConfigFromJson(const nlohmann::json& j);

// Pearson correlation of features m and n over all records. Throws on a zero-variance feature.
double FeaturePearson(const Dataset& ds, std::size_t m, std::size_t n);

// Greedy pair scan in index order; when |rho| > t_cf the lower-importance
// member goes (ties: the larger index). Removals are appended to the audit.
Dataset RemoveCollinear(const Dataset& ds, double t_cf, const ImportanceVector& imp);

// Indices (column order) of the smallest importance-descending prefix whose
// cumulative importance reaches t_fi, minus zero-importance features.
std::vector<std::size_t> ImportantFeatureIndices(const ImportanceVector& imp, double t_fi);
Dataset RemoveUnimportant(const Dataset& ds, const ImportanceVector& imp, double t_fi);

// Mean of the +-1 labels over the scope.
class LabelMeanQuery : public QueryFn {
 public:
  using QueryFn::QueryFn;
  double EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const override;
  std::optional<std::vector<double>> ClosedFormDeltas(const Dataset& ds) const override;
};

// Number of records in the scope.
class RecordCountQuery : public QueryFn {
 public:
  using QueryFn::QueryFn;
  double EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const override;
  std::optional<std::vector<double>> ClosedFormDeltas(const Dataset& ds) const override;
};

std::unique_ptr<QueryFn> TrainingQuery(TrainingCalibration c);

// Noise scale numerator for releasing a model trained on ds: correlated
// sensitivity, or group sensitivity when `group` is set.
double TrainingSensitivity(const CorrelationMatrix& lambda, const Dataset& ds,
                           TrainingCalibration c, bool group = false);

struct Candidate {
  std::vector<std::string> features;
  double score = 0.0;             // accuracy driving the choice
  double nonprivate_score = 0.0;  // unperturbed validation accuracy
  double sensitivity = 0.0;       // training sensitivity on the fit split
  double mean_abs_correlation = 0.0;
  std::size_t max_correlated = 0;
  std::shared_ptr<const CorrelationMatrix> lambda;
};

struct FeatureSets {
  std::vector<std::string> post_filter;  // DP-importance descending
  std::vector<std::string> best;
  std::vector<std::string> initial_adjusted;
  std::vector<std::string> adjusted;
  std::vector<FeatureRemoval> removed_collinear;
  std::vector<FeatureRemoval> removed_unimportant;
  std::vector<Candidate> best_candidates;
  std::vector<Candidate> forward;
  std::vector<Candidate> backward;
  std::size_t forward_choice = 0;
  std::size_t backward_choice = 0;
  bool forward_chosen = true;
  // Epsilon of each private release once selection is done.
  double release_epsilon = 0.0;
};

// Index of the candidate with the fewest features among those scoring within
// `tolerance` of the maximum; lowest index on ties.
std::size_t SimplestWithin(const std::vector<Candidate>& candidates, double tolerance);

// fit_valid holds the post-filtering features. `pool` lists the feature
// indices the deletion search starts from (empty: every feature).
// Deletes the least DP-important feature one at a time; the best set is the
// most accurate candidate, the smaller one on exact ties.
FeatureSets BestFeatureSet(const Split& fit_valid, const ImportanceVector& dp_imp,
                           const Learner& learner, const std::vector<std::size_t>& pool = {});

// Forward and backward passes; every candidate sees the same noise streams.
// Probes are released with epsilon_2 and not charged, unless
// cfg.strict_accounting splits epsilon_2 evenly over all probes plus the
// final release and charges each to `budget`.
FeatureSets AdjustFeatures(FeatureSets sets, const Split& fit_valid, const SelectionConfig& cfg,
                           const Learner& learner, NoiseSource& src, PrivacyBudget& budget);

// Epsilon-independent part of the pipeline on a normalised training split.
struct Preparation {
  Dataset prepared;  // after collinearity removal
  ImportanceVector importance;  // non-private, aligned with prepared
  std::vector<std::string> post_filter;  // prepared minus zero importance, column order
  std::vector<std::string> core;         // cumulative T_fi survivors
  std::vector<FeatureRemoval> removed_collinear;
  std::vector<FeatureRemoval> removed_unimportant;
  Split fit_valid;  // post_filter features
  FimSensitivityMode fim_mode = FimSensitivityMode::kBound;
  double fim_sensitivity = 1.0;
};

Preparation Prepare(const Dataset& train, const SelectionConfig& cfg, const ForestConfig& forest);

struct SelectionResult {
  FeatureSets sets;
  ImportanceVector dp_importance;  // aligned with Preparation::post_filter
};

// DP importance (spends "feature_selection" epsilon_1), best-set search and
// adjustment. The caller charges the final release.
SelectionResult Select(const Preparation& prep, const SelectionConfig& cfg, const Learner& learner,
                       NoiseSource& src, PrivacyBudget& budget);

nlohmann::ordered_json SelectionTraceJson(const Preparation& prep, const SelectionResult& result);

}  // namespace crfs

#endif  // CRFS_SELECTION_H_
