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

#ifndef CRFS_HARNESS_H_
#define CRFS_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crfs/common.h"
#include "crfs/dataset.h"
#include "crfs/learners.h"
#include "crfs/mechanisms.h"
#include "crfs/publishing.h"
#include "crfs/random_forest.h"
#include "crfs/selection.h"
#include "crfs/synthetic.h"
#include "json.hpp"

namespace crfs {

// An error tagged with the pipeline stage that raised it. what() reads
// "[stage] message".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentConfig {
  std::string dataset_path;
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> ignore_columns;
  std::string positive_label;
  // Generates the data instead of reading dataset_path.
  std::optional<SyntheticSpec> synthetic;
  // Keep this many records (0: all), drawn with subsample_seed.
  std::size_t subsample = 0;
  std::uint64_t subsample_seed = 0;

  SelectionConfig selection;
  TrainConfig train;
  ForestConfig forest;
  LearnerKind learner = LearnerKind::kLinearSvm;
  double split_ratio = 0.8;

  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::uint64_t> seeds;  // default 0..19
  std::vector<Scheme> schemes = AllSchemes();
  std::uint64_t workload_seed = 0;
  std::size_t count_queries = 50;
  std::size_t mean_queries = 50;
  bool write_queries = true;
  std::string output_dir = "out";
  int threads = 1;

  ExperimentConfig();
  void Validate() const;
};

nlohmann::json ExperimentConfigToJson(const ExperimentConfig& cfg);
// Keys absent from j keep their defaults; unknown keys are errors.
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadExperimentConfig(const std::string& path);

struct AccuracyRow {
  Scheme scheme = Scheme::kNonPrivate;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double release_epsilon = 0.0;
  std::size_t n_features = 0;
};

struct MaeRow {
  Scheme scheme = Scheme::kNonPrivate;
  AggQuery::Kind kind = AggQuery::Kind::kCount;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double mae = 0.0;
  double mae_adjusted = 0.0;
  double mean_sensitivity = 0.0;
  double release_epsilon = 0.0;
  std::size_t n_queries = 0;
};

// Feature counts per stage for one (epsilon, seed) run.
struct StageRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t original = 0;
  std::size_t after_missing = 0;
  std::size_t prepared = 0;
  std::size_t post_filter = 0;
  std::size_t best = 0;
  std::size_t adjusted = 0;
};

struct LedgerRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kNonPrivate;
  PrivacyBudget budget{1.0};
};

struct ExperimentResult {
  std::vector<AccuracyRow> accuracy;
  std::vector<MaeRow> mae;
  std::vector<StageRow> stages;
  std::vector<LedgerRow> ledgers;
  std::vector<QueryReportRow> queries;
  nlohmann::ordered_json traces = nlohmann::ordered_json::array();

  // Mean of the matching rows; throws when none match.
  double MeanAccuracy(Scheme scheme, double epsilon) const;
  double MeanMae(Scheme scheme, AggQuery::Kind kind, double epsilon) const;
};

// Reads (or generates) the configured data and applies the subsample.
Dataset LoadExperimentData(const ExperimentConfig& cfg);

// Runs every (epsilon, seed, scheme) cell on `data`. Rows are ordered by
// seed, then epsilon, then scheme, whatever the thread count.
ExperimentResult RunExperiment(const ExperimentConfig& cfg, const Dataset& data);

// accuracy.csv, mae_count.csv, mae_mean.csv, stages.csv, correlation.csv,
// queries.csv (optional), selection_trace.json, budget_ledger.json,
// config.json.
void WriteResults(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& dir);

void WriteAccuracyCsv(const std::vector<AccuracyRow>& rows, std::ostream& out);
void WriteMaeCsv(const std::vector<MaeRow>& rows, AggQuery::Kind kind, std::ostream& out);
void WriteStagesCsv(const std::vector<StageRow>& rows, std::ostream& out);

// Selection only (both algorithms) for one seed and epsilon; returns the
// trace, the stage counts and the ledger after selection.
struct SelectionStageResult {
  nlohmann::ordered_json trace;
  StageRow stages;
  PrivacyBudget budget{1.0};
};
SelectionStageResult RunSelectionStage(const ExperimentConfig& cfg, const Dataset& data,
                                       std::uint64_t seed, double epsilon);

// Publishing only: the workload released under `scheme` with the correlation
// matrix over every preprocessed feature.
QueryReport RunQueryStage(const ExperimentConfig& cfg, const Dataset& data, Scheme scheme,
                          double epsilon, std::uint64_t seed);

// Load, run and write; every failure surfaces as a StageError.
ExperimentResult RunPipeline(const ExperimentConfig& cfg);

}  // namespace crfs

#endif  // CRFS_HARNESS_H_
