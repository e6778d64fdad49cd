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

#include "crfs/harness.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crfs/common.h"
#include "crfs/correlation.h"
#include "crfs/synthetic.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace crfs {
namespace {

namespace fs = std::filesystem;

// Connected components of the nonzero pattern of Lambda, as sorted sets.
std::set<std::set<std::size_t>> Blocks(const CorrelationMatrix& m) {
  std::vector<int> comp(m.size(), -1);
  std::set<std::set<std::size_t>> out;
  for (std::size_t s = 0; s < m.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::set<std::size_t> block{s};
    std::vector<std::size_t> stack{s};
    comp[s] = s;
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (m(i, j) != 0.0 && comp[j] < 0) {
          comp[j] = s;
          block.insert(j);
          stack.push_back(j);
        }
      }
    }
    out.insert(block);
  }
  return out;
}

std::set<std::set<std::size_t>> PlantedBlocks(const SyntheticSpec& spec) {
  std::set<std::set<std::size_t>> out;
  std::size_t r = 0;
  for (std::size_t size : spec.cluster_sizes) {
    std::set<std::size_t> b;
    for (std::size_t k = 0; k < size; ++k) b.insert(r++);
    out.insert(b);
  }
  for (; r < spec.records; ++r) out.insert({r});
  return out;
}

TEST(Synthetic, TwoDuplicatePairsGiveUnitBlocks) {
  SyntheticSpec spec{.cluster_sizes = {2, 2}, .strength = 1.0, .records = 10, .features = 12,
                     .seed = 3};
  Dataset ds = MakeSynthetic(spec);
  CorrelationMatrix m = BuildCorrelationMatrix(ds, 0.9);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_EQ(m(2, 3), 1.0);
  EXPECT_EQ(Blocks(m), PlantedBlocks(spec));
  AggQuery all = AggQuery::Count({"x0", CompareOp::kGreater, -1e300});
  EXPECT_EQ(CorrelatedSensitivity(m, all, ds), 2.0);
  EXPECT_EQ(GroupSensitivity(m, all, ds), 2.0);
}

TEST(Synthetic, ZeroStrengthIsNearIdentity) {
  SyntheticSpec spec{.cluster_sizes = {5, 5}, .strength = 0.0, .records = 60, .features = 20,
                     .seed = 4};
  CorrelationMatrix m = BuildCorrelationMatrix(MakeSynthetic(spec), 0.9);
  EXPECT_LE(m.NonzeroOffDiagonal(), 0.01 * 60 * 59);
}

TEST(Synthetic, PlantedBlocksRecovered) {
  testing::Fixture fx(51);
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec spec;
    spec.records = fx.Int(20, 60);
    spec.features = fx.Int(15, 30);
    spec.strength = fx.Uniform(0.97, 1.0);
    spec.seed = trial;
    std::size_t used = 0;
    int clusters = fx.Int(1, 4);
    for (int c = 0; c < clusters; ++c) {
      std::size_t size = fx.Int(2, 6);
      if (used + size > spec.records) break;
      spec.cluster_sizes.push_back(size);
      used += size;
    }
    CorrelationMatrix m = BuildCorrelationMatrix(MakeSynthetic(spec), 0.9);
    EXPECT_EQ(Blocks(m), PlantedBlocks(spec)) << "trial " << trial;
  }
}

TEST(Synthetic, SpecValidationAndJson) {
  SyntheticSpec ok{.cluster_sizes = {3}, .records = 10, .features = 4};
  EXPECT_NO_THROW(ok.Validate());
  SyntheticSpec back = SyntheticSpecFromJson(SyntheticSpecToJson(ok));
  EXPECT_EQ(back.cluster_sizes, ok.cluster_sizes);
  EXPECT_EQ(back.records, 10u);
  EXPECT_THROW(SyntheticSpecFromJson({{"clusters", {2}}, {"bogus", 1}}), Error);
  for (SyntheticSpec bad : {SyntheticSpec{.records = 1}, SyntheticSpec{.features = 1},
                            SyntheticSpec{.strength = 1.5},
                            SyntheticSpec{.cluster_sizes = {1}},
                            SyntheticSpec{.cluster_sizes = {60, 60}},
                            SyntheticSpec{.features = 5, .shared_features = 6}}) {
    EXPECT_THROW(MakeSynthetic(bad), Error);
  }
  Dataset a = MakeSynthetic(ok), b = MakeSynthetic(ok);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  auto [neg, pos] = a.ClassCounts();
  EXPECT_GT(neg, 0u);
  EXPECT_GT(pos, 0u);
}

ExperimentConfig SmallConfig() {
  ExperimentConfig cfg;
  cfg.synthetic = SyntheticSpec{.cluster_sizes = {4, 4}, .strength = 0.9, .records = 30,
                                .features = 8, .shared_features = 4, .seed = 2};
  cfg.forest.n_trees = 10;
  cfg.epsilons = {0.3, 1.0};
  cfg.seeds = {0, 1, 2};
  cfg.count_queries = 5;
  cfg.mean_queries = 5;
  cfg.selection.noise_repeats = 2;
  return cfg;
}

std::map<std::string, std::string> ReadDir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path());
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

TEST(RunExperiment, ByteIdenticalReplay) {
  ExperimentConfig cfg = SmallConfig();
  fs::path root = fs::temp_directory_path() / "crfs_harness_replay";
  fs::remove_all(root);
  for (const char* sub : {"a", "b"}) {
    cfg.output_dir = (root / sub).string();
    RunPipeline(cfg);
  }
  auto a = ReadDir(root / "a"), b = ReadDir(root / "b");
  for (const char* f : {"accuracy.csv", "mae_count.csv", "mae_mean.csv", "stages.csv",
                        "correlation.csv", "queries.csv", "selection_trace.json",
                        "budget_ledger.json"}) {
    ASSERT_TRUE(a.count(f)) << f;
    EXPECT_EQ(a[f], b[f]) << f;
  }
  // config.json differs only in output_dir.
  EXPECT_TRUE(a.count("config.json"));
  EXPECT_EQ(a["accuracy.csv"].substr(0, a["accuracy.csv"].find('\n')),
            "scheme,epsilon,seed,accuracy,sensitivity,release_epsilon,n_features");
}

TEST(RunExperiment, ThreadCountDoesNotChangeResults) {
  ExperimentConfig cfg = SmallConfig();
  Dataset data = LoadExperimentData(cfg);
  ExperimentResult one = RunExperiment(cfg, data);
  cfg.threads = 3;
  ExperimentResult three = RunExperiment(cfg, data);
  std::ostringstream x, y;
  WriteAccuracyCsv(one.accuracy, x);
  WriteAccuracyCsv(three.accuracy, y);
  EXPECT_EQ(x.str(), y.str());
}

TEST(RunExperiment, LedgerAndRowInvariants) {
  ExperimentConfig cfg = SmallConfig();
  ExperimentResult r = RunExperiment(cfg, LoadExperimentData(cfg));
  ASSERT_FALSE(r.ledgers.empty());
  for (const LedgerRow& l : r.ledgers) {
    double sum = 0;
    for (const auto& e : l.budget.ledger()) sum += e.epsilon;
    EXPECT_NEAR(sum, l.epsilon, 1e-12);
    EXPECT_NEAR(l.budget.epsilon_1() + l.budget.epsilon_2(), l.epsilon, 1e-12);
    PrivacyBudget copy = l.budget;
    EXPECT_THROW(copy.Spend("extra", 1e-9), Error);
  }
  // Nonprivate accuracy is the same at every epsilon for a seed.
  std::map<std::uint64_t, std::set<double>> nonprivate;
  for (const AccuracyRow& a : r.accuracy) {
    if (a.scheme == Scheme::kNonPrivate) nonprivate[a.seed].insert(a.accuracy);
    if (a.scheme != Scheme::kNonPrivate) {
      EXPECT_GT(a.sensitivity, 0.0);
      EXPECT_GT(a.release_epsilon, 0.0);
    }
  }
  EXPECT_EQ(nonprivate.size(), cfg.seeds.size());
  for (const auto& [seed, values] : nonprivate) EXPECT_EQ(values.size(), 1u) << seed;
  EXPECT_EQ(r.accuracy.size(), cfg.seeds.size() * cfg.epsilons.size() * 4);
  EXPECT_EQ(r.mae.size(), cfg.seeds.size() * cfg.epsilons.size() * 4 * 2);
  for (const StageRow& s : r.stages) {
    EXPECT_LE(s.post_filter, s.prepared);
    EXPECT_LE(s.adjusted, s.post_filter);
    EXPECT_LE(s.best, s.post_filter);
  }
}

TEST(RunPipeline, ErrorsCarryTheStage) {
  ExperimentConfig cfg;
  cfg.dataset_path = "/nonexistent/data.csv";
  cfg.label_column = "y";
  try {
    RunPipeline(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
    EXPECT_EQ(std::string(e.what()).rfind("[load] ", 0), 0u) << e.what();
  }
  cfg.epsilons = {-1};
  try {
    RunPipeline(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
}

TEST(ExperimentConfig, JsonRoundTripAndErrors) {
  ExperimentConfig cfg = SmallConfig();
  cfg.learner = LearnerKind::kLogistic;
  cfg.schemes = {Scheme::kCrfs, Scheme::kZhu};
  ExperimentConfig back = ExperimentConfigFromJson(ExperimentConfigToJson(cfg));
  EXPECT_EQ(ExperimentConfigToJson(back), ExperimentConfigToJson(cfg));
  EXPECT_EQ(back.schemes, cfg.schemes);
  EXPECT_EQ(ExperimentConfig{}.seeds.size(), 20u);
  nlohmann::json j = ExperimentConfigToJson(cfg);
  j["colour"] = "red";
  EXPECT_THROW(ExperimentConfigFromJson(j), Error);
  j = ExperimentConfigToJson(cfg);
  j["seeds"] = nlohmann::json::array();
  EXPECT_THROW(ExperimentConfigFromJson(j), Error);
  j = ExperimentConfigToJson(cfg);
  j["epsilons"] = {0.5, 0.0};
  EXPECT_THROW(ExperimentConfigFromJson(j), Error);
  j = ExperimentConfigToJson(cfg);
  j["learner"] = 3;
  EXPECT_THROW(ExperimentConfigFromJson(j), Error);
  EXPECT_THROW(LoadExperimentConfig("/nonexistent.json"), Error);
}

TEST(Stages, SelectionAndQueryStagesRun) {
  ExperimentConfig cfg = SmallConfig();
  Dataset data = LoadExperimentData(cfg);
  SelectionStageResult s = RunSelectionStage(cfg, data, 0, 0.5);
  EXPECT_TRUE(s.trace.contains("adjusted"));
  EXPECT_DOUBLE_EQ(s.budget.spent(), s.budget.epsilon_1());
  QueryReport rep = RunQueryStage(cfg, data, Scheme::kCrfs, 0.5, 0);
  EXPECT_EQ(rep.rows.size(), 10u);
  double total = 0;
  for (const auto& row : rep.rows) total += row.abs_error();
  EXPECT_NEAR(rep.mae, total / rep.rows.size(), 1e-9);
  EXPECT_THROW(RunSelectionStage(cfg, data, 0, 0.0), StageError);
}

TEST(Stages, AdultSchemaShape) {
  ExperimentConfig cfg;
  cfg.dataset_path = testing::DataPath("adult_sample.csv");
  cfg.label_column = "income";
  cfg.categorical_columns = {"workclass", "education", "marital-status", "occupation",
                             "relationship", "race", "sex", "native-country"};
  cfg.ignore_columns = {"fnlwgt", "education-num"};
  cfg.positive_label = ">50K";
  cfg.forest.n_trees = 10;
  cfg.selection.fim_mode = FimSensitivityMode::kBound;
  Dataset data = LoadExperimentData(cfg);
  SelectionStageResult s = RunSelectionStage(cfg, data, 0, 1.0);
  EXPECT_EQ(s.stages.original, 12u);
  EXPECT_LE(s.stages.best, s.stages.post_filter);
  EXPECT_LE(s.stages.adjusted, s.stages.post_filter);
}

}  // namespace
}  // namespace crfs
