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

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "crfs/correlation.h"

namespace crfs {
namespace {

constexpr std::uint64_t kForestStream = 0x666f72657374ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

template <typename Fn>
auto Staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::uint64_t RunSeed(std::uint64_t seed, double epsilon) {
  return DeriveSeed(DeriveSeed(seed, kNoiseStream), std::bit_cast<std::uint64_t>(epsilon));
}

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

struct SeedResult {
  std::vector<AccuracyRow> accuracy;
  std::vector<MaeRow> mae;
  std::vector<StageRow> stages;
  std::vector<LedgerRow> ledgers;
  std::vector<QueryReportRow> queries;
  std::vector<nlohmann::ordered_json> traces;
};

// MAE summaries (plain and adjusted) for one scheme's releases of the workload.
void AppendMae(SeedResult& out, Scheme scheme, double epsilon, std::uint64_t seed,
               double release_eps, const std::vector<AggQuery>& workload,
               const std::vector<Release>& releases, const std::vector<std::string>* best,
               const std::vector<std::string>* adjusted) {
  for (AggQuery::Kind kind : {AggQuery::Kind::kCount, AggQuery::Kind::kMean}) {
    std::vector<std::pair<double, double>> pairs;
    std::vector<AdjustedTriple> triples;
    double sens = 0.0;
    for (std::size_t q = 0; q < workload.size(); ++q) {
      if (workload[q].kind() != kind) continue;
      const Release& r = releases[q];
      pairs.emplace_back(r.true_value, r.released);
      sens += r.sensitivity;
      double on_best = r.true_value, on_adjusted = r.true_value;
      if (best != nullptr && !Contains(*best, workload[q].feature())) on_best = 0.0;
      if (adjusted != nullptr && !Contains(*adjusted, workload[q].feature())) on_adjusted = 0.0;
      triples.push_back({r.released, on_best, on_best - on_adjusted});
    }
    if (pairs.empty()) continue;
    MaeRow row{.scheme = scheme,
               .kind = kind,
               .epsilon = epsilon,
               .seed = seed,
               .mae = Mae(pairs),
               .mae_adjusted = MaeAdjusted(triples),
               .mean_sensitivity = sens / static_cast<double>(pairs.size()),
               .release_epsilon = release_eps,
               .n_queries = pairs.size()};
    out.mae.push_back(row);
  }
}

SeedResult RunSeedJob(const ExperimentConfig& cfg, const Dataset& base, const Dataset& normalized,
                      const std::vector<AggQuery>& workload, std::uint64_t seed,
                      std::size_t original_features) {
  SeedResult out;
  const Learner learner{cfg.learner, cfg.train};
  const bool want_private = std::any_of(cfg.schemes.begin(), cfg.schemes.end(),
                                        [](Scheme s) { return s != Scheme::kNonPrivate; });
  auto wants = [&cfg](Scheme s) {
    return std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end();
  };

  Split split = Staged("preprocess", [&] {
    PreprocessConfig pc;
    pc.missing_threshold = cfg.selection.missing_threshold;
    pc.split_ratio = cfg.split_ratio;
    pc.seed = seed;
    return TrainTestSplit(normalized, pc);
  });
  ForestConfig fc = cfg.forest;
  fc.seed = DeriveSeed(DeriveSeed(cfg.forest.seed, kForestStream), seed);
  Preparation prep = Staged("prepare", [&] { return Prepare(split.train, cfg.selection, fc); });
  const std::vector<std::string>& prepared = prep.prepared.feature_names();

  double nonprivate_acc = 0.0;
  if (wants(Scheme::kNonPrivate)) {
    nonprivate_acc = Staged("train", [&] {
      LinearModel m = learner.Fit(split.train.SelectFeatures(prepared));
      return Accuracy(m, split.test.SelectFeatures(prepared));
    });
  }

  for (double eps : cfg.epsilons) {
    if (wants(Scheme::kNonPrivate)) {
      out.accuracy.push_back({Scheme::kNonPrivate, eps, seed, nonprivate_acc, 0.0, 0.0,
                              prepared.size()});
      std::vector<Release> exact;
      for (const auto& q : workload) {
        double v = q.Evaluate(normalized);
        exact.push_back({v, v, 0.0});
      }
      AppendMae(out, Scheme::kNonPrivate, eps, seed, 0.0, workload, exact, nullptr, nullptr);
    }
    if (!want_private) continue;

    const NoiseSource run(RunSeed(seed, eps));
    PrivacyBudget budget(eps, cfg.selection.selection_fraction);
    NoiseSource select_src = run.Derive(0);
    SelectionResult sel = Staged(
        "select", [&] { return Select(prep, cfg.selection, learner, select_src, budget); });
    const FeatureSets& sets = sel.sets;
    const double release_eps = sets.release_epsilon;

    nlohmann::ordered_json trace;
    trace["epsilon"] = eps;
    trace["seed"] = seed;
    trace["selection"] = SelectionTraceJson(prep, sel);
    out.traces.push_back(std::move(trace));
    out.stages.push_back({eps, seed, original_features, base.cols(), prepared.size(),
                          prep.post_filter.size(), sets.best.size(), sets.adjusted.size()});

    for (Scheme scheme : {Scheme::kGroup, Scheme::kZhu, Scheme::kCrfs}) {
      if (!wants(scheme)) continue;
      const std::vector<std::string>& features =
          scheme == Scheme::kCrfs ? sets.adjusted : sets.best;
      AccuracyRow row = Staged("train", [&] {
        Dataset train = split.train.SelectFeatures(features);
        CorrelationMatrix lambda = BuildCorrelationMatrix(train, cfg.selection.correlation_threshold);
        double sens = TrainingSensitivity(lambda, train, cfg.selection.calibration,
                                          scheme == Scheme::kGroup);
        LinearModel model = learner.Fit(train);
        NoiseSource noise = run.Derive(1);
        LinearModel released = PerturbModel(model, sens, release_eps, noise);
        return AccuracyRow{scheme, eps, seed, Accuracy(released, split.test.SelectFeatures(features)),
                           sens, release_eps, features.size()};
      });
      out.accuracy.push_back(row);

      LedgerRow ledger{eps, seed, scheme, budget};
      ledger.budget.Spend("model_release", release_eps);
      out.ledgers.push_back(std::move(ledger));

      std::vector<Release> releases = Staged("query", [&] {
        CorrelationMatrix lambda = BuildCorrelationMatrix(normalized.SelectFeatures(features),
                                                          cfg.selection.correlation_threshold);
        NoiseSource noise = run.Derive(2);
        std::vector<Release> rel;
        rel.reserve(workload.size());
        for (const auto& q : workload) {
          rel.push_back(DpRelease(normalized, q, lambda, release_eps, scheme, noise));
        }
        return rel;
      });
      if (cfg.write_queries) {
        for (std::size_t q = 0; q < workload.size(); ++q) {
          out.queries.push_back({q, workload[q].kind(), scheme, eps, seed, releases[q].true_value,
                                 releases[q].released, releases[q].sensitivity});
        }
      }
      AppendMae(out, scheme, eps, seed, release_eps, workload, releases, &sets.best,
                scheme == Scheme::kCrfs ? &sets.adjusted : &sets.best);
    }
  }
  return out;
}

std::string Csv(double v) { return FormatDouble(v); }

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  seeds.resize(20);
  std::iota(seeds.begin(), seeds.end(), 0);
}

void ExperimentConfig::Validate() const {
  if (dataset_path.empty() && !synthetic) throw Error("config names neither a dataset nor synthetic data");
  if (!synthetic && label_column.empty()) throw Error("config has no label column");
  if (synthetic) synthetic->Validate();
  selection.Validate();
  if (epsilons.empty()) throw Error("epsilon sweep is empty");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw Error("epsilon values must be positive, got " + FormatDouble(e));
  }
  if (seeds.empty()) throw Error("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw Error("duplicate seeds");
  }
  if (schemes.empty()) throw Error("no schemes selected");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error("split_ratio must lie in (0, 1)");
  if (count_queries + mean_queries == 0) throw Error("query workload is empty");
  if (threads < 1) throw Error("threads must be at least 1");
}

nlohmann::json ExperimentConfigToJson(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = {{"path", cfg.dataset_path},
                  {"label", cfg.label_column},
                  {"categorical", cfg.categorical_columns},
                  {"ignore", cfg.ignore_columns},
                  {"positive_label", cfg.positive_label},
                  {"subsample", cfg.subsample},
                  {"subsample_seed", cfg.subsample_seed}};
  if (cfg.synthetic) j["synthetic"] = SyntheticSpecToJson(*cfg.synthetic);
  j["selection"] = SelectionConfigToJson(cfg.selection);
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"epochs", cfg.train.epochs},
                {"l2", cfg.train.l2},
                {"seed", cfg.train.seed}};
  j["forest"] = {{"n_trees", cfg.forest.n_trees},
                 {"max_depth", cfg.forest.max_depth},
                 {"min_samples_leaf", cfg.forest.min_samples_leaf},
                 {"features_per_split", cfg.forest.features_per_split},
                 {"seed", cfg.forest.seed}};
  j["learner"] = LearnerName(cfg.learner);
  j["split_ratio"] = cfg.split_ratio;
  j["epsilons"] = cfg.epsilons;
  j["seeds"] = cfg.seeds;
  std::vector<std::string> schemes;
  for (Scheme s : cfg.schemes) schemes.push_back(SchemeName(s));
  j["schemes"] = schemes;
  j["workload_seed"] = cfg.workload_seed;
  j["count_queries"] = cfg.count_queries;
  j["mean_queries"] = cfg.mean_queries;
  j["write_queries"] = cfg.write_queries;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  return j;
}

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("experiment config must be a JSON object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") {
        for (const auto& [k, d] : v.items()) {
          if (k == "path") cfg.dataset_path = d.get<std::string>();
          else if (k == "label") cfg.label_column = d.get<std::string>();
          else if (k == "categorical") cfg.categorical_columns = d.get<std::vector<std::string>>();
          else if (k == "ignore") cfg.ignore_columns = d.get<std::vector<std::string>>();
          else if (k == "positive_label") cfg.positive_label = d.get<std::string>();
          else if (k == "subsample") cfg.subsample = d.get<std::size_t>();
          else if (k == "subsample_seed") cfg.subsample_seed = d.get<std::uint64_t>();
          else throw Error("unknown dataset key '" + k + "'");
        }
      } else if (key == "synthetic") {
        cfg.synthetic = SyntheticSpecFromJson(v);
      } else if (key == "selection") {
        cfg.selection = SelectionConfigFromJson(v);
      } else if (key == "train") {
        for (const auto& [k, d] : v.items()) {
          if (k == "learning_rate") cfg.train.learning_rate = d.get<double>();
          else if (k == "epochs") cfg.train.epochs = d.get<int>();
          else if (k == "l2") cfg.train.l2 = d.get<double>();
          else if (k == "seed") cfg.train.seed = d.get<std::uint64_t>();
          else throw Error("unknown train key '" + k + "'");
        }
      } else if (key == "forest") {
        for (const auto& [k, d] : v.items()) {
          if (k == "n_trees") cfg.forest.n_trees = d.get<int>();
          else if (k == "max_depth") cfg.forest.max_depth = d.get<int>();
          else if (k == "min_samples_leaf") cfg.forest.min_samples_leaf = d.get<int>();
          else if (k == "features_per_split") cfg.forest.features_per_split = d.get<int>();
          else if (k == "seed") cfg.forest.seed = d.get<std::uint64_t>();
          else throw Error("unknown forest key '" + k + "'");
        }
      } else if (key == "learner") {
        cfg.learner = ParseLearner(v.get<std::string>());
      } else if (key == "split_ratio") {
        cfg.split_ratio = v.get<double>();
      } else if (key == "epsilons") {
        cfg.epsilons = v.get<std::vector<double>>();
      } else if (key == "seeds") {
        cfg.seeds = v.get<std::vector<std::uint64_t>>();
      } else if (key == "schemes") {
        cfg.schemes.clear();
        for (const auto& s : v) cfg.schemes.push_back(ParseScheme(s.get<std::string>()));
      } else if (key == "workload_seed") {
        cfg.workload_seed = v.get<std::uint64_t>();
      } else if (key == "count_queries") {
        cfg.count_queries = v.get<std::size_t>();
      } else if (key == "mean_queries") {
        cfg.mean_queries = v.get<std::size_t>();
      } else if (key == "write_queries") {
        cfg.write_queries = v.get<bool>();
      } else if (key == "output_dir") {
        cfg.output_dir = v.get<std::string>();
      } else if (key == "threads") {
        cfg.threads = v.get<int>();
      } else {
        throw Error("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

double ExperimentResult::MeanAccuracy(Scheme scheme, double epsilon) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : accuracy) {
    if (r.scheme == scheme && r.epsilon == epsilon) {
      s += r.accuracy;
      ++n;
    }
  }
  if (n == 0) throw Error("no accuracy rows for " + SchemeName(scheme) + " at epsilon " + Csv(epsilon));
  return s / n;
}

double ExperimentResult::MeanMae(Scheme scheme, AggQuery::Kind kind, double epsilon) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : mae) {
    if (r.scheme == scheme && r.kind == kind && r.epsilon == epsilon) {
      s += r.mae;
      ++n;
    }
  }
  if (n == 0) throw Error("no MAE rows for " + SchemeName(scheme) + " at epsilon " + Csv(epsilon));
  return s / n;
}

Dataset LoadExperimentData(const ExperimentConfig& cfg) {
  Dataset data = [&] {
    if (cfg.synthetic) return MakeSynthetic(*cfg.synthetic);
    CsvOptions opts;
    opts.label_column = cfg.label_column;
    opts.categorical_columns = {cfg.categorical_columns.begin(), cfg.categorical_columns.end()};
    opts.ignore_columns = {cfg.ignore_columns.begin(), cfg.ignore_columns.end()};
    opts.positive_label = cfg.positive_label;
    return LoadCsv(cfg.dataset_path, opts);
  }();
  if (cfg.subsample == 0 || cfg.subsample >= data.rows()) return data;
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), 0);
  NoiseSource src(cfg.subsample_seed);
  Shuffle(std::span(idx), src);
  idx.resize(cfg.subsample);
  std::sort(idx.begin(), idx.end());
  return data.SelectRecords(idx).WithProvenance("subsample");
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const Dataset& data) {
  Staged("config", [&] { cfg.Validate(); });
  Dataset base = Staged("preprocess", [&] {
    PreprocessConfig pc;
    pc.missing_threshold = cfg.selection.missing_threshold;
    return DropMissingAndConstant(data, pc);
  });
  Dataset normalized = Staged("preprocess", [&] { return Normalize(base); });
  std::vector<AggQuery> workload = Staged("query", [&] {
    return GenerateWorkload(normalized, cfg.count_queries, cfg.mean_queries, cfg.workload_seed);
  });

  std::vector<SeedResult> per_seed(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        per_seed[i] = RunSeedJob(cfg, base, normalized, workload, cfg.seeds[i], data.cols());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(cfg.seeds.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  for (auto& s : per_seed) {
    auto move_into = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    move_into(result.accuracy, s.accuracy);
    move_into(result.mae, s.mae);
    move_into(result.stages, s.stages);
    move_into(result.ledgers, s.ledgers);
    move_into(result.queries, s.queries);
    for (auto& t : s.traces) result.traces.push_back(std::move(t));
  }
  return result;
}

void WriteAccuracyCsv(const std::vector<AccuracyRow>& rows, std::ostream& out) {
  out << "scheme,epsilon,seed,accuracy,sensitivity,release_epsilon,n_features\n";
  for (const auto& r : rows) {
    out << SchemeName(r.scheme) << ',' << Csv(r.epsilon) << ',' << r.seed << ','
        << Csv(r.accuracy) << ',' << Csv(r.sensitivity) << ',' << Csv(r.release_epsilon) << ','
        << r.n_features << '\n';
  }
}

void WriteMaeCsv(const std::vector<MaeRow>& rows, AggQuery::Kind kind, std::ostream& out) {
  out << "scheme,epsilon,seed,mae,mae_adjusted,mean_sensitivity,release_epsilon,n_queries\n";
  for (const auto& r : rows) {
    if (r.kind != kind) continue;
    out << SchemeName(r.scheme) << ',' << Csv(r.epsilon) << ',' << r.seed << ',' << Csv(r.mae)
        << ',' << Csv(r.mae_adjusted) << ',' << Csv(r.mean_sensitivity) << ','
        << Csv(r.release_epsilon) << ',' << r.n_queries << '\n';
  }
}

void WriteStagesCsv(const std::vector<StageRow>& rows, std::ostream& out) {
  out << "epsilon,seed,original,after_missing,prepared,post_filter,best,adjusted\n";
  for (const auto& r : rows) {
    out << Csv(r.epsilon) << ',' << r.seed << ',' << r.original << ',' << r.after_missing << ','
        << r.prepared << ',' << r.post_filter << ',' << r.best << ',' << r.adjusted << '\n';
  }
}

void WriteResults(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  std::ostringstream acc, count, mean, stages, corr, queries;
  WriteAccuracyCsv(result.accuracy, acc);
  WriteMaeCsv(result.mae, AggQuery::Kind::kCount, count);
  WriteMaeCsv(result.mae, AggQuery::Kind::kMean, mean);
  WriteStagesCsv(result.stages, stages);

  corr << "epsilon,seed,pass,n_features,mean_abs_correlation,max_correlated,sensitivity,score\n";
  for (const auto& t : result.traces) {
    for (const char* pass : {"forward", "backward"}) {
      for (const auto& c : t["selection"][pass]) {
        corr << Csv(t["epsilon"].get<double>()) << ',' << t["seed"].get<std::uint64_t>() << ','
             << pass << ',' << c["n_features"].get<std::size_t>() << ','
             << Csv(c["mean_abs_correlation"].get<double>()) << ','
             << c["max_correlated"].get<std::size_t>() << ','
             << Csv(c["sensitivity"].get<double>()) << ',' << Csv(c["score"].get<double>())
             << '\n';
      }
    }
  }

  nlohmann::ordered_json ledgers = nlohmann::ordered_json::array();
  for (const auto& l : result.ledgers) {
    nlohmann::ordered_json j;
    j["epsilon"] = l.epsilon;
    j["seed"] = l.seed;
    j["scheme"] = SchemeName(l.scheme);
    j["ledger"] = l.budget.ToJson();
    ledgers.push_back(std::move(j));
  }

  WriteFile(root / "accuracy.csv", acc.str());
  WriteFile(root / "mae_count.csv", count.str());
  WriteFile(root / "mae_mean.csv", mean.str());
  WriteFile(root / "stages.csv", stages.str());
  WriteFile(root / "correlation.csv", corr.str());
  if (cfg.write_queries) {
    QueryReport report;
    report.rows = result.queries;
    QueryReport::WriteCsvHeader(queries);
    report.WriteCsvRows(queries);
    WriteFile(root / "queries.csv", queries.str());
  }
  WriteFile(root / "selection_trace.json", result.traces.dump(2) + "\n");
  WriteFile(root / "budget_ledger.json", ledgers.dump(2) + "\n");
  WriteFile(root / "config.json", ExperimentConfigToJson(cfg).dump(2) + "\n");
}

SelectionStageResult RunSelectionStage(const ExperimentConfig& cfg, const Dataset& data,
                                       std::uint64_t seed, double epsilon) {
  Staged("config", [&] { cfg.Validate(); });
  if (!(epsilon > 0.0)) throw StageError("config", "epsilon must be positive");
  PreprocessConfig pc;
  pc.missing_threshold = cfg.selection.missing_threshold;
  pc.split_ratio = cfg.split_ratio;
  pc.seed = seed;
  Dataset base = Staged("preprocess", [&] { return DropMissingAndConstant(data, pc); });
  Split split = Staged("preprocess", [&] { return TrainTestSplit(Normalize(base), pc); });
  ForestConfig fc = cfg.forest;
  fc.seed = DeriveSeed(DeriveSeed(cfg.forest.seed, kForestStream), seed);
  Preparation prep = Staged("prepare", [&] { return Prepare(split.train, cfg.selection, fc); });
  SelectionStageResult out;
  out.budget = PrivacyBudget(epsilon, cfg.selection.selection_fraction);
  NoiseSource src = NoiseSource(RunSeed(seed, epsilon)).Derive(0);
  SelectionResult sel = Staged("select", [&] {
    return Select(prep, cfg.selection, Learner{cfg.learner, cfg.train}, src, out.budget);
  });
  out.trace = SelectionTraceJson(prep, sel);
  out.stages = {epsilon, seed, data.cols(), base.cols(), prep.prepared.cols(),
                prep.post_filter.size(), sel.sets.best.size(), sel.sets.adjusted.size()};
  return out;
}

QueryReport RunQueryStage(const ExperimentConfig& cfg, const Dataset& data, Scheme scheme,
                          double epsilon, std::uint64_t seed) {
  Staged("config", [&] { cfg.Validate(); });
  Dataset normalized = Staged("preprocess", [&] {
    PreprocessConfig pc;
    pc.missing_threshold = cfg.selection.missing_threshold;
    return Normalize(DropMissingAndConstant(data, pc));
  });
  return Staged("query", [&] {
    std::vector<AggQuery> workload =
        GenerateWorkload(normalized, cfg.count_queries, cfg.mean_queries, cfg.workload_seed);
    CorrelationMatrix lambda =
        BuildCorrelationMatrix(normalized, cfg.selection.correlation_threshold);
    NoiseSource noise = NoiseSource(RunSeed(seed, epsilon)).Derive(2);
    QueryReport report;
    for (std::size_t q = 0; q < workload.size(); ++q) {
      Release r = DpRelease(normalized, workload[q], lambda, epsilon, scheme, noise);
      report.rows.push_back(
          {q, workload[q].kind(), scheme, epsilon, seed, r.true_value, r.released, r.sensitivity});
    }
    report.Finalize();
    return report;
  });
}

ExperimentResult RunPipeline(const ExperimentConfig& cfg) {
  Staged("config", [&] { cfg.Validate(); });
  Dataset data = Staged("load", [&] { return LoadExperimentData(cfg); });
  ExperimentResult result = RunExperiment(cfg, data);
  Staged("write", [&] { WriteResults(cfg, result, cfg.output_dir); });
  return result;
}

}  // namespace crfs
