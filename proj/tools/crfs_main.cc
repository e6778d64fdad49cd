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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crfs/correlation.h"
#include "crfs/harness.h"
#include "crfs/publishing.h"
#include "crfs/synthetic.h"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> scheme;
  std::optional<double> epsilon;
};

void AddCommon(CLI::App* cmd, Overrides& o, bool require_config) {
  auto* c = cmd->add_option("--config", o.config, "JSON experiment config");
  if (require_config) c->required();
  cmd->add_option("--seed", o.seed, "run a single seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--scheme", o.scheme, "nonprivate, group, zhu or crfs");
  cmd->add_option("--epsilon", o.epsilon, "run a single privacy budget");
}

crfs::ExperimentConfig Resolve(const Overrides& o) {
  crfs::ExperimentConfig cfg;
  try {
    cfg = crfs::LoadExperimentConfig(o.config);
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    if (o.scheme) cfg.schemes = {crfs::ParseScheme(*o.scheme)};
    if (o.epsilon) cfg.epsilons = {*o.epsilon};
    cfg.Validate();
  } catch (const crfs::StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw crfs::StageError("config", e.what());
  }
  return cfg;
}

crfs::Dataset Load(const crfs::ExperimentConfig& cfg) {
  try {
    return crfs::LoadExperimentData(cfg);
  } catch (const std::exception& e) {
    throw crfs::StageError("load", e.what());
  }
}

void PrintSummary(const crfs::ExperimentConfig& cfg, const crfs::ExperimentResult& result) {
  std::cout << "epsilon";
  for (crfs::Scheme s : cfg.schemes) std::cout << '\t' << crfs::SchemeName(s);
  std::cout << '\n';
  for (double eps : cfg.epsilons) {
    std::cout << eps;
    for (crfs::Scheme s : cfg.schemes) std::cout << '\t' << result.MeanAccuracy(s, eps);
    std::cout << '\n';
  }
}

int RunSynth(const crfs::SyntheticSpec& spec, const std::string& out_path) {
  crfs::Dataset ds = [&] {
    try {
      return crfs::MakeSynthetic(spec);
    } catch (const std::exception& e) {
      throw crfs::StageError("synth", e.what());
    }
  }();
  if (out_path.empty() || out_path == "-") {
    crfs::WriteCsv(ds, std::cout);
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) throw crfs::StageError("write", "cannot open '" + out_path + "'");
  crfs::WriteCsv(ds, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlated differential privacy for feature selection"};
  app.require_subcommand(1);

  Overrides run_o, select_o, query_o, sens_o;
  auto* run = app.add_subcommand("run", "full experiment: every scheme, epsilon and seed");
  AddCommon(run, run_o, true);
  auto* select = app.add_subcommand("select", "feature selection only, one seed and epsilon");
  AddCommon(select, select_o, true);
  auto* query = app.add_subcommand("query", "release the query workload for one scheme");
  AddCommon(query, query_o, true);
  auto* sens = app.add_subcommand("sensitivity", "report correlated and group sensitivity");
  AddCommon(sens, sens_o, true);
  std::string query_text;
  sens->add_option("--query", query_text, "count:<feature>:<op>:<value> or mean:<feature>")
      ->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic correlated dataset as CSV");
  crfs::SyntheticSpec spec;
  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config, "JSON config with a 'synthetic' section");
  synth->add_option("--clusters", spec.cluster_sizes, "cluster sizes")->delimiter(',');
  synth->add_option("--strength", spec.strength, "correlation strength in [0, 1]");
  synth->add_option("--records", spec.records, "number of records");
  synth->add_option("--features", spec.features, "number of features");
  synth->add_option("--shared", spec.shared_features, "features shared within a cluster");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      crfs::ExperimentConfig cfg = Resolve(run_o);
      crfs::ExperimentResult result = crfs::RunPipeline(cfg);
      PrintSummary(cfg, result);
      std::cout << "results written to " << cfg.output_dir << '\n';
    } else if (*select) {
      crfs::ExperimentConfig cfg = Resolve(select_o);
      crfs::Dataset data = Load(cfg);
      const double eps = cfg.epsilons.front();
      auto out = crfs::RunSelectionStage(cfg, data, cfg.seeds.front(), eps);
      nlohmann::ordered_json doc;
      doc["epsilon"] = eps;
      doc["seed"] = cfg.seeds.front();
      doc["selection"] = out.trace;
      doc["ledger"] = out.budget.ToJson();
      std::cout << doc.dump(2) << '\n';
      if (select_o.out_dir) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream f(std::filesystem::path(cfg.output_dir) / "selection_trace.json");
        if (!f) throw crfs::StageError("write", "cannot write to '" + cfg.output_dir + "'");
        f << doc.dump(2) << '\n';
      }
    } else if (*query) {
      crfs::ExperimentConfig cfg = Resolve(query_o);
      crfs::Dataset data = Load(cfg);
      const crfs::Scheme scheme = query_o.scheme ? cfg.schemes.front() : crfs::Scheme::kCrfs;
      crfs::QueryReport report =
          crfs::RunQueryStage(cfg, data, scheme, cfg.epsilons.front(), cfg.seeds.front());
      crfs::QueryReport::WriteCsvHeader(std::cout);
      report.WriteCsvRows(std::cout);
      std::cerr << "mae " << report.mae << '\n';
    } else if (*sens) {
      crfs::ExperimentConfig cfg = Resolve(sens_o);
      crfs::Dataset data = Load(cfg);
      nlohmann::ordered_json doc;
      try {
        crfs::PreprocessConfig pc;
        pc.missing_threshold = cfg.selection.missing_threshold;
        crfs::Dataset ds = crfs::Normalize(crfs::DropMissingAndConstant(data, pc));
        crfs::AggQuery q = crfs::ParseQuery(query_text);
        auto lambda = crfs::BuildCorrelationMatrix(ds, cfg.selection.correlation_threshold);
        std::vector<double> deltas = crfs::DeletionDeltas(q, ds);
        double max_delta = 0.0;
        for (double d : deltas) max_delta = std::max(max_delta, d);
        doc["query"] = q.Describe();
        doc["theta0"] = cfg.selection.correlation_threshold;
        doc["records"] = ds.rows();
        doc["features"] = ds.cols();
        doc["max_record_delta"] = max_delta;
        doc["max_correlated"] = lambda.MaxCorrelatedCount();
        doc["correlated_sensitivity"] =
            crfs::CorrelatedSensitivity(lambda, q.ResolveScope(ds), deltas);
        doc["group_sensitivity"] = crfs::GroupSensitivity(lambda, deltas);
      } catch (const std::exception& e) {
        throw crfs::StageError("sensitivity", e.what());
      }
      std::cout << doc.dump(2) << '\n';
    } else if (*synth) {
      if (!synth_config.empty()) {
        crfs::ExperimentConfig cfg = Resolve({synth_config, {}, {}, {}, {}});
        if (!cfg.synthetic) throw crfs::StageError("config", "config has no 'synthetic' section");
        spec = *cfg.synthetic;
      }
      if (synth_seed) spec.seed = *synth_seed;
      return RunSynth(spec, synth_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
