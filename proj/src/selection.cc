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

#include "crfs/selection.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "crfs/common.h"

namespace crfs {
namespace {

constexpr double kScoreEps = 1e-12;

void CheckUnit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(std::string(name) + " must lie in [0, 1], got " + FormatDouble(v));
  }
}

std::vector<std::string> Names(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.feature_names()[i]);
  return out;
}

std::string FimModeName(FimSensitivityMode m) {
  return m == FimSensitivityMode::kExact ? "exact" : "bound";
}

// Trains on the fit split restricted to `features` and scores on validation.
struct Probe {
  Dataset fit;
  Dataset valid;
  LinearModel model;
};

Probe FitProbe(const Split& fv, const std::vector<std::string>& features, const Learner& learner) {
  Probe p{fv.train.SelectFeatures(features), fv.test.SelectFeatures(features), {}};
  p.model = learner.Fit(p.fit);
  return p;
}

Candidate EvaluateCandidate(const Split& fv, std::vector<std::string> features,
                            const SelectionConfig& cfg, const Learner& learner, double eps_probe,
                            const NoiseSource& src, PrivacyBudget& budget) {
  Probe p = FitProbe(fv, features, learner);
  auto lambda = std::make_shared<const CorrelationMatrix>(
      BuildCorrelationMatrix(p.fit, cfg.correlation_threshold));
  Candidate c;
  c.features = std::move(features);
  c.sensitivity = TrainingSensitivity(*lambda, p.fit, cfg.calibration);
  c.mean_abs_correlation = lambda->MeanAbsOffDiagonal();
  c.max_correlated = lambda->MaxCorrelatedCount();
  c.nonprivate_score = Accuracy(p.model, p.valid);
  double total = 0.0;
  for (int r = 0; r < cfg.noise_repeats; ++r) {
    if (cfg.strict_accounting) budget.Spend("adjust_probe", eps_probe);
    NoiseSource noise = src.Derive(r);
    total += Accuracy(PerturbModel(p.model, c.sensitivity, eps_probe, noise), p.valid);
  }
  c.score = total / cfg.noise_repeats;
  if (cfg.keep_matrices) c.lambda = std::move(lambda);
  return c;
}

nlohmann::ordered_json CandidateJson(const Candidate& c) {
  nlohmann::ordered_json j;
  j["n_features"] = c.features.size();
  j["features"] = c.features;
  j["score"] = c.score;
  j["nonprivate_score"] = c.nonprivate_score;
  j["sensitivity"] = c.sensitivity;
  j["mean_abs_correlation"] = c.mean_abs_correlation;
  j["max_correlated"] = c.max_correlated;
  return j;
}

}  // namespace

std::string CalibrationName(TrainingCalibration c) {
  return c == TrainingCalibration::kLabelMean ? "label_mean" : "count";
}

TrainingCalibration ParseCalibration(const std::string& name) {
  if (name == "label_mean") return TrainingCalibration::kLabelMean;
  if (name == "count") return TrainingCalibration::kCount;
  throw Error("unknown calibration '" + name + "' (expected label_mean or count)");
}

void SelectionConfig::Validate() const {
  CheckUnit(collinearity_threshold, "T_cf");
  CheckUnit(importance_threshold, "T_fi");
  CheckUnit(missing_threshold, "T_mv");
  CheckUnit(score_tolerance, "T");
  CheckUnit(correlation_threshold, "theta0");
  if (!(selection_fraction > 0.0 && selection_fraction < 1.0)) {
    throw Error("selection_fraction must lie in (0, 1)");
  }
  if (noise_repeats < 1) throw Error("noise_repeats must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error("validation_fraction must lie in (0, 1)");
  }
}

FimSensitivityMode SelectionConfig::ResolvedFimMode(std::size_t records) const {
  if (fim_mode) return *fim_mode;
  return records <= kExactFimLimit ? FimSensitivityMode::kExact : FimSensitivityMode::kBound;
}

nlohmann::json SelectionConfigToJson(const SelectionConfig& cfg) {
  return {{"T_cf", cfg.collinearity_threshold},
          {"T_fi", cfg.importance_threshold},
          {"T_mv", cfg.missing_threshold},
          {"T", cfg.score_tolerance},
          {"theta0", cfg.correlation_threshold},
          {"selection_fraction", cfg.selection_fraction},
          {"noise_repeats", cfg.noise_repeats},
          {"validation_fraction", cfg.validation_fraction},
          {"fim_mode", cfg.fim_mode ? FimModeName(*cfg.fim_mode) : "auto"},
          {"strict_accounting", cfg.strict_accounting},
          {"calibration", CalibrationName(cfg.calibration)}};
}

SelectionConfig SelectionConfigFromJson(const nlohmann::json& j) {
  SelectionConfig cfg;
  if (!j.is_object()) throw Error("selection config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "T_cf") cfg.collinearity_threshold = v.get<double>();
    else if (key == "T_fi") cfg.importance_threshold = v.get<double>();
    else if (key == "T_mv") cfg.missing_threshold = v.get<double>();
    else if (key == "T") cfg.score_tolerance = v.get<double>();
    else if (key == "theta0") cfg.correlation_threshold = v.get<double>();
    else if (key == "selection_fraction") cfg.selection_fraction = v.get<double>();
    else if (key == "noise_repeats") cfg.noise_repeats = v.get<int>();
    else if (key == "validation_fraction") cfg.validation_fraction = v.get<double>();
    else if (key == "strict_accounting") cfg.strict_accounting = v.get<bool>();
    else if (key == "calibration") cfg.calibration = ParseCalibration(v.get<std::string>());
    else if (key == "fim_mode") {
      auto m = v.get<std::string>();
      if (m == "auto") cfg.fim_mode.reset();
      else if (m == "exact") cfg.fim_mode = FimSensitivityMode::kExact;
      else if (m == "bound") cfg.fim_mode = FimSensitivityMode::kBound;
      else throw Error("unknown fim_mode '" + m + "' (expected auto, exact or bound)");
    } else {
      throw Error("unknown selection config key '" + key + "'");
    }
  }
  cfg.Validate();
  return cfg;
}

double FeaturePearson(const Dataset& ds, std::size_t m, std::size_t n) {
  const std::size_t l = ds.rows();
  if (l == 0) throw Error("feature correlation of an empty dataset");
  double mu_m = 0.0, mu_n = 0.0;
  for (std::size_t r = 0; r < l; ++r) {
    mu_m += ds.at(r, m);
    mu_n += ds.at(r, n);
  }
  mu_m /= l;
  mu_n /= l;
  double smm = 0.0, snn = 0.0, smn = 0.0;
  for (std::size_t r = 0; r < l; ++r) {
    double a = ds.at(r, m) - mu_m, b = ds.at(r, n) - mu_n;
    smm += a * a;
    snn += b * b;
    smn += a * b;
  }
  if (smm == 0.0 || snn == 0.0) {
    throw Error("feature correlation undefined: '" +
                ds.feature_names()[smm == 0.0 ? m : n] + "' has zero variance");
  }
  return std::clamp(smn / std::sqrt(smm * snn), -1.0, 1.0);
}

Dataset RemoveCollinear(const Dataset& ds, double t_cf, const ImportanceVector& imp) {
  CheckUnit(t_cf, "T_cf");
  if (imp.size() != ds.cols()) throw Error("importance vector does not match the features");
  const std::size_t n = ds.cols();
  std::vector<bool> removed(n, false);
  std::vector<FeatureRemoval> audit = ds.audit();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n && !removed[a]; ++b) {
      if (removed[b]) continue;
      double rho = std::abs(FeaturePearson(ds, a, b));
      if (rho <= t_cf) continue;
      std::size_t drop = imp[a] < imp[b] ? a : b;
      removed[drop] = true;
      audit.push_back({ds.feature_names()[drop], "collinear", rho});
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < n; ++f) {
    if (!removed[f]) keep.push_back(f);
  }
  return ds.SelectFeatures(keep).WithAudit(std::move(audit)).WithProvenance("remove_collinear");
}

std::vector<std::size_t> ImportantFeatureIndices(const ImportanceVector& imp, double t_fi) {
  CheckUnit(t_fi, "T_fi");
  if (imp.size() == 0) throw Error("empty importance vector");
  std::vector<std::size_t> order = imp.DescendingOrder();
  double cumulative = 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t f : order) {
    if (!keep.empty() && cumulative >= t_fi - kScoreEps) break;
    cumulative += imp[f];
    keep.push_back(f);
  }
  std::erase_if(keep, [&imp](std::size_t f) { return !(imp[f] > 0.0); });
  if (keep.empty()) throw Error("no feature survives the importance filter");
  std::sort(keep.begin(), keep.end());
  return keep;
}

Dataset RemoveUnimportant(const Dataset& ds, const ImportanceVector& imp, double t_fi) {
  if (imp.size() != ds.cols()) throw Error("importance vector does not match the features");
  std::vector<std::size_t> keep = ImportantFeatureIndices(imp, t_fi);
  std::vector<FeatureRemoval> audit = ds.audit();
  std::size_t k = 0;
  for (std::size_t f = 0; f < ds.cols(); ++f) {
    if (k < keep.size() && keep[k] == f) {
      ++k;
      continue;
    }
    audit.push_back({ds.feature_names()[f], "unimportant", imp[f]});
  }
  return ds.SelectFeatures(keep).WithAudit(std::move(audit)).WithProvenance("remove_unimportant");
}

double LabelMeanQuery::EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const {
  if (records.empty()) throw Error("label mean over an empty scope");
  double s = 0.0;
  for (std::size_t r : records) s += ds.label(r);
  return s / static_cast<double>(records.size());
}

std::optional<std::vector<double>> LabelMeanQuery::ClosedFormDeltas(const Dataset& ds) const {
  std::vector<std::size_t> scope = ResolveScope(ds);
  if (scope.size() < 2) throw Error("label mean: deleting a record leaves an empty scope");
  const double mean = EvaluateOn(ds, scope);
  std::vector<double> deltas(ds.rows(), 0.0);
  const double denom = static_cast<double>(scope.size() - 1);
  for (std::size_t r : scope) deltas[r] = std::abs(ds.label(r) - mean) / denom;
  return deltas;
}

double RecordCountQuery::EvaluateOn(const Dataset&, std::span<const std::size_t> records) const {
  return static_cast<double>(records.size());
}

std::optional<std::vector<double>> RecordCountQuery::ClosedFormDeltas(const Dataset& ds) const {
  std::vector<double> deltas(ds.rows(), 0.0);
  for (std::size_t r : ResolveScope(ds)) deltas[r] = 1.0;
  return deltas;
}

std::unique_ptr<QueryFn> TrainingQuery(TrainingCalibration c) {
  if (c == TrainingCalibration::kLabelMean) return std::make_unique<LabelMeanQuery>();
  return std::make_unique<RecordCountQuery>();
}

double TrainingSensitivity(const CorrelationMatrix& lambda, const Dataset& ds,
                           TrainingCalibration c, bool group) {
  auto query = TrainingQuery(c);
  std::vector<double> deltas = DeletionDeltas(*query, ds);
  if (group) return GroupSensitivity(lambda, deltas);
  return CorrelatedSensitivity(lambda, query->ResolveScope(ds), deltas);
}

std::size_t SimplestWithin(const std::vector<Candidate>& candidates, double tolerance) {
  if (candidates.empty()) throw Error("no candidates to choose from");
  double best = candidates[0].score;
  for (const auto& c : candidates) best = std::max(best, c.score);
  std::size_t choice = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].score < best - tolerance - kScoreEps) continue;
    if (choice == candidates.size() ||
        candidates[i].features.size() < candidates[choice].features.size()) {
      choice = i;
    }
  }
  return choice;
}

FeatureSets BestFeatureSet(const Split& fit_valid, const ImportanceVector& dp_imp,
                           const Learner& learner, const std::vector<std::size_t>& pool) {
  const Dataset& fit = fit_valid.train;
  if (dp_imp.size() != fit.cols()) throw Error("importance vector does not match the features");
  std::set<std::size_t> in_pool(pool.begin(), pool.end());
  if (pool.empty()) {
    for (std::size_t f = 0; f < fit.cols(); ++f) in_pool.insert(f);
  }
  FeatureSets sets;
  std::vector<std::size_t> order = dp_imp.DescendingOrder();
  std::vector<std::size_t> pool_order;
  for (std::size_t f : order) {
    if (f >= fit.cols()) throw Error("pool index out of range");
    if (in_pool.count(f)) pool_order.push_back(f);
  }
  sets.post_filter = Names(fit, order);

  std::size_t best = 0;
  for (std::size_t k = pool_order.size(); k >= 1; --k) {
    Candidate c;
    c.features = Names(fit, std::span(pool_order).first(k));
    try {
      Probe p = FitProbe(fit_valid, c.features, learner);
      c.score = c.nonprivate_score = Accuracy(p.model, p.valid);
    } catch (const Error& e) {
      throw Error("best feature set: training on " + std::to_string(k) +
                  " features failed: " + e.what());
    }
    sets.best_candidates.push_back(std::move(c));
    if (sets.best_candidates.back().score >= sets.best_candidates[best].score) {
      best = sets.best_candidates.size() - 1;
    }
  }
  sets.best = sets.best_candidates[best].features;
  std::set<std::string> chosen(sets.best.begin(), sets.best.end());
  for (const auto& name : sets.post_filter) {
    if (!chosen.count(name)) sets.initial_adjusted.push_back(name);
  }
  sets.adjusted = sets.initial_adjusted;
  return sets;
}

FeatureSets AdjustFeatures(FeatureSets sets, const Split& fit_valid, const SelectionConfig& cfg,
                           const Learner& learner, NoiseSource& src, PrivacyBudget& budget) {
  cfg.Validate();
  const double eps2 = budget.epsilon_2();
  if (!(eps2 > 0.0)) throw Error("adjust features needs a positive epsilon_2");
  if (sets.best.empty()) throw Error("adjust features needs a nonempty best set");

  std::vector<std::vector<std::string>> forward_sets, backward_sets;
  for (std::size_t m = 0; m <= sets.initial_adjusted.size(); ++m) {
    std::vector<std::string> f = sets.best;
    f.insert(f.end(), sets.initial_adjusted.begin(), sets.initial_adjusted.begin() + m);
    forward_sets.push_back(std::move(f));
  }
  for (std::size_t m = 1; m < sets.best.size(); ++m) {
    backward_sets.emplace_back(sets.best.begin(), sets.best.end() - m);
  }

  const std::size_t probes = (forward_sets.size() + backward_sets.size()) * cfg.noise_repeats;
  const double eps_probe = cfg.strict_accounting ? eps2 / static_cast<double>(probes + 1) : eps2;
  sets.release_epsilon = eps_probe;

  sets.forward.clear();
  sets.backward.clear();
  for (std::size_t i = 0; i < forward_sets.size(); ++i) {
    sets.forward.push_back(EvaluateCandidate(fit_valid, std::move(forward_sets[i]), cfg, learner,
                                             eps_probe, src, budget));
  }
  sets.backward.push_back(sets.forward.front());
  for (std::size_t i = 0; i < backward_sets.size(); ++i) {
    sets.backward.push_back(EvaluateCandidate(fit_valid, std::move(backward_sets[i]), cfg,
                                              learner, eps_probe, src, budget));
  }

  sets.forward_choice = SimplestWithin(sets.forward, cfg.score_tolerance);
  sets.backward_choice = SimplestWithin(sets.backward, cfg.score_tolerance);
  const Candidate& a1 = sets.forward[sets.forward_choice];
  const Candidate& a2 = sets.backward[sets.backward_choice];
  sets.forward_chosen = a1.score >= a2.score;
  sets.adjusted = sets.forward_chosen ? a1.features : a2.features;
  return sets;
}

Preparation Prepare(const Dataset& train, const SelectionConfig& cfg, const ForestConfig& forest) {
  cfg.Validate();
  ForestConfig fc = forest;
  fc.seed = DeriveSeed(forest.seed, 0);
  ImportanceVector initial = ForestImportance(train, fc);
  const std::size_t audit_before = train.audit().size();
  Dataset prepared = RemoveCollinear(train, cfg.collinearity_threshold, initial);
  std::vector<FeatureRemoval> collinear(prepared.audit().begin() + audit_before,
                                        prepared.audit().end());

  fc.seed = DeriveSeed(forest.seed, 1);
  ImportanceVector importance = ForestImportance(prepared, fc);

  std::vector<std::size_t> positive;
  std::vector<FeatureRemoval> unimportant;
  for (std::size_t f = 0; f < prepared.cols(); ++f) {
    if (importance[f] > 0.0) {
      positive.push_back(f);
    } else {
      unimportant.push_back({prepared.feature_names()[f], "unimportant", importance[f]});
    }
  }
  if (positive.empty()) throw Error("every feature has zero importance");
  std::vector<std::size_t> core = ImportantFeatureIndices(importance, cfg.importance_threshold);

  Dataset filtered = prepared.SelectFeatures(positive);
  PreprocessConfig split_cfg;
  split_cfg.split_ratio = 1.0 - cfg.validation_fraction;
  split_cfg.seed = DeriveSeed(forest.seed, 2);

  Preparation prep{.prepared = prepared,
                   .importance = importance,
                   .post_filter = Names(prepared, positive),
                   .core = Names(prepared, core),
                   .removed_collinear = std::move(collinear),
                   .removed_unimportant = std::move(unimportant),
                   .fit_valid = TrainTestSplit(filtered, split_cfg)};
  prep.fim_mode = cfg.ResolvedFimMode(filtered.rows());
  fc.seed = DeriveSeed(forest.seed, 3);
  prep.fim_sensitivity = SensitivityFim(filtered, fc, prep.fim_mode);
  return prep;
}

SelectionResult Select(const Preparation& prep, const SelectionConfig& cfg, const Learner& learner,
                       NoiseSource& src, PrivacyBudget& budget) {
  std::vector<std::size_t> columns, pool;
  for (const auto& name : prep.post_filter) columns.push_back(prep.prepared.FeatureIndex(name));
  for (const auto& name : prep.core) {
    auto it = std::find(prep.post_filter.begin(), prep.post_filter.end(), name);
    pool.push_back(static_cast<std::size_t>(it - prep.post_filter.begin()));
  }
  ImportanceVector imp = Renormalized(prep.importance.Select(columns));

  SelectionResult result;
  NoiseSource importance_src = src.Derive(0);
  result.dp_importance = DpImportance(imp, prep.fim_sensitivity, budget.epsilon_1(), importance_src);
  budget.Spend("feature_selection", budget.epsilon_1());

  result.sets = BestFeatureSet(prep.fit_valid, result.dp_importance, learner, pool);
  result.sets.removed_collinear = prep.removed_collinear;
  result.sets.removed_unimportant = prep.removed_unimportant;
  NoiseSource adjust_src = src.Derive(1);
  result.sets = AdjustFeatures(std::move(result.sets), prep.fit_valid, cfg, learner, adjust_src,
                               budget);
  return result;
}

nlohmann::ordered_json SelectionTraceJson(const Preparation& prep, const SelectionResult& result) {
  const FeatureSets& s = result.sets;
  nlohmann::ordered_json j;
  j["prepared"] = prep.prepared.feature_names();
  j["importance"] = ImportanceToJson(prep.importance, prep.prepared.feature_names());
  j["removed_collinear"] = AuditToJson(prep.removed_collinear);
  j["removed_unimportant"] = AuditToJson(prep.removed_unimportant);
  j["post_filter"] = prep.post_filter;
  j["core"] = prep.core;
  j["fim_mode"] = FimModeName(prep.fim_mode);
  j["fim_sensitivity"] = prep.fim_sensitivity;
  j["dp_importance"] = ImportanceToJson(result.dp_importance, prep.post_filter);
  j["dp_uniform_fallback"] = result.dp_importance.uniform_fallback;
  nlohmann::ordered_json best = nlohmann::ordered_json::array();
  for (const auto& c : s.best_candidates) {
    best.push_back({{"n_features", c.features.size()}, {"features", c.features},
                    {"score", c.score}});
  }
  j["best_candidates"] = std::move(best);
  j["best"] = s.best;
  j["initial_adjusted"] = s.initial_adjusted;
  nlohmann::ordered_json fwd = nlohmann::ordered_json::array();
  for (const auto& c : s.forward) fwd.push_back(CandidateJson(c));
  nlohmann::ordered_json bwd = nlohmann::ordered_json::array();
  for (const auto& c : s.backward) bwd.push_back(CandidateJson(c));
  j["forward"] = std::move(fwd);
  j["backward"] = std::move(bwd);
  j["forward_choice"] = s.forward_choice;
  j["backward_choice"] = s.backward_choice;
  j["chosen_pass"] = s.forward_chosen ? "forward" : "backward";
  j["adjusted"] = s.adjusted;
  j["release_epsilon"] = s.release_epsilon;
  return j;
}

}  // namespace crfs
