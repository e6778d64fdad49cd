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

#include "crfs/publishing.h"

#include <algorithm>
#include <cmath>

#include "crfs/common.h"
#include "crfs/mechanisms.h"

namespace crfs {

std::string CompareOpSymbol(CompareOp op) {
  switch (op) {
    case CompareOp::kLess: return "<";
    case CompareOp::kLessEqual: return "<=";
    case CompareOp::kEqual: return "==";
    case CompareOp::kGreaterEqual: return ">=";
    case CompareOp::kGreater: return ">";
  }
  return "?";
}

bool Predicate::Matches(double v) const {
  switch (op) {
    case CompareOp::kLess: return v < constant;
    case CompareOp::kLessEqual: return v <= constant;
    case CompareOp::kEqual: return v == constant;
    case CompareOp::kGreaterEqual: return v >= constant;
    case CompareOp::kGreater: return v > constant;
  }
  return false;
}

AggQuery AggQuery::Count(Predicate predicate, std::optional<std::vector<std::size_t>> scope) {
  std::string feature = predicate.feature;
  return AggQuery(Kind::kCount, std::move(feature), std::move(predicate), std::move(scope));
}

AggQuery AggQuery::Mean(std::string feature, std::optional<std::vector<std::size_t>> scope) {
  Predicate unused{feature, CompareOp::kLessEqual, 0.0};
  return AggQuery(Kind::kMean, std::move(feature), std::move(unused), std::move(scope));
}

std::string AggQuery::Describe() const {
  if (kind_ == Kind::kMean) return "mean(" + feature_ + ")";
  return "count(" + feature_ + " " + CompareOpSymbol(predicate_.op) + " " +
         FormatDouble(predicate_.constant) + ")";
}

std::string KindName(AggQuery::Kind kind) {
  return kind == AggQuery::Kind::kCount ? "count" : "mean";
}

double AggQuery::EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const {
  const std::size_t f = ds.FeatureIndex(feature_);
  if (kind_ == Kind::kCount) {
    double count = 0.0;
    for (std::size_t r : records) count += predicate_.Matches(ds.at(r, f)) ? 1.0 : 0.0;
    return count;
  }
  if (records.empty()) throw Error("mean query over an empty scope");
  double sum = 0.0;
  for (std::size_t r : records) sum += ds.at(r, f);
  return sum / static_cast<double>(records.size());
}

std::optional<std::vector<double>> AggQuery::ClosedFormDeltas(const Dataset& ds) const {
  const std::size_t f = ds.FeatureIndex(feature_);
  std::vector<std::size_t> scope = ResolveScope(ds);
  std::vector<double> deltas(ds.rows(), 0.0);
  if (kind_ == Kind::kCount) {
    for (std::size_t r : scope) deltas[r] = predicate_.Matches(ds.at(r, f)) ? 1.0 : 0.0;
    return deltas;
  }
  if (scope.size() < 2) {
    throw Error("mean query: deleting a record leaves an empty scope");
  }
  const double mean = EvaluateOn(ds, scope);
  const double denom = static_cast<double>(scope.size() - 1);
  for (std::size_t r : scope) deltas[r] = std::abs(ds.at(r, f) - mean) / denom;
  return deltas;
}

AggQuery ParseQuery(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = text.find(':', start)) != std::string::npos; start = pos + 1) {
    parts.push_back(text.substr(start, pos - start));
  }
  parts.push_back(text.substr(start));
  if (parts.size() == 2 && parts[0] == "mean" && !parts[1].empty()) return AggQuery::Mean(parts[1]);
  if (parts.size() == 4 && parts[0] == "count" && !parts[1].empty()) {
    static const std::pair<const char*, CompareOp> kOps[] = {
        {"<", CompareOp::kLess},          {"<=", CompareOp::kLessEqual},
        {"==", CompareOp::kEqual},        {">=", CompareOp::kGreaterEqual},
        {">", CompareOp::kGreater}};
    for (const auto& [sym, op] : kOps) {
      if (parts[2] != sym) continue;
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(parts[3], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != parts[3].size()) {
        throw Error("query '" + text + "': '" + parts[3] + "' is not a number");
      }
      return AggQuery::Count({parts[1], op, value});
    }
    throw Error("query '" + text + "': unknown operator '" + parts[2] + "'");
  }
  throw Error("cannot parse query '" + text +
              "' (expected count:<feature>:<op>:<value> or mean:<feature>)");
}

std::string SchemeName(Scheme scheme) {
  switch (scheme) {
    case Scheme::kNonPrivate: return "nonprivate";
    case Scheme::kGroup: return "group";
    case Scheme::kZhu: return "zhu";
    case Scheme::kCrfs: return "crfs";
  }
  return "?";
}

Scheme ParseScheme(const std::string& name) {
  for (Scheme s : AllSchemes()) {
    if (SchemeName(s) == name) return s;
  }
  throw Error("unknown scheme '" + name + "' (expected nonprivate, group, zhu or crfs)");
}

const std::vector<Scheme>& AllSchemes() {
  static const std::vector<Scheme> kAll = {Scheme::kNonPrivate, Scheme::kGroup, Scheme::kZhu,
                                           Scheme::kCrfs};
  return kAll;
}

double EvaluateQuery(const Dataset& ds, const AggQuery& query) { return query.Evaluate(ds); }

Release DpRelease(const Dataset& ds, const AggQuery& query, const CorrelationMatrix& lambda,
                  double epsilon, Scheme scheme, NoiseSource& src) {
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  Release out;
  out.true_value = query.Evaluate(ds);
  if (scheme == Scheme::kNonPrivate) {
    out.released = out.true_value;
    return out;
  }
  if (lambda.size() != ds.rows()) {
    throw Error("correlation matrix and dataset have different record counts");
  }
  std::vector<double> deltas = DeletionDeltas(query, ds);
  out.sensitivity = scheme == Scheme::kGroup
                        ? GroupSensitivity(lambda, deltas)
                        : CorrelatedSensitivity(lambda, query.ResolveScope(ds), deltas);
  out.released = PerturbValue(out.true_value, out.sensitivity, epsilon, src);
  return out;
}

double QueryReportRow::abs_error() const { return std::abs(released - true_value); }

void QueryReport::Finalize() {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(rows.size());
  for (const auto& r : rows) pairs.emplace_back(r.true_value, r.released);
  mae = Mae(pairs);
}

void QueryReport::WriteCsvHeader(std::ostream& out) {
  out << "query_id,kind,scheme,epsilon,true,released,abs_error,sensitivity,seed\n";
}

void QueryReport::WriteCsvRows(std::ostream& out) const {
  for (const auto& r : rows) {
    out << r.query_id << ',' << KindName(r.kind) << ',' << SchemeName(r.scheme) << ','
        << FormatDouble(r.epsilon) << ',' << FormatDouble(r.true_value) << ','
        << FormatDouble(r.released) << ',' << FormatDouble(r.abs_error()) << ','
        << FormatDouble(r.sensitivity) << ',' << r.seed << '\n';
  }
}

double Mae(std::span<const std::pair<double, double>> true_and_released) {
  if (true_and_released.empty()) throw Error("MAE of an empty query list is undefined");
  double s = 0.0;
  for (const auto& [t, r] : true_and_released) s += std::abs(r - t);
  return s / static_cast<double>(true_and_released.size());
}

double MaeAdjusted(std::span<const AdjustedTriple> triples) {
  if (triples.empty()) throw Error("MAE of an empty query list is undefined");
  double s = 0.0;
  for (const auto& t : triples) s += std::abs(t.released - (t.true_best - t.true_adjusted));
  return s / static_cast<double>(triples.size());
}

std::vector<AggQuery> GenerateWorkload(const Dataset& ds, std::size_t n_count,
                                       std::size_t n_mean, std::uint64_t seed) {
  if (ds.cols() == 0 || ds.rows() == 0) throw Error("cannot build a workload on an empty dataset");
  static constexpr CompareOp kOps[] = {CompareOp::kLess, CompareOp::kLessEqual,
                                       CompareOp::kGreaterEqual, CompareOp::kGreater};
  NoiseSource src(seed);
  std::vector<AggQuery> out;
  out.reserve(n_count + n_mean);
  for (std::size_t q = 0; q < n_count; ++q) {
    std::size_t f = src.UniformIndex(ds.cols());
    std::vector<double> col = ds.column(f);
    std::sort(col.begin(), col.end());
    double quantile = 0.1 + 0.8 * src.Uniform();
    auto pos = static_cast<std::size_t>(std::floor(quantile * (col.size() - 1)));
    CompareOp op = kOps[src.UniformIndex(4)];
    out.push_back(AggQuery::Count({ds.feature_names()[f], op, col[pos]}));
  }
  for (std::size_t q = 0; q < n_mean; ++q) {
    out.push_back(AggQuery::Mean(ds.feature_names()[src.UniformIndex(ds.cols())]));
  }
  return out;
}

}  // namespace crfs
