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

#ifndef CRFS_PUBLISHING_H_
#define CRFS_PUBLISHING_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crfs/correlation.h"
#include "crfs/dataset.h"
#include "crfs/random.h"

namespace crfs {

enum class CompareOp { kLess, kLessEqual, kEqual, kGreaterEqual, kGreater };

std::string CompareOpSymbol(CompareOp op);

struct Predicate {
  std::string feature;
  CompareOp op = CompareOp::kLessEqual;
  double constant = 0.0;

  bool Matches(double value) const;
};

// Count of scoped records satisfying a one-feature predicate, or mean of one
// feature over the scope. Features are resolved by name, so the same query
// runs on any projection that keeps the referenced feature.
class AggQuery : public QueryFn {
 public:
  enum class Kind { kCount, kMean };

  static AggQuery Count(Predicate predicate,
                        std::optional<std::vector<std::size_t>> scope = std::nullopt);
  static AggQuery Mean(std::string feature,
                       std::optional<std::vector<std::size_t>> scope = std::nullopt);

  Kind kind() const { return kind_; }
  const std::string& feature() const { return feature_; }
  const Predicate& predicate() const { return predicate_; }
  std::string Describe() const;

  double EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const override;
  // Count: 1 for scoped records matching the predicate. Mean over m scoped
  // records: |x_j - mean| / (m - 1).
  std::optional<std::vector<double>> ClosedFormDeltas(const Dataset& ds) const override;

 private:
  AggQuery(Kind kind, std::string feature, Predicate predicate,
           std::optional<std::vector<std::size_t>> scope)
      : QueryFn(std::move(scope)),
        kind_(kind),
        feature_(std::move(feature)),
        predicate_(std::move(predicate)) {}

  Kind kind_;
  std::string feature_;
  Predicate predicate_;
};

std::string KindName(AggQuery::Kind kind);

// "count:<feature>:<op>:<value>" with op one of < <= == >= >, or
// "mean:<feature>".
AggQuery ParseQuery(const std::string& text);

enum class Scheme { kNonPrivate, kGroup, kZhu, kCrfs };

std::string SchemeName(Scheme scheme);
Scheme ParseScheme(const std::string& name);
const std::vector<Scheme>& AllSchemes();

struct Release {
  double true_value = 0.0;
  double released = 0.0;
  double sensitivity = 0.0;
};

// Exact query answer (same as query.Evaluate).
double EvaluateQuery(const Dataset& ds, const AggQuery& query);

// Releases the query under `scheme`. lambda must be built on the records of ds
// over the feature set that shapes the scheme. Non-private returns the true
// value; group calibrates to GroupSensitivity; zhu and crfs to
// CorrelatedSensitivity.
Release DpRelease(const Dataset& ds, const AggQuery& query, const CorrelationMatrix& lambda,
                  double epsilon, Scheme scheme, NoiseSource& src);

struct QueryReportRow {
  std::size_t query_id = 0;
  AggQuery::Kind kind = AggQuery::Kind::kCount;
  Scheme scheme = Scheme::kNonPrivate;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double true_value = 0.0;
  double released = 0.0;
  double sensitivity = 0.0;
  double abs_error() const;
};

struct QueryReport {
  std::vector<QueryReportRow> rows;
  double mae = 0.0;

  // Recomputes mae from the rows.
  void Finalize();
  // Columns: query_id,kind,scheme,epsilon,true,released,abs_error,sensitivity,seed
  static void WriteCsvHeader(std::ostream& out);
  void WriteCsvRows(std::ostream& out) const;
};

// (1/|Q|) sum |released - true|.
double Mae(std::span<const std::pair<double, double>> true_and_released);

struct AdjustedTriple {
  double released = 0.0;      // perturbed answer
  double true_best = 0.0;     // Q_i(x), true answer on the best set
  double true_adjusted = 0.0; // Q_i^o(x), correction term
};

// (1/|Q|) sum |released - (true_best - true_adjusted)|.
double MaeAdjusted(std::span<const AdjustedTriple> triples);

// Seeded workload: `n_count` count queries (random feature, random operator,
// threshold at a random observed quantile in [0.1, 0.9]) followed by
// `n_mean` mean queries over random features. Scope is every record.
std::vector<AggQuery> GenerateWorkload(const Dataset& ds, std::size_t n_count,
                                       std::size_t n_mean, std::uint64_t seed);

}  // namespace crfs

#endif  // CRFS_PUBLISHING_H_
