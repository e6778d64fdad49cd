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

#ifndef CRFS_CORRELATION_H_
#define CRFS_CORRELATION_H_

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crfs/dataset.h"

namespace crfs {

// Pearson correlation of records i and j taken as vectors over the current
// feature set. A record with zero variance has no defined correlation: the
// result is 0 and *degenerate (when given) is set.
double RecordPearson(const Dataset& ds, std::size_t i, std::size_t j,
                     bool* degenerate = nullptr);

// Thresholded record-correlation matrix (the correlated degree matrix).
//
// Invariants: symmetric, unit diagonal, every off-diagonal entry is 0 or has
// magnitude >= threshold.
class CorrelationMatrix {
 public:
  // Applies the threshold to an arbitrary symmetric matrix and forces the
  // diagonal to 1. Throws on asymmetric input or entries outside [-1, 1].
  static CorrelationMatrix FromDense(std::vector<double> theta, std::size_t l,
                                     double threshold);

  std::size_t size() const { return l_; }
  double threshold() const { return threshold_; }
  double operator()(std::size_t i, std::size_t j) const { return theta_[i * l_ + j]; }
  std::span<const double> row(std::size_t i) const { return {theta_.data() + i * l_, l_}; }

  // Records whose Pearson correlation was undefined (zero variance).
  const std::vector<std::size_t>& degenerate_records() const { return degenerate_; }

  // Largest number of nonzero entries in any row (the correlated-group size k,
  // the record itself included).
  std::size_t MaxCorrelatedCount() const;
  std::size_t NonzeroOffDiagonal() const;
  // Mean |theta_ij| over i != j. Used for the correlation-vs-features report.
  double MeanAbsOffDiagonal() const;

  // Dense row-major CSV, 17 significant digits, no header.
  void WriteCsv(std::ostream& out) const;

 private:
  CorrelationMatrix(std::vector<double> theta, std::size_t l, double threshold,
                    std::vector<std::size_t> degenerate);

  std::vector<double> theta_;
  std::size_t l_;
  double threshold_;
  std::vector<std::size_t> degenerate_;

  friend CorrelationMatrix BuildCorrelationMatrix(const Dataset&, double);
};

// theta_ij = RecordPearson(i, j) when |RecordPearson(i, j)| >= threshold,
// otherwise 0; diagonal 1.
CorrelationMatrix BuildCorrelationMatrix(const Dataset& ds, double threshold);

// A real-valued query over a subset of records (its scope q).
class QueryFn {
 public:
  // An empty scope means "every record of the dataset".
  explicit QueryFn(std::optional<std::vector<std::size_t>> scope = std::nullopt)
      : scope_(std::move(scope)) {}
  virtual ~QueryFn() = default;

  // Evaluates on exactly the given records of ds.
  virtual double EvaluateOn(const Dataset& ds, std::span<const std::size_t> records) const = 0;

  // Exact per-record deletion deltas |Q(D) - Q(D^{-j})| for j = 0..l-1, when
  // the query admits a closed form. The default has none.
  virtual std::optional<std::vector<double>> ClosedFormDeltas(const Dataset& ds) const;

  double Evaluate(const Dataset& ds) const;
  std::vector<std::size_t> ResolveScope(const Dataset& ds) const;
  bool has_explicit_scope() const { return scope_.has_value(); }

 private:
  std::optional<std::vector<std::size_t>> scope_;
};

// |Q(D) - Q(D^{-j})| for every record j, re-evaluating the query with record j
// dropped from its scope. O(l) query evaluations.
std::vector<double> NaiveDeletionDeltas(const QueryFn& query, const Dataset& ds);

// Closed form when the query has one, naive otherwise.
std::vector<double> DeletionDeltas(const QueryFn& query, const Dataset& ds);

enum class DeltaPath { kAuto, kNaive };

// max over i in q of sum_j |theta_ij| * |Q(D) - Q(D^{-j})|, j over all records.
double CorrelatedSensitivity(const CorrelationMatrix& lambda, const QueryFn& query,
                             const Dataset& ds, DeltaPath path = DeltaPath::kAuto);
double CorrelatedSensitivity(const CorrelationMatrix& lambda,
                             std::span<const std::size_t> scope,
                             std::span<const double> deltas);

// k * max_j |Q(D) - Q(D^{-j})| with k the largest correlated-group size.
double GroupSensitivity(const CorrelationMatrix& lambda, const QueryFn& query,
                        const Dataset& ds);
double GroupSensitivity(const CorrelationMatrix& lambda, std::span<const double> deltas);

}  // namespace crfs

#endif  // CRFS_CORRELATION_H_
