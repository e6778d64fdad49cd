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

#include "crfs/correlation.h"

#include <algorithm>
#include <cmath>

#include "crfs/common.h"

namespace crfs {
namespace {

// Centred copy of a record; returns false when all entries are equal.
bool CenterRecord(std::span<const double> x, std::vector<double>& out, double& ss) {
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  out.assign(x.begin(), x.end());
  ss = 0.0;
  if (x.empty() || *lo == *hi) return false;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : out) {
    v -= mean;
    ss += v * v;
  }
  return ss > 0.0;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// sxy / sqrt(sxx * syy) is exactly 1 for identical inputs, since
// sqrt(fl(v * v)) == v under round-to-nearest.
double PearsonFromMoments(double sxy, double sxx, double syy) {
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double RecordPearson(const Dataset& ds, std::size_t i, std::size_t j, bool* degenerate) {
  if (i >= ds.rows() || j >= ds.rows()) throw Error("RecordPearson: record index out of range");
  std::vector<double> a, b;
  double saa, sbb;
  bool ok_a = CenterRecord(ds.row(i), a, saa);
  bool ok_b = CenterRecord(ds.row(j), b, sbb);
  if (degenerate != nullptr) *degenerate = !(ok_a && ok_b);
  if (!ok_a || !ok_b) return 0.0;
  return PearsonFromMoments(Dot(a, b), saa, sbb);
}

CorrelationMatrix::CorrelationMatrix(std::vector<double> theta, std::size_t l, double threshold,
                                     std::vector<std::size_t> degenerate)
    : theta_(std::move(theta)), l_(l), threshold_(threshold), degenerate_(std::move(degenerate)) {}

CorrelationMatrix CorrelationMatrix::FromDense(std::vector<double> theta, std::size_t l,
                                               double threshold) {
  if (theta.size() != l * l) throw Error("CorrelationMatrix: expected an l x l matrix");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error("correlation threshold must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      double v = theta[i * l + j];
      if (!(v >= -1.0 && v <= 1.0)) throw Error("CorrelationMatrix: entry outside [-1, 1]");
      if (v != theta[j * l + i]) throw Error("CorrelationMatrix: matrix is not symmetric");
    }
  }
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      double& v = theta[i * l + j];
      if (i == j) {
        v = 1.0;
      } else if (std::abs(v) < threshold) {
        v = 0.0;
      }
    }
  }
  return CorrelationMatrix(std::move(theta), l, threshold, {});
}

std::size_t CorrelationMatrix::MaxCorrelatedCount() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < l_; ++i) {
    auto r = row(i);
    best = std::max<std::size_t>(best, std::count_if(r.begin(), r.end(),
                                                     [](double v) { return v != 0.0; }));
  }
  return best;
}

std::size_t CorrelationMatrix::NonzeroOffDiagonal() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < l_; ++i) {
    for (std::size_t j = 0; j < l_; ++j) {
      if (i != j && theta_[i * l_ + j] != 0.0) ++n;
    }
  }
  return n;
}

double CorrelationMatrix::MeanAbsOffDiagonal() const {
  if (l_ < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < l_; ++i) {
    for (std::size_t j = 0; j < l_; ++j) {
      if (i != j) s += std::abs(theta_[i * l_ + j]);
    }
  }
  return s / static_cast<double>(l_ * (l_ - 1));
}

void CorrelationMatrix::WriteCsv(std::ostream& out) const {
  for (std::size_t i = 0; i < l_; ++i) {
    for (std::size_t j = 0; j < l_; ++j) {
      if (j > 0) out << ',';
      out << FormatDouble(theta_[i * l_ + j]);
    }
    out << '\n';
  }
}

CorrelationMatrix BuildCorrelationMatrix(const Dataset& ds, double threshold) {
  const std::size_t l = ds.rows();
  if (l < 2) throw Error("correlation matrix needs at least 2 records");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error("correlation threshold must lie in [0, 1]");
  }
  const std::size_t n = ds.cols();
  std::vector<double> centered(l * n);
  std::vector<double> ss(l);
  std::vector<char> valid(l);
  std::vector<std::size_t> degenerate;
  std::vector<double> buf;
  for (std::size_t i = 0; i < l; ++i) {
    valid[i] = CenterRecord(ds.row(i), buf, ss[i]);
    if (!valid[i]) degenerate.push_back(i);
    std::copy(buf.begin(), buf.end(), centered.begin() + i * n);
  }

  std::vector<double> theta(l * l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    theta[i * l + i] = 1.0;
    if (!valid[i]) continue;
    std::span<const double> a(centered.data() + i * n, n);
    for (std::size_t j = i + 1; j < l; ++j) {
      if (!valid[j]) continue;
      std::span<const double> b(centered.data() + j * n, n);
      double r = PearsonFromMoments(Dot(a, b), ss[i], ss[j]);
      if (std::abs(r) >= threshold) {
        theta[i * l + j] = r;
        theta[j * l + i] = r;
      }
    }
  }
  return CorrelationMatrix(std::move(theta), l, threshold, std::move(degenerate));
}

std::optional<std::vector<double>> QueryFn::ClosedFormDeltas(const Dataset&) const {
  return std::nullopt;
}

std::vector<std::size_t> QueryFn::ResolveScope(const Dataset& ds) const {
  if (scope_) {
    for (std::size_t r : *scope_) {
      if (r >= ds.rows()) throw Error("query scope references a record outside the dataset");
    }
    return *scope_;
  }
  std::vector<std::size_t> all(ds.rows());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  return all;
}

double QueryFn::Evaluate(const Dataset& ds) const { return EvaluateOn(ds, ResolveScope(ds)); }

std::vector<double> NaiveDeletionDeltas(const QueryFn& query, const Dataset& ds) {
  std::vector<std::size_t> scope = query.ResolveScope(ds);
  const double full = query.EvaluateOn(ds, scope);
  std::vector<double> deltas(ds.rows(), 0.0);
  std::vector<std::size_t> reduced;
  for (std::size_t j = 0; j < ds.rows(); ++j) {
    reduced.clear();
    for (std::size_t r : scope) {
      if (r != j) reduced.push_back(r);
    }
    if (reduced.size() == scope.size()) continue;  // j outside q: Q unchanged
    try {
      deltas[j] = std::abs(full - query.EvaluateOn(ds, reduced));
    } catch (const Error& e) {
      throw Error("query evaluation failed on the neighbour without record " +
                  std::to_string(j) + ": " + e.what());
    }
  }
  return deltas;
}

std::vector<double> DeletionDeltas(const QueryFn& query, const Dataset& ds) {
  if (auto closed = query.ClosedFormDeltas(ds)) return *std::move(closed);
  return NaiveDeletionDeltas(query, ds);
}

double CorrelatedSensitivity(const CorrelationMatrix& lambda,
                             std::span<const std::size_t> scope,
                             std::span<const double> deltas) {
  if (scope.empty()) throw Error("correlated sensitivity needs a nonempty query scope");
  if (deltas.size() != lambda.size()) {
    throw Error("correlation matrix and dataset have different record counts");
  }
  double best = 0.0;
  for (std::size_t i : scope) {
    if (i >= lambda.size()) throw Error("query scope references a record outside the matrix");
    auto theta = lambda.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < deltas.size(); ++j) s += std::abs(theta[j]) * deltas[j];
    best = std::max(best, s);
  }
  return best;
}

double CorrelatedSensitivity(const CorrelationMatrix& lambda, const QueryFn& query,
                             const Dataset& ds, DeltaPath path) {
  if (lambda.size() != ds.rows()) {
    throw Error("correlation matrix and dataset have different record counts");
  }
  std::vector<double> deltas =
      path == DeltaPath::kNaive ? NaiveDeletionDeltas(query, ds) : DeletionDeltas(query, ds);
  return CorrelatedSensitivity(lambda, query.ResolveScope(ds), deltas);
}

double GroupSensitivity(const CorrelationMatrix& lambda, std::span<const double> deltas) {
  if (deltas.size() != lambda.size()) {
    throw Error("correlation matrix and dataset have different record counts");
  }
  double per_record = 0.0;
  for (double d : deltas) per_record = std::max(per_record, d);
  return static_cast<double>(lambda.MaxCorrelatedCount()) * per_record;
}

double GroupSensitivity(const CorrelationMatrix& lambda, const QueryFn& query,
                        const Dataset& ds) {
  if (query.ResolveScope(ds).empty()) throw Error("group sensitivity needs a nonempty query scope");
  return GroupSensitivity(lambda, DeletionDeltas(query, ds));
}

}  // namespace crfs
