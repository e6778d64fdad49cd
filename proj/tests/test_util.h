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

#ifndef CRFS_TESTS_TEST_UTIL_H_
#define CRFS_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crfs/dataset.h"

namespace crfs::testing {

inline std::string DataPath(const std::string& name) {
  return std::string(CRFS_TEST_DATA_DIR) + "/" + name;
}

inline std::vector<std::string> Names(std::size_t n, const std::string& prefix = "f") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Rows of feature values; labels default to alternating +1/-1.
inline Dataset FromRows(const std::vector<std::vector<double>>& rows,
                        std::vector<int> labels = {}) {
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  if (labels.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) labels.push_back(i % 2 == 0 ? 1 : -1);
  }
  std::size_t cols = rows.empty() ? 0 : rows[0].size();
  return Dataset(std::move(values), rows.size(), Names(cols), std::move(labels));
}

// Independent stream for test fixtures; deliberately not crfs::NoiseSource.
class Fixture {
 public:
  explicit Fixture(std::uint32_t seed) : gen_(seed) {}
  double Uniform(double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(gen_); }
  int Int(int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(gen_); }
  double Normal() { return std::normal_distribution<>()(gen_); }
  std::mt19937& gen() { return gen_; }

  // l x n dataset; with probability `dup` a record copies an earlier one
  // (optionally scaled and shifted) so that correlated groups appear.
  Dataset Random(std::size_t l, std::size_t n, double dup = 0.3, bool small_ints = false) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < l; ++i) {
      std::vector<double> r(n);
      if (i > 0 && Uniform(0, 1) < dup) {
        const auto& src = rows[Int(0, static_cast<int>(i) - 1)];
        double a = Uniform(0.5, 2.0), b = Uniform(-1, 1);
        for (std::size_t k = 0; k < n; ++k) r[k] = a * src[k] + b + 0.05 * Normal();
      } else {
        for (auto& v : r) v = small_ints ? Int(0, 4) : Normal();
      }
      rows.push_back(r);
      labels.push_back(Uniform(0, 1) < 0.5 ? 1 : -1);
    }
    return FromRows(rows, labels);
  }

 private:
  std::mt19937 gen_;
};

// Textbook two-pass Pearson, used as the oracle for record and feature
// correlations. NaN when either side is constant.
inline double PearsonOracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0 || syy == 0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> RowOf(const Dataset& ds, std::size_t i) {
  auto r = ds.row(i);
  return {r.begin(), r.end()};
}

}  // namespace crfs::testing

#endif  // CRFS_TESTS_TEST_UTIL_H_
