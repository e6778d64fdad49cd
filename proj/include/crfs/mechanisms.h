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

#ifndef CRFS_MECHANISMS_H_
#define CRFS_MECHANISMS_H_

#include <span>
#include <string>
#include <vector>

#include "crfs/random.h"
#include "json.hpp"

namespace crfs {

// Inverse CDF of Laplace(0, scale) at u in (0, 1).
double LaplaceFromUniform(double u, double scale);

// One Laplace(0, scale) draw by inverse-CDF sampling; advances src by one.
double LaplaceSample(double scale, NoiseSource& src);

// x + Laplace(sensitivity / epsilon). sensitivity == 0 returns x exactly and
// consumes no randomness.
double PerturbValue(double x, double sensitivity, double epsilon, NoiseSource& src);

// Independent Laplace(l1_sensitivity / epsilon) on every coordinate: the whole
// vector is calibrated to its L1 sensitivity, not split per coordinate.
std::vector<double> PerturbVector(std::span<const double> v, double l1_sensitivity,
                                  double epsilon, NoiseSource& src);

// Total epsilon, its selection/release split and an append-only spend ledger.
// Spending past the total is a hard failure.
class PrivacyBudget {
 public:
  struct Entry {
    std::string label;
    double epsilon;
  };

  static constexpr double kTolerance = 1e-12;

  // epsilon_1 = selection_fraction * total, epsilon_2 = total - epsilon_1.
  explicit PrivacyBudget(double epsilon_total, double selection_fraction = 0.5);

  double epsilon_total() const { return total_; }
  double epsilon_1() const { return eps1_; }
  double epsilon_2() const { return eps2_; }
  double spent() const { return spent_; }
  double remaining() const { return total_ - spent_; }
  const std::vector<Entry>& ledger() const { return ledger_; }

  // Appends (label, epsilon); throws crfs::Error if the total would be
  // exceeded by more than kTolerance.
  PrivacyBudget& Spend(const std::string& label, double epsilon);

  nlohmann::json ToJson() const;

 private:
  double total_;
  double eps1_;
  double eps2_;
  double spent_ = 0.0;
  std::vector<Entry> ledger_;
};

// Functional form of PrivacyBudget::Spend.
PrivacyBudget Spend(PrivacyBudget budget, const std::string& label, double epsilon);

}  // namespace crfs

#endif  // CRFS_MECHANISMS_H_
