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

#include "crfs/mechanisms.h"

#include <cmath>

#include "crfs/common.h"

namespace crfs {

double LaplaceFromUniform(double u, double scale) {
  if (!(scale > 0.0)) throw Error("Laplace scale must be positive");
  if (!(u > 0.0 && u < 1.0)) throw Error("Laplace inverse CDF needs u in (0, 1)");
  double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  double sign = centered < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(centered));
}

double LaplaceSample(double scale, NoiseSource& src) {
  if (!(scale > 0.0)) throw Error("Laplace scale must be positive");
  return LaplaceFromUniform(src.Uniform(), scale);
}

double PerturbValue(double x, double sensitivity, double epsilon, NoiseSource& src) {
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(sensitivity >= 0.0)) throw Error("sensitivity must be nonnegative");
  if (sensitivity == 0.0) return x;
  return x + LaplaceSample(sensitivity / epsilon, src);
}

std::vector<double> PerturbVector(std::span<const double> v, double l1_sensitivity,
                                  double epsilon, NoiseSource& src) {
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = PerturbValue(x, l1_sensitivity, epsilon, src);
  return out;
}

PrivacyBudget::PrivacyBudget(double epsilon_total, double selection_fraction)
    : total_(epsilon_total) {
  if (!(epsilon_total > 0.0)) throw Error("total epsilon must be positive");
  if (!(selection_fraction > 0.0 && selection_fraction < 1.0)) {
    throw Error("selection fraction must lie in (0, 1)");
  }
  eps1_ = selection_fraction * epsilon_total;
  eps2_ = epsilon_total - eps1_;
}

PrivacyBudget& PrivacyBudget::Spend(const std::string& label, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("spend '" + label + "': epsilon must be positive");
  if (spent_ + epsilon > total_ + kTolerance) {
    throw Error("privacy budget exhausted: spending " + FormatDouble(epsilon) + " on '" + label +
                "' would exceed the total " + FormatDouble(total_) + " (already spent " +
                FormatDouble(spent_) + ")");
  }
  ledger_.push_back({label, epsilon});
  spent_ += epsilon;
  return *this;
}

nlohmann::json PrivacyBudget::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ledger_) entries.push_back({{"label", e.label}, {"epsilon", e.epsilon}});
  return {{"epsilon_total", total_},
          {"epsilon_1", eps1_},
          {"epsilon_2", eps2_},
          {"spent", spent_},
          {"ledger", entries}};
}

PrivacyBudget Spend(PrivacyBudget budget, const std::string& label, double epsilon) {
  budget.Spend(label, epsilon);
  return budget;
}

}  // namespace crfs
