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

#ifndef CRFS_LEARNERS_H_
#define CRFS_LEARNERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crfs/dataset.h"
#include "crfs/random.h"
#include "json.hpp"

namespace crfs {

enum class LearnerKind { kLogistic, kLinearSvm };

std::string LearnerName(LearnerKind kind);
LearnerKind ParseLearner(const std::string& name);

struct LinearModel {
  LearnerKind kind = LearnerKind::kLogistic;
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  // Training labels were all one class; the model is the constant predictor.
  bool constant_predictor = false;

  double Score(std::span<const double> x) const;
  // sign(w.x + b) with sign(0) = +1.
  int Predict(std::span<const double> x) const { return Score(x) >= 0.0 ? 1 : -1; }
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
};

// Regularised objectives over ds, with parameters packed as [w..., b]. The
// bias is not regularised.
double LogisticLoss(std::span<const double> params, const Dataset& ds, double l2);
std::vector<double> LogisticGradient(std::span<const double> params, const Dataset& ds,
                                     double l2);
double HingeLoss(std::span<const double> params, const Dataset& ds, double l2);
// Subgradient; records with margin exactly 1 contribute nothing.
std::vector<double> HingeSubgradient(std::span<const double> params, const Dataset& ds,
                                     double l2);

// Per-epoch objective values, recorded before each update and after the last.
struct TrainingTrace {
  std::vector<double> loss;
};

// Full-batch gradient descent from the zero vector. Throws if the objective
// rises for 10 consecutive epochs.
LinearModel TrainLogistic(const Dataset& ds, const TrainConfig& cfg,
                          TrainingTrace* trace = nullptr);
LinearModel TrainSvm(const Dataset& ds, const TrainConfig& cfg, TrainingTrace* trace = nullptr);
LinearModel Train(LearnerKind kind, const Dataset& ds, const TrainConfig& cfg);

struct Learner {
  LearnerKind kind = LearnerKind::kLinearSvm;
  TrainConfig config;

  LinearModel Fit(const Dataset& ds) const { return Train(kind, ds, config); }
};

// Output perturbation: independent Laplace(sensitivity / epsilon) on every
// weight and on the bias.
LinearModel PerturbModel(const LinearModel& model, double sensitivity, double epsilon,
                         NoiseSource& src);

// Fraction of records whose predicted sign matches the label. The test set
// must carry the model's features in the model's order.
double Accuracy(const LinearModel& model, const Dataset& test);

nlohmann::json ModelToJson(const LinearModel& model);

}  // namespace crfs

#endif  // CRFS_LEARNERS_H_
