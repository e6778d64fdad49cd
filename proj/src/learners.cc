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

#include "crfs/learners.h"

#include <cmath>

#include "crfs/common.h"
#include "crfs/mechanisms.h"

namespace crfs {
namespace {

constexpr int kDivergenceWindow = 10;

double Margin(std::span<const double> params, std::span<const double> x) {
  const std::size_t n = x.size();
  double s = params[n];
  for (std::size_t k = 0; k < n; ++k) s += params[k] * x[k];
  return s;
}

double L2Term(std::span<const double> params, std::size_t n, double l2) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += params[k] * params[k];
  return 0.5 * l2 * s;
}

void CheckParams(std::span<const double> params, const Dataset& ds) {
  if (params.size() != ds.cols() + 1) throw Error("parameter vector must have N + 1 entries");
  if (ds.rows() == 0) throw Error("objective needs at least one record");
}

// log(1 + exp(-z)) without overflow.
double Softplus(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

// 1 / (1 + exp(z)), the derivative magnitude of Softplus at z.
double Sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

using GradientFn = std::vector<double> (*)(std::span<const double>, const Dataset&, double);
using LossFn = double (*)(std::span<const double>, const Dataset&, double);

LinearModel Descend(LearnerKind kind, const Dataset& ds, const TrainConfig& cfg, LossFn loss,
                    GradientFn grad, TrainingTrace* trace) {
  if (!(cfg.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (cfg.epochs < 1) throw Error("epochs must be at least 1");
  if (!(cfg.l2 >= 0.0)) throw Error("regularisation must be nonnegative");
  if (ds.rows() == 0) throw Error("cannot train on an empty dataset");

  LinearModel model;
  model.kind = kind;
  model.feature_names = ds.feature_names();
  model.weights.assign(ds.cols(), 0.0);

  auto [neg, pos] = ds.ClassCounts();
  if (neg == 0 || pos == 0) {
    model.bias = pos > 0 ? 1.0 : -1.0;
    model.constant_predictor = true;
    return model;
  }

  std::vector<double> params(ds.cols() + 1, 0.0);
  double previous = loss(params, ds, cfg.l2);
  if (trace != nullptr) trace->loss.assign(1, previous);
  int rising = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> g = grad(params, ds, cfg.l2);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= cfg.learning_rate * g[k];
    double current = loss(params, ds, cfg.l2);
    if (!std::isfinite(current)) throw Error("training diverged: objective is not finite");
    if (trace != nullptr) trace->loss.push_back(current);
    rising = current > previous ? rising + 1 : 0;
    if (rising >= kDivergenceWindow) {
      throw Error("training diverged: objective rose for " + std::to_string(kDivergenceWindow) +
                  " consecutive epochs (epoch " + std::to_string(epoch + 1) + ", objective " +
                  FormatDouble(current) + ", learning rate " + FormatDouble(cfg.learning_rate) +
                  ")");
    }
    previous = current;
  }
  model.weights.assign(params.begin(), params.end() - 1);
  model.bias = params.back();
  return model;
}

}  // namespace

std::string LearnerName(LearnerKind kind) {
  return kind == LearnerKind::kLogistic ? "lr" : "svm";
}

LearnerKind ParseLearner(const std::string& name) {
  if (name == "lr" || name == "logistic") return LearnerKind::kLogistic;
  if (name == "svm" || name == "linear-svm") return LearnerKind::kLinearSvm;
  throw Error("unknown learner '" + name + "' (expected lr or svm)");
}

double LinearModel::Score(std::span<const double> x) const {
  if (x.size() != weights.size()) throw Error("feature count does not match the model");
  double s = bias;
  for (std::size_t k = 0; k < x.size(); ++k) s += weights[k] * x[k];
  return s;
}

double LogisticLoss(std::span<const double> params, const Dataset& ds, double l2) {
  CheckParams(params, ds);
  double s = 0.0;
  for (std::size_t r = 0; r < ds.rows(); ++r) s += Softplus(ds.label(r) * Margin(params, ds.row(r)));
  return s / ds.rows() + L2Term(params, ds.cols(), l2);
}

std::vector<double> LogisticGradient(std::span<const double> params, const Dataset& ds,
                                     double l2) {
  CheckParams(params, ds);
  const std::size_t n = ds.cols();
  std::vector<double> g(n + 1, 0.0);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto x = ds.row(r);
    double y = ds.label(r);
    double coef = -y * Sigmoid(y * Margin(params, x));
    for (std::size_t k = 0; k < n; ++k) g[k] += coef * x[k];
    g[n] += coef;
  }
  for (std::size_t k = 0; k <= n; ++k) g[k] /= ds.rows();
  for (std::size_t k = 0; k < n; ++k) g[k] += l2 * params[k];
  return g;
}

double HingeLoss(std::span<const double> params, const Dataset& ds, double l2) {
  CheckParams(params, ds);
  double s = 0.0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    s += std::max(0.0, 1.0 - ds.label(r) * Margin(params, ds.row(r)));
  }
  return s / ds.rows() + L2Term(params, ds.cols(), l2);
}

std::vector<double> HingeSubgradient(std::span<const double> params, const Dataset& ds,
                                     double l2) {
  CheckParams(params, ds);
  const std::size_t n = ds.cols();
  std::vector<double> g(n + 1, 0.0);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto x = ds.row(r);
    double y = ds.label(r);
    if (y * Margin(params, x) < 1.0) {
      for (std::size_t k = 0; k < n; ++k) g[k] -= y * x[k];
      g[n] -= y;
    }
  }
  for (std::size_t k = 0; k <= n; ++k) g[k] /= ds.rows();
  for (std::size_t k = 0; k < n; ++k) g[k] += l2 * params[k];
  return g;
}

LinearModel TrainLogistic(const Dataset& ds, const TrainConfig& cfg, TrainingTrace* trace) {
  return Descend(LearnerKind::kLogistic, ds, cfg, &LogisticLoss, &LogisticGradient, trace);
}

LinearModel TrainSvm(const Dataset& ds, const TrainConfig& cfg, TrainingTrace* trace) {
  return Descend(LearnerKind::kLinearSvm, ds, cfg, &HingeLoss, &HingeSubgradient, trace);
}

LinearModel Train(LearnerKind kind, const Dataset& ds, const TrainConfig& cfg) {
  return kind == LearnerKind::kLogistic ? TrainLogistic(ds, cfg) : TrainSvm(ds, cfg);
}

LinearModel PerturbModel(const LinearModel& model, double sensitivity, double epsilon,
                         NoiseSource& src) {
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  LinearModel out = model;
  if (sensitivity == 0.0) return out;
  out.weights = PerturbVector(model.weights, sensitivity, epsilon, src);
  out.bias = PerturbValue(model.bias, sensitivity, epsilon, src);
  return out;
}

double Accuracy(const LinearModel& model, const Dataset& test) {
  if (test.feature_names() != model.feature_names) {
    throw Error("test features do not match the model's features");
  }
  if (test.rows() == 0) throw Error("accuracy of an empty test set is undefined");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    if (model.Predict(test.row(r)) == test.label(r)) ++correct;
  }
  return static_cast<double>(correct) / test.rows();
}

nlohmann::json ModelToJson(const LinearModel& model) {
  return {{"kind", LearnerName(model.kind)},
          {"features", model.feature_names},
          {"weights", model.weights},
          {"bias", model.bias}};
}

}  // namespace crfs
