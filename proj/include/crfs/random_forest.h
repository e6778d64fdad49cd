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

#ifndef CRFS_RANDOM_FOREST_H_
#define CRFS_RANDOM_FOREST_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crfs/dataset.h"
#include "crfs/random.h"

namespace crfs {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_samples_leaf = 2;
  // Candidate features examined per split; 0 means floor(sqrt(N)) (at least 1).
  int features_per_split = 0;
  std::uint64_t seed = 0;

  int ResolvedFeaturesPerSplit(std::size_t n_features) const;
};

// Binary CART tree grown with the Gini criterion.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double positive_fraction = 0.0;
    std::size_t samples = 0;
  };

  // Grows a tree on ds restricted to `sample` (row indices, repeats allowed).
  // `rng` only drives the per-split feature subsampling.
  static DecisionTree Grow(const Dataset& ds, std::span<const std::size_t> sample,
                           const ForestConfig& cfg, NoiseSource& rng);

  // +1 or -1; ties at a leaf go to +1.
  int Predict(std::span<const double> x) const;
  double PositiveFraction(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  // Sum over internal nodes of (n_node / n_root) * impurity decrease, per feature.
  const std::vector<double>& impurity_decrease() const { return decrease_; }

 private:
  std::vector<Node> nodes_;
  std::vector<double> decrease_;
};

class Forest {
 public:
  Forest(std::vector<DecisionTree> trees, std::vector<std::vector<std::size_t>> bootstraps,
         std::size_t n_features, bool single_class);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const std::vector<std::vector<std::size_t>>& bootstraps() const { return bootstraps_; }
  std::size_t n_features() const { return n_features_; }
  // Training data had one class only; the forest is a constant stump.
  bool single_class() const { return single_class_; }

  // Majority vote; ties go to +1.
  int Predict(std::span<const double> x) const;

 private:
  std::vector<DecisionTree> trees_;
  std::vector<std::vector<std::size_t>> bootstraps_;
  std::size_t n_features_;
  bool single_class_;
};

// Draws one bootstrap sample per tree (stream DeriveSeed(seed, 2t)) and grows
// each tree with feature subsampling on stream DeriveSeed(seed, 2t + 1).
Forest TrainForest(const Dataset& ds, const ForestConfig& cfg);

// Same, with caller-supplied bootstrap samples (one per tree).
Forest TrainForestOnSamples(const Dataset& ds, const ForestConfig& cfg,
                            std::vector<std::vector<std::size_t>> bootstraps);

}  // namespace crfs

#endif  // CRFS_RANDOM_FOREST_H_
