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

#include "crfs/random_forest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crfs/common.h"

namespace crfs {
namespace {

double Gini(double pos, double n) {
  if (n <= 0.0) return 0.0;
  double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const ForestConfig& cfg, NoiseSource& rng,
              std::vector<DecisionTree::Node>& nodes, std::vector<double>& decrease)
      : ds_(ds), cfg_(cfg), rng_(rng), nodes_(nodes), decrease_(decrease),
        mtry_(cfg.ResolvedFeaturesPerSplit(ds.cols())) {}

  int Build(std::vector<std::size_t>& sample, int depth, double root_n) {
    const double n = static_cast<double>(sample.size());
    double pos = 0.0;
    for (std::size_t r : sample) pos += ds_.label(r) == 1 ? 1.0 : 0.0;

    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].positive_fraction = n > 0 ? pos / n : 0.0;
    nodes_[id].samples = sample.size();

    const double impurity = Gini(pos, n);
    if (depth >= cfg_.max_depth || impurity == 0.0 ||
        sample.size() < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) {
      return id;
    }

    Candidate best = FindSplit(sample, pos, impurity);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : sample) {
      (ds_.at(r, best.feature) <= best.threshold ? left : right).push_back(r);
    }
    decrease_[best.feature] += (n / root_n) * best.gain;
    sample.clear();
    sample.shrink_to_fit();

    int l = Build(left, depth + 1, root_n);
    int r = Build(right, depth + 1, root_n);
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

 private:
  // Samples mtry features without replacement (partial Fisher-Yates), then
  // scans every boundary between distinct values. First best wins ties.
  Candidate FindSplit(const std::vector<std::size_t>& sample, double pos, double impurity) {
    const std::size_t n_features = ds_.cols();
    std::vector<int> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    for (int k = 0; k < mtry_; ++k) {
      std::size_t j = k + rng_.UniformIndex(n_features - k);
      std::swap(features[k], features[j]);
    }

    const double n = static_cast<double>(sample.size());
    const std::size_t min_leaf = cfg_.min_samples_leaf;
    Candidate best;
    std::vector<std::pair<double, int>> column(sample.size());
    for (int k = 0; k < mtry_; ++k) {
      int f = features[k];
      for (std::size_t s = 0; s < sample.size(); ++s) {
        column[s] = {ds_.at(sample[s], f), ds_.label(sample[s]) == 1 ? 1 : 0};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_pos = 0.0;
      for (std::size_t s = 0; s + 1 < column.size(); ++s) {
        left_pos += column[s].second;
        if (column[s].first == column[s + 1].first) continue;
        std::size_t n_left = s + 1;
        std::size_t n_right = column.size() - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        double nl = static_cast<double>(n_left);
        double nr = static_cast<double>(n_right);
        double child = (nl / n) * Gini(left_pos, nl) + (nr / n) * Gini(pos - left_pos, nr);
        double gain = impurity - child;
        if (gain > best.gain + 1e-15) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (column[s].first + column[s + 1].first);
        }
      }
    }
    return best;
  }

  const Dataset& ds_;
  const ForestConfig& cfg_;
  NoiseSource& rng_;
  std::vector<DecisionTree::Node>& nodes_;
  std::vector<double>& decrease_;
  int mtry_;
};

}  // namespace

int ForestConfig::ResolvedFeaturesPerSplit(std::size_t n_features) const {
  int m = features_per_split > 0
              ? features_per_split
              : static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::clamp(m, 1, static_cast<int>(n_features));
}

DecisionTree DecisionTree::Grow(const Dataset& ds, std::span<const std::size_t> sample,
                                const ForestConfig& cfg, NoiseSource& rng) {
  if (cfg.max_depth < 1 || cfg.min_samples_leaf < 1) {
    throw Error("forest depth and leaf size must be positive");
  }
  if (sample.empty()) throw Error("cannot grow a tree on an empty sample");
  DecisionTree tree;
  tree.decrease_.assign(ds.cols(), 0.0);
  std::vector<std::size_t> rows(sample.begin(), sample.end());
  TreeBuilder builder(ds, cfg, rng, tree.nodes_, tree.decrease_);
  builder.Build(rows, 0, static_cast<double>(sample.size()));
  return tree;
}

double DecisionTree::PositiveFraction(std::span<const double> x) const {
  int id = 0;
  while (nodes_[id].feature >= 0) {
    id = x[nodes_[id].feature] <= nodes_[id].threshold ? nodes_[id].left : nodes_[id].right;
  }
  return nodes_[id].positive_fraction;
}

int DecisionTree::Predict(std::span<const double> x) const {
  return PositiveFraction(x) >= 0.5 ? 1 : -1;
}

Forest::Forest(std::vector<DecisionTree> trees, std::vector<std::vector<std::size_t>> bootstraps,
               std::size_t n_features, bool single_class)
    : trees_(std::move(trees)),
      bootstraps_(std::move(bootstraps)),
      n_features_(n_features),
      single_class_(single_class) {}

int Forest::Predict(std::span<const double> x) const {
  int votes = 0;
  for (const auto& t : trees_) votes += t.Predict(x);
  return votes >= 0 ? 1 : -1;
}

Forest TrainForestOnSamples(const Dataset& ds, const ForestConfig& cfg,
                            std::vector<std::vector<std::size_t>> bootstraps) {
  if (cfg.n_trees < 1) throw Error("forest needs at least one tree");
  if (bootstraps.size() != static_cast<std::size_t>(cfg.n_trees)) {
    throw Error("expected one bootstrap sample per tree");
  }
  auto [neg, pos] = ds.ClassCounts();
  const bool single_class = neg == 0 || pos == 0;
  std::vector<DecisionTree> trees;
  trees.reserve(cfg.n_trees);
  for (int t = 0; t < cfg.n_trees; ++t) {
    NoiseSource rng(DeriveSeed(cfg.seed, 2 * static_cast<std::uint64_t>(t) + 1));
    trees.push_back(DecisionTree::Grow(ds, bootstraps[t], cfg, rng));
  }
  return Forest(std::move(trees), std::move(bootstraps), ds.cols(), single_class);
}

Forest TrainForest(const Dataset& ds, const ForestConfig& cfg) {
  if (cfg.n_trees < 1) throw Error("forest needs at least one tree");
  if (ds.rows() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
    throw Error("too few records (" + std::to_string(ds.rows()) + ") for min_samples_leaf " +
                std::to_string(cfg.min_samples_leaf));
  }
  std::vector<std::vector<std::size_t>> bootstraps(cfg.n_trees);
  for (int t = 0; t < cfg.n_trees; ++t) {
    NoiseSource rng(DeriveSeed(cfg.seed, 2 * static_cast<std::uint64_t>(t)));
    auto& b = bootstraps[t];
    b.resize(ds.rows());
    for (auto& r : b) r = rng.UniformIndex(ds.rows());
  }
  return TrainForestOnSamples(ds, cfg, std::move(bootstraps));
}

}  // namespace crfs
