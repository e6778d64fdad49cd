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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crfs/common.h"
#include "crfs/importance.h"
#include "crfs/random.h"
#include "crfs/random_forest.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace crfs {
namespace {

using testing::FromRows;

// Label = sign of feature `signal`; other features are noise.
Dataset Planted(std::size_t l, std::size_t n, std::size_t signal, std::uint32_t seed) {
  testing::Fixture fx(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < l; ++i) {
    std::vector<double> r(n);
    for (auto& v : r) v = fx.Normal();
    rows.push_back(r);
    labels.push_back(r[signal] > 0 ? 1 : -1);
  }
  return FromRows(rows, labels);
}

// Exhaustive depth-limited CART over every feature and every midpoint.
struct OracleTree {
  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1, right = -1;
    double pos_frac = 0;
  };
  std::vector<Node> nodes;
  std::vector<double> decrease;

  static double Gini(double p, double n) { return n == 0 ? 0 : 2 * (p / n) * (1 - p / n); }

  int Build(const Dataset& ds, const std::vector<std::size_t>& s, int depth, int max_depth,
            std::size_t min_leaf, double root) {
    double n = s.size(), pos = 0;
    for (auto r : s) pos += ds.label(r) == 1;
    int id = nodes.size();
    nodes.push_back({});
    nodes[id].pos_frac = pos / n;
    double imp = Gini(pos, n);
    if (depth >= max_depth || imp == 0 || s.size() < 2 * min_leaf) return id;
    double best_gain = 0;
    int best_f = -1;
    double best_t = 0;
    for (std::size_t f = 0; f < ds.cols(); ++f) {
      std::vector<double> vals;
      for (auto r : s) vals.push_back(ds.at(r, f));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        double t = 0.5 * (vals[k] + vals[k + 1]);
        double nl = 0, pl = 0;
        for (auto r : s) {
          if (ds.at(r, f) <= t) {
            ++nl;
            pl += ds.label(r) == 1;
          }
        }
        double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double gain = imp - (nl / n) * Gini(pl, nl) - (nr / n) * Gini(pos - pl, nr);
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_f = f;
          best_t = t;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> L, R;
    for (auto r : s) (ds.at(r, best_f) <= best_t ? L : R).push_back(r);
    decrease[best_f] += (n / root) * best_gain;
    int l = Build(ds, L, depth + 1, max_depth, min_leaf, root);
    int rr = Build(ds, R, depth + 1, max_depth, min_leaf, root);
    nodes[id].feature = best_f;
    nodes[id].threshold = best_t;
    nodes[id].left = l;
    nodes[id].right = rr;
    return id;
  }

  int Predict(std::span<const double> x) const {
    int id = 0;
    while (nodes[id].feature >= 0)
      id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
    return nodes[id].pos_frac >= 0.5 ? 1 : -1;
  }
};

TEST(Forest, PerfectlyInformativeFeatureRanksFirst) {
  Dataset ds = Planted(200, 5, 1, 1);
  ImportanceVector imp = ForestImportance(ds, {.n_trees = 30, .seed = 3});
  EXPECT_EQ(imp.DescendingOrder()[0], 1u);
}

TEST(Forest, DeterministicUnderSeed) {
  Dataset ds = Planted(80, 4, 0, 2);
  ForestConfig cfg{.n_trees = 10, .seed = 5};
  Forest a = TrainForest(ds, cfg), b = TrainForest(ds, cfg);
  EXPECT_EQ(a.bootstraps(), b.bootstraps());
  EXPECT_EQ(GiniImportance(a).values, GiniImportance(b).values);
  for (std::size_t t = 0; t < a.trees().size(); ++t)
    EXPECT_EQ(a.trees()[t].nodes().size(), b.trees()[t].nodes().size());
}

TEST(Forest, MatchesExhaustiveCartOnSameBootstraps) {
  testing::Fixture fx(4);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    double a = fx.Uniform(-1, 1), b = fx.Uniform(-1, 1);
    rows.push_back({a, b});
    labels.push_back(a + 0.5 * b + 0.3 * fx.Normal() > 0 ? 1 : -1);
  }
  Dataset ds = FromRows(rows, labels);
  ForestConfig cfg{.n_trees = 10, .max_depth = 3, .min_samples_leaf = 2,
                   .features_per_split = 2, .seed = 9};
  Forest forest = TrainForest(ds, cfg);
  for (std::size_t t = 0; t < forest.trees().size(); ++t) {
    OracleTree oracle;
    oracle.decrease.assign(2, 0.0);
    const auto& boot = forest.bootstraps()[t];
    oracle.Build(ds, boot, 0, cfg.max_depth, cfg.min_samples_leaf, boot.size());
    for (std::size_t f = 0; f < 2; ++f)
      EXPECT_NEAR(forest.trees()[t].impurity_decrease()[f], oracle.decrease[f], 1e-12);
    for (int q = 0; q < 200; ++q) {
      std::vector<double> x{fx.Uniform(-1.2, 1.2), fx.Uniform(-1.2, 1.2)};
      EXPECT_EQ(forest.trees()[t].Predict(x), oracle.Predict(x));
    }
  }
}

TEST(Forest, InvariantToRecordOrderGivenBootstraps) {
  Dataset ds = Planted(40, 3, 2, 6);
  ForestConfig cfg{.n_trees = 8, .features_per_split = 3, .seed = 1};
  Forest base = TrainForest(ds, cfg);
  std::vector<std::size_t> perm(ds.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Dataset shuffled = ds.SelectRecords(perm);
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inverse[perm[k]] = k;
  auto boots = base.bootstraps();
  for (auto& b : boots)
    for (auto& r : b) r = inverse[r];
  Forest moved = TrainForestOnSamples(shuffled, cfg, boots);
  auto a = GiniImportance(base).values, b = GiniImportance(moved).values;
  for (std::size_t f = 0; f < a.size(); ++f) EXPECT_NEAR(a[f], b[f], 1e-12);
}

TEST(Forest, SingleClassGivesFlaggedStump) {
  Dataset ds = FromRows({{1, 2}, {2, 3}, {3, 1}, {4, 4}}, {1, 1, 1, 1});
  Forest f = TrainForest(ds, {.n_trees = 3});
  EXPECT_TRUE(f.single_class());
  ImportanceVector imp = GiniImportance(f);
  EXPECT_TRUE(imp.uniform_fallback);
  EXPECT_EQ(f.Predict(ds.row(0)), 1);
}

TEST(Forest, ErrorPaths) {
  Dataset ds = FromRows({{1}, {2}, {3}});
  EXPECT_THROW(TrainForest(ds, {.n_trees = 0}), Error);
  EXPECT_THROW(TrainForest(ds, {.min_samples_leaf = 2}), Error);
  EXPECT_THROW(TrainForestOnSamples(ds, {.n_trees = 2}, {{0, 1, 2}}), Error);
}

TEST(GiniImportance, SingleFeatureIsOne) {
  Dataset ds = Planted(30, 1, 0, 7);
  EXPECT_EQ(ForestImportance(ds, {.n_trees = 5}).values, (std::vector<double>{1.0}));
}

TEST(GiniImportance, NoiseFeatureRanksBelowSignal) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Dataset ds = Planted(100, 2, 0, 100 + seed);
    ImportanceVector imp = ForestImportance(ds, {.n_trees = 20, .seed = seed});
    wins += imp[1] < imp[0];
  }
  EXPECT_GE(wins, 18);
}

TEST(GiniImportance, SumsToOneAndNonnegative) {
  testing::Fixture fx(8);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset ds = fx.Random(fx.Int(6, 60), fx.Int(1, 6), 0.2);
    ImportanceVector imp = ForestImportance(ds, {.n_trees = 5, .seed = (std::uint64_t)trial});
    double s = 0;
    for (double v : imp.values) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_TRUE(imp.normalized);
  }
}

TEST(RecordSensitivityFim, SingleFeatureAndScanOracle) {
  ForestConfig cfg{.n_trees = 10, .seed = 2};
  EXPECT_EQ(RecordSensitivityFim(Planted(20, 1, 0, 3), 4, cfg), 0.0);
  Dataset ds = Planted(30, 4, 2, 9);
  for (std::size_t i : {0u, 7u, 29u}) {
    ImportanceVector imp = ForestImportance(ds.WithoutRecord(i), cfg);
    double lo = imp[0], hi = imp[0];
    for (double v : imp.values) {
      lo = v < lo ? v : lo;
      hi = v > hi ? v : hi;
    }
    double got = RecordSensitivityFim(ds, i, cfg);
    EXPECT_DOUBLE_EQ(got, hi - lo);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(SensitivityFim, BoundAndExactBruteForce) {
  ForestConfig cfg{.n_trees = 10, .min_samples_leaf = 1, .seed = 4};
  Dataset ds = Planted(10, 3, 0, 11);
  EXPECT_EQ(SensitivityFim(ds, cfg, FimSensitivityMode::kBound), 1.0);
  double brute = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    ImportanceVector imp = ForestImportance(ds.WithoutRecord(i), cfg);
    auto [lo, hi] = std::minmax_element(imp.values.begin(), imp.values.end());
    brute = std::max(brute, *hi - *lo);
  }
  double exact = SensitivityFim(ds, cfg, FimSensitivityMode::kExact);
  EXPECT_DOUBLE_EQ(exact, brute);
  EXPECT_LE(exact, 1.0);
  EXPECT_THROW(SensitivityFim(FromRows({{1}, {2}}), cfg, FimSensitivityMode::kExact), Error);
}

TEST(SensitivityFim, IdenticalRecordsGiveTheSingleDeletionRange) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({1.0, 2.0, 0.5});
    labels.push_back(1);
  }
  Dataset ds = FromRows(rows, labels);
  ForestConfig cfg{.n_trees = 4, .min_samples_leaf = 1};
  EXPECT_EQ(SensitivityFim(ds, cfg, FimSensitivityMode::kExact),
            RecordSensitivityFim(ds, 0, cfg));
}

TEST(DpImportance, ZeroSensitivityIsIdentity) {
  ImportanceVector imp = Renormalized({.values = {0.5, 0.3, 0.2}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    NoiseSource src(seed);
    EXPECT_EQ(DpImportance(imp, 0.0, 0.5, src).values, imp.values);
  }
}

TEST(DpImportance, AlwaysNormalisedAndNonnegative) {
  testing::Fixture fx(12);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> raw(fx.Int(1, 12));
    for (auto& v : raw) v = fx.Uniform(0, 1);
    ImportanceVector imp = Renormalized({.values = raw});
    NoiseSource src(trial);
    ImportanceVector out = DpImportance(imp, fx.Uniform(0, 2), fx.Uniform(0.01, 5), src);
    double s = 0;
    for (double v : out.values) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_TRUE(out.normalized);
  }
}

TEST(DpImportance, AllClampedFallsBackToUniform) {
  ImportanceVector imp = Renormalized({.values = {0.5, 0.5}});
  bool seen = false;
  for (std::uint64_t seed = 0; seed < 200 && !seen; ++seed) {
    NoiseSource src(seed);
    ImportanceVector out = DpImportance(imp, 1.0, 0.05, src);
    if (out.uniform_fallback) {
      seen = true;
      EXPECT_EQ(out.values, (std::vector<double>{0.5, 0.5}));
    }
  }
  EXPECT_TRUE(seen);
}

TEST(DpImportance, ErrorPaths) {
  NoiseSource src(0);
  ImportanceVector raw{.values = {0.5, 0.5}};
  EXPECT_THROW(DpImportance(raw, 1.0, 1.0, src), Error);
  ImportanceVector imp = Renormalized(raw);
  EXPECT_THROW(DpImportance(imp, 1.0, 0.0, src), Error);
  EXPECT_THROW(DpImportance(imp, -1.0, 1.0, src), Error);
}

double Spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = k;
    return r;
  };
  return testing::PearsonOracle(ranks(a), ranks(b));
}

TEST(DpImportance, RankStableAtLargeEpsilon) {
  ImportanceVector imp = Renormalized({.values = {0.30, 0.25, 0.18, 0.13, 0.09, 0.05}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    NoiseSource src(seed);
    ImportanceVector out = DpImportance(imp, 0.1, 100.0, src);
    EXPECT_GE(Spearman(imp.values, out.values), 0.9) << "seed " << seed;
  }
}

TEST(ImportanceToJson, KeepsFeatureOrder) {
  ImportanceVector imp = Renormalized({.values = {1, 3}});
  auto j = ImportanceToJson(imp, {"b", "a"});
  EXPECT_EQ(j.begin().key(), "b");
  EXPECT_DOUBLE_EQ(j["a"].get<double>(), 0.75);
  EXPECT_THROW(ImportanceToJson(imp, {"a"}), Error);
}

}  // namespace
}  // namespace crfs
