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

#include "crfs/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "crfs/common.h"
#include "crfs/random.h"

namespace crfs {
namespace {

double Gaussian(NoiseSource& src) {
  double u1 = src.Uniform(), u2 = src.Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (records < 2 || features < 2) throw Error("synthetic data needs at least 2 records and 2 features");
  if (!(strength >= 0.0 && strength <= 1.0)) throw Error("correlation strength must lie in [0, 1]");
  if (shared_features > features) throw Error("more shared features than features");
  std::size_t total = 0;
  for (std::size_t s : cluster_sizes) {
    if (s < 2) throw Error("every cluster needs at least 2 records");
    total += s;
  }
  if (total > records) throw Error("clusters hold more records than the dataset");
}

nlohmann::json SyntheticSpecToJson(const SyntheticSpec& spec) {
  return {{"cluster_sizes", spec.cluster_sizes}, {"strength", spec.strength},
          {"records", spec.records},             {"features", spec.features},
          {"shared_features", spec.shared_features}, {"seed", spec.seed}};
}

SyntheticSpec SyntheticSpecFromJson(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (!j.is_object()) throw Error("synthetic spec must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "cluster_sizes") spec.cluster_sizes = v.get<std::vector<std::size_t>>();
    else if (key == "strength") spec.strength = v.get<double>();
    else if (key == "records") spec.records = v.get<std::size_t>();
    else if (key == "features") spec.features = v.get<std::size_t>();
    else if (key == "shared_features") spec.shared_features = v.get<std::size_t>();
    else if (key == "seed") spec.seed = v.get<std::uint64_t>();
    else throw Error("unknown synthetic spec key '" + key + "'");
  }
  spec.Validate();
  return spec;
}

Dataset MakeSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  const std::size_t l = spec.records, n = spec.features;
  const std::size_t shared = spec.shared_features == 0 ? n : spec.shared_features;
  NoiseSource src(spec.seed);

  std::vector<double> values(l * n);
  for (double& v : values) v = Gaussian(src);
  std::size_t r = 0;
  for (std::size_t size : spec.cluster_sizes) {
    std::vector<double> centre(shared);
    for (double& c : centre) c = Gaussian(src);
    for (std::size_t k = 0; k < size; ++k, ++r) {
      for (std::size_t f = 0; f < shared; ++f) {
        double& v = values[r * n + f];
        v = spec.strength * centre[f] + (1.0 - spec.strength) * v;
      }
    }
  }

  std::vector<double> beta(shared);
  for (double& b : beta) b = Gaussian(src);
  std::vector<double> score(l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t f = 0; f < shared; ++f) score[i] += beta[f] * values[i * n + f];
  }
  std::vector<double> sorted = score;
  std::nth_element(sorted.begin(), sorted.begin() + l / 2, sorted.end());
  const double median = sorted[l / 2];
  std::vector<int> labels(l);
  for (std::size_t i = 0; i < l; ++i) labels[i] = score[i] >= median ? 1 : -1;
  if (std::all_of(labels.begin(), labels.end(), [](int y) { return y == 1; })) {
    labels[std::min_element(score.begin(), score.end()) - score.begin()] = -1;
  }

  std::vector<std::string> names(n);
  for (std::size_t f = 0; f < n; ++f) names[f] = "x" + std::to_string(f);
  return Dataset(std::move(values), l, std::move(names), std::move(labels))
      .WithProvenance("make_synthetic");
}

}  // namespace crfs
