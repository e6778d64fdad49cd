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

#ifndef CRFS_SYNTHETIC_H_
#define CRFS_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crfs/dataset.h"
#include "json.hpp"

namespace crfs {

// Records 0..sum(cluster_sizes)-1 form the clusters, in order; the rest are
// independent. Cluster members mix a shared centre with private noise on the
// first `shared_features` features (all when 0), weighted by `strength`;
// strength 1 makes them identical there. The remaining features are
// independent noise. Labels follow a planted linear rule on the shared
// features, split at its median.
struct SyntheticSpec {
  std::vector<std::size_t> cluster_sizes;
  double strength = 1.0;
  std::size_t records = 100;
  std::size_t features = 10;
  std::size_t shared_features = 0;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json SyntheticSpecToJson(const SyntheticSpec& spec);
SyntheticSpec SyntheticSpecFromJson(const nlohmann::json& j);

Dataset MakeSynthetic(const SyntheticSpec& spec);

}  // namespace crfs

#endif  // CRFS_SYNTHETIC_H_
