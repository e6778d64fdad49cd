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

#ifndef CRFS_RANDOM_H_
#define CRFS_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace crfs {

// Deterministic seed derivation (SplitMix64 finaliser over seed and stream).
// Parallel or nested consumers receive DeriveSeed(parent, k) so that no two
// consumers share a stream.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// Seeded pseudo-random stream. Identical seeds give identical sequences on
// every platform: only the raw mt19937_64 output is used, never the
// implementation-defined std:: distributions.
//
// A NoiseSource is single-owner and must not be shared between threads.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed);

  std::uint64_t NextBits();
  // Uniform on the open interval (0, 1).
  double Uniform();
  // Uniform integer in [0, n). Requires n > 0.
  std::size_t UniformIndex(std::size_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  // Independent child stream; does not advance this source.
  NoiseSource Derive(std::uint64_t stream) const {
    return NoiseSource(DeriveSeed(seed_, stream));
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
};

template <typename T>
void Shuffle(std::span<T> items, NoiseSource& src) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = src.UniformIndex(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace crfs

#endif  // CRFS_RANDOM_H_
