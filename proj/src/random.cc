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

#include "crfs/random.h"

#include "crfs/common.h"

namespace crfs {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(SplitMix64(seed) ^ SplitMix64(stream + 0x632be59bd9b4e019ULL));
}

NoiseSource::NoiseSource(std::uint64_t seed)
    : engine_(SplitMix64(seed)), seed_(seed) {}

std::uint64_t NoiseSource::NextBits() {
  ++position_;
  return engine_();
}

double NoiseSource::Uniform() {
  // 53 random bits, offset by half an ulp so that 0 is never returned.
  std::uint64_t bits = NextBits() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::size_t NoiseSource::UniformIndex(std::size_t n) {
  if (n == 0) throw Error("UniformIndex: empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
  std::uint64_t x;
  do {
    x = NextBits();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

}  // namespace crfs
