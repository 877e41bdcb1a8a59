// Copyright 2026 The dpstrata Authors
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

#ifndef DPSTRATA_RANDOM_H_
#define DPSTRATA_RANDOM_H_

#include <cstdint>
#include <random>

namespace dpstrata {

// A seeded, platform-independent random stream. Streams are derived from a
// (seed, replicate, group) key so that every replicate and group of a
// simulation owns an independent sequence regardless of scheduling.
//
// A single stream must not be shared between threads.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed);

  // Stream keyed by (seed, replicate, group).
  static RandomStream ForKey(uint64_t seed, uint64_t replicate,
                             uint64_t group);

  uint64_t NextBits() { return engine_(); }

  // Uniform on the open interval (0, 1). Never returns 0 or 1.
  double NextOpenUnit();

  // Uniform on (-1/2, 1/2).
  double NextCenteredUnit() { return NextOpenUnit() - 0.5; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive stream seeds.
uint64_t MixBits(uint64_t x);

}  // namespace dpstrata

#endif  // DPSTRATA_RANDOM_H_
