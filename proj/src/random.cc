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

#include "dpstrata/random.h"

namespace dpstrata {

uint64_t MixBits(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(uint64_t seed) : engine_(MixBits(seed)) {}

RandomStream RandomStream::ForKey(uint64_t seed, uint64_t replicate,
                                  uint64_t group) {
  uint64_t key = MixBits(seed);
  key = MixBits(key ^ replicate);
  key = MixBits(key ^ (group * 0xd6e8feb86659fd93ULL));
  return RandomStream(key);
}

double RandomStream::NextOpenUnit() {
  // 53 random mantissa bits, offset by half an ulp to exclude both endpoints.
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

}  // namespace dpstrata
