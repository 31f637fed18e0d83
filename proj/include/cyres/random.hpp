// Copyright 2026 The Cyres Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CYRES_RANDOM_HPP_
#define CYRES_RANDOM_HPP_

// Reproducible random streams.
//
// The engine is xoshiro256** (Blackman & Vigna), seeded by expanding a 64-bit
// seed through SplitMix64, exactly as the reference C code recommends. All
// variate conversions are implemented here instead of using <random>
// distributions, whose output is implementation-defined:
//
//   uniform()      (x >> 11) * 2^-53, in [0, 1)
//   below(n)       Lemire's multiply-shift with rejection, in [0, n)
//   exponential()  -log(1 - uniform()) / rate
//   normal()       Box-Muller cosine branch, two uniforms per variate
//   categorical()  inverse CDF by linear scan, one uniform
//
// A stream is therefore a pure function of the seed on every platform with
// IEEE doubles and a correctly rounded log/cos.

#include <array>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace cyres {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Seed of sub-stream `stream` derived from `seed`. Stream 0 is the seed
// itself, so a one-component run reproduces the standalone run.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed + stream * 0x9e3779b97f4a7c15ULL;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    SplitMix64 expand(seed);
    for (auto& word : state_) word = expand.next();
  }

  static Rng from_state(const std::array<std::uint64_t, 4>& state) {
    Rng rng(0);
    rng.state_ = state;
    return rng;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double exponential(double rate);
  double normal();

  // Index drawn from unnormalized non-negative weights.
  Eigen::Index categorical(const Eigen::Ref<const Eigen::VectorXd>& weights);

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace cyres

#endif  // CYRES_RANDOM_HPP_
