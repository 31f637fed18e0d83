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

#include "cyres/random.hpp"

#include <cmath>
#include <numbers>

#include "cyres/error.hpp"

namespace cyres {
namespace {
__extension__ using Wide = unsigned __int128;
}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::below: empty range");
  Wide m = static_cast<Wide>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<Wide>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::exponential(double rate) {
  return -std::log1p(-uniform()) / rate;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Index Rng::categorical(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw ValidationError("categorical: weights sum to zero");
  const double target = uniform() * total;
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

}  // namespace cyres
