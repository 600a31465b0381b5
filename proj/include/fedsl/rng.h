// Copyright 2026 The FedSL-Sim Authors
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

#ifndef FEDSL_RNG_H_
#define FEDSL_RNG_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedsl::sim {

// Counter-based random stream. Draw number `i` of the stream labelled `label`
// under `root_seed` is a pure function of (root_seed, label, i). Distributions
// are implemented here and are bit-exact across standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t root_seed, std::string_view label);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n), unbiased. n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal via Box-Muller; consumes two draws, keeps no state.
  double normal();
  // Gamma(shape, 1), Marsaglia-Tsang. shape > 0.
  double gamma(double shape);
  std::vector<double> dirichlet(double alpha, std::size_t n);
  // True with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_int(i)]);
    }
  }

  std::uint64_t root_seed() const { return root_; }
  const std::string& label() const { return label_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t root_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline RngStream rng_stream(std::uint64_t root_seed, std::string_view label) {
  return RngStream(root_seed, label);
}

// Seed for a sub-computation, derived from a root seed and a label.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label);

}  // namespace fedsl::sim

#endif  // FEDSL_RNG_H_
