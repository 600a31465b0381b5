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

#ifndef FEDSL_DATA_H_
#define FEDSL_DATA_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedsl/nn.h"
#include "fedsl/rng.h"

namespace fedsl::workbench {

using nn::Dataset;

// Gaussian blobs around unit-norm class means placed on a regular simplex in
// the first `classes` coordinates (pairwise distance sqrt(2C/(C-1)) >= 1).
// Labels cycle 0..classes-1 so classes are balanced.
Dataset gen_blobs(std::uint64_t seed, std::size_t n, std::size_t dims,
                  std::size_t classes, double spread);

std::vector<double> blob_mean(std::size_t dims, std::size_t classes, std::size_t label);

// Random permutation cut into near-equal contiguous shards.
std::vector<std::vector<std::size_t>> partition_uniform_indices(std::size_t n,
                                                                std::size_t shards,
                                                                std::uint64_t seed);
std::vector<Dataset> partition_uniform(const Dataset& ds, std::size_t shards,
                                       std::uint64_t seed);

// Per-class Dirichlet(alpha) proportions across shards; resampled until every
// shard is nonempty (at most `max_retries` attempts).
std::vector<std::vector<std::size_t>> partition_dirichlet_indices(
    const Dataset& ds, std::size_t shards, double alpha, std::uint64_t seed,
    int max_retries = 100);
std::vector<Dataset> partition_dirichlet(const Dataset& ds, std::size_t shards,
                                         double alpha, std::uint64_t seed,
                                         int max_retries = 100);

struct Batch {
  Tensor features;
  std::vector<int> labels;
};

// `batch` samples drawn uniformly with replacement.
Batch sample_batch(const Dataset& shard, std::size_t batch, sim::RngStream& rng);

}  // namespace fedsl::workbench

#endif  // FEDSL_DATA_H_
