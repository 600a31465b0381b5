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

#include "fedsl/data.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedsl/error.h"

namespace fedsl::workbench {

std::vector<double> blob_mean(std::size_t dims, std::size_t classes,
                              std::size_t label) {
  std::vector<double> m(dims, 0.0);
  const double c = static_cast<double>(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    m[j] = (j == label ? 1.0 : 0.0) - 1.0 / c;
  }
  // |e_k - 1/C| = sqrt((C-1)/C)
  const double norm = std::sqrt((c - 1.0) / c);
  for (double& v : m) v /= norm;
  return m;
}

Dataset gen_blobs(std::uint64_t seed, std::size_t n, std::size_t dims,
                  std::size_t classes, double spread) {
  if (classes < 2) throw ValidationError("blobs need at least 2 classes");
  if (dims < 2) throw ValidationError("blobs need at least 2 dimensions");
  if (classes > dims) throw ValidationError("blobs need classes <= dims");
  if (n == 0) throw ValidationError("blobs need n >= 1");
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw ValidationError("blob spread must be finite and non-negative");
  }
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < classes; ++c) means.push_back(blob_mean(dims, classes, c));
  sim::RngStream rng(seed, "blobs");
  Dataset ds;
  ds.num_classes = classes;
  ds.features = Tensor({n, dims});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    ds.labels[i] = static_cast<int>(label);
    for (std::size_t j = 0; j < dims; ++j) {
      const double noise = spread > 0.0 ? spread * rng.normal() : 0.0;
      ds.features.at(i, j) = means[label][j] + noise;
    }
  }
  return ds;
}

std::vector<std::vector<std::size_t>> partition_uniform_indices(std::size_t n,
                                                                std::size_t shards,
                                                                std::uint64_t seed) {
  if (shards == 0) throw ValidationError("need at least one shard");
  if (shards > n) {
    throw ValidationError("cannot split " + std::to_string(n) + " samples into " +
                          std::to_string(shards) + " shards");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  sim::RngStream rng(seed, "partition.uniform");
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> out(shards);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t size = n / shards + (s < n % shards ? 1 : 0);
    out[s].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                  perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

std::vector<Dataset> partition_uniform(const Dataset& ds, std::size_t shards,
                                       std::uint64_t seed) {
  std::vector<Dataset> out;
  for (const auto& idx : partition_uniform_indices(ds.size(), shards, seed)) {
    out.push_back(ds.subset(idx));
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition_dirichlet_indices(
    const Dataset& ds, std::size_t shards, double alpha, std::uint64_t seed,
    int max_retries) {
  if (!(alpha > 0.0)) throw ValidationError("dirichlet alpha must be positive");
  if (shards == 0 || shards > ds.size()) {
    throw ValidationError("invalid shard count for dirichlet partition");
  }
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  sim::RngStream rng(seed, "partition.dirichlet");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<std::vector<std::size_t>> out(shards);
    for (auto members : by_class) {
      rng.shuffle(std::span<std::size_t>(members));
      const auto props = rng.dirichlet(alpha, shards);
      double cum = 0.0;
      std::size_t start = 0;
      for (std::size_t s = 0; s < shards; ++s) {
        cum += props[s];
        std::size_t end = s + 1 == shards
                              ? members.size()
                              : static_cast<std::size_t>(std::llround(
                                    cum * static_cast<double>(members.size())));
        end = std::clamp(end, start, members.size());
        out[s].insert(out[s].end(), members.begin() + static_cast<std::ptrdiff_t>(start),
                      members.begin() + static_cast<std::ptrdiff_t>(end));
        start = end;
      }
    }
    bool ok = true;
    for (const auto& s : out) ok = ok && !s.empty();
    if (ok) return out;
  }
  throw ValidationError("degenerate dirichlet partition: some shard stayed empty after " +
                        std::to_string(max_retries) + " attempts");
}

std::vector<Dataset> partition_dirichlet(const Dataset& ds, std::size_t shards,
                                         double alpha, std::uint64_t seed,
                                         int max_retries) {
  std::vector<Dataset> out;
  for (const auto& idx :
       partition_dirichlet_indices(ds, shards, alpha, seed, max_retries)) {
    out.push_back(ds.subset(idx));
  }
  return out;
}

Batch sample_batch(const Dataset& shard, std::size_t batch, sim::RngStream& rng) {
  if (shard.size() == 0) throw ValidationError("cannot sample from an empty shard");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.uniform_int(shard.size());
  Batch b;
  b.features = shard.features.gather_rows(idx);
  b.labels.reserve(batch);
  for (std::size_t i : idx) b.labels.push_back(shard.labels[i]);
  return b;
}

}  // namespace fedsl::workbench
