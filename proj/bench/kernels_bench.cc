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

// OpenMP kernels against the serial reference. Args: batch, in, out.

#include <benchmark/benchmark.h>

#include "fedsl/kernels.h"
#include "fedsl/rng.h"

namespace fedsl {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  sim::RngStream rng(seed, "bench");
  for (double& v : t.data()) v = rng.normal();
  return t;
}

struct Operands {
  Tensor x, w, b, gy;
  explicit Operands(const benchmark::State& s) {
    const auto batch = static_cast<std::size_t>(s.range(0));
    const auto in = static_cast<std::size_t>(s.range(1));
    const auto out = static_cast<std::size_t>(s.range(2));
    x = random_tensor({batch, in}, 1);
    w = random_tensor({out, in}, 2);
    b = random_tensor({out}, 3);
    gy = random_tensor({batch, out}, 4);
  }
};

void set_flops(benchmark::State& s, double per_call) {
  s.counters["flops"] =
      benchmark::Counter(per_call, benchmark::Counter::kIsIterationInvariantRate);
}

template <Tensor (*Fwd)(const Tensor&, const Tensor&, const Tensor&)>
void BM_DenseForward(benchmark::State& s) {
  const Operands o(s);
  for (auto _ : s) benchmark::DoNotOptimize(Fwd(o.x, o.w, o.b));
  set_flops(s, 2.0 * static_cast<double>(s.range(0) * s.range(1) * s.range(2)));
}

template <kernels::DenseGrads (*Bwd)(const Tensor&, const Tensor&, const Tensor&)>
void BM_DenseBackward(benchmark::State& s) {
  const Operands o(s);
  for (auto _ : s) benchmark::DoNotOptimize(Bwd(o.x, o.w, o.gy));
  set_flops(s, 4.0 * static_cast<double>(s.range(0) * s.range(1) * s.range(2)));
}

template <Tensor (*Relu)(const Tensor&)>
void BM_Relu(benchmark::State& s) {
  const auto x = random_tensor({static_cast<std::size_t>(s.range(0)), 1024}, 5);
  for (auto _ : s) benchmark::DoNotOptimize(Relu(x));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({32, 32, 64})->Args({32, 64, 64})->Args({256, 256, 256})->Args({512, 256, 256});
}

BENCHMARK(BM_DenseForward<kernels::dense_forward>)->Name("dense_forward/openmp")->Apply(shapes);
BENCHMARK(BM_DenseForward<kernels::reference::dense_forward>)
    ->Name("dense_forward/reference")
    ->Apply(shapes);
BENCHMARK(BM_DenseBackward<kernels::dense_backward>)->Name("dense_backward/openmp")->Apply(shapes);
BENCHMARK(BM_DenseBackward<kernels::reference::dense_backward>)
    ->Name("dense_backward/reference")
    ->Apply(shapes);
BENCHMARK(BM_Relu<kernels::relu_forward>)->Name("relu_forward/openmp")->Arg(32)->Arg(1024);
BENCHMARK(BM_Relu<kernels::reference::relu_forward>)
    ->Name("relu_forward/reference")
    ->Arg(32)
    ->Arg(1024);

}  // namespace
}  // namespace fedsl

BENCHMARK_MAIN();
