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

#ifndef FEDSL_KERNELS_H_
#define FEDSL_KERNELS_H_

#include "fedsl/tensor.h"

// Dense-layer compute kernels.
//
// Two implementations share one contract: `fedsl::kernels` parallelizes the
// outer loops with OpenMP, `fedsl::kernels::reference` is the plain serial
// loop nest. Every output element is accumulated by a single thread in the
// same order in both; results are bitwise identical for any thread count.
//
// Shapes: x [batch, in], w [out, in], b [out], y [batch, out].
namespace fedsl::kernels {

// y = x * w^T + b
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
  Tensor input;   // [batch, in]
};

// Given dL/dy, returns dL/dw, dL/db and dL/dx.
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy);

Tensor relu_forward(const Tensor& x);
// dL/dx for y = relu(x).
Tensor relu_backward(const Tensor& x, const Tensor& gy);

// Work (multiply-adds) above which the OpenMP path forks threads.
inline constexpr std::size_t kParallelThreshold = 1 << 16;

namespace reference {

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy);
Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& gy);

}  // namespace reference
}  // namespace fedsl::kernels

#endif  // FEDSL_KERNELS_H_
