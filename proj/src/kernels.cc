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

#include "fedsl/kernels.h"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedsl/error.h"

namespace fedsl::kernels {
namespace {

void check_dense(const Tensor& x, const Tensor& w) {
  if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.cols()) {
    throw DimensionError("dense: input width " + std::to_string(x.cols()) +
                         " does not match weight in_dim " +
                         std::to_string(w.cols()));
  }
}

void check_grad(const Tensor& x, const Tensor& w, const Tensor& gy) {
  check_dense(x, w);
  if (gy.rank() != 2 || gy.rows() != x.rows() || gy.cols() != w.rows()) {
    throw DimensionError("dense backward: output gradient shape mismatch");
  }
}

// Signed loop counters for OpenMP's canonical loop form.
using Index = std::int64_t;

}  // namespace

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_dense(x, w);
  if (b.size() != w.rows()) throw DimensionError("dense: bias length mismatch");
  const Index batch = static_cast<Index>(x.rows());
  const Index in = static_cast<Index>(x.cols());
  const Index out = static_cast<Index>(w.rows());
  // w^T so the innermost loop runs over contiguous outputs. Each y[n, o]
  // still accumulates over i in ascending order, exactly as the reference.
  std::vector<double> wt(static_cast<std::size_t>(in * out));
  const double* wp = w.data().data();
  for (Index o = 0; o < out; ++o) {
    for (Index i = 0; i < in; ++i) wt[i * out + o] = wp[o * in + i];
  }
  Tensor y({x.rows(), w.rows()});
  const double* xp = x.data().data();
  const double* bp = b.data().data();
  const double* wtp = wt.data();
  double* yp = y.data().data();
  const bool par = static_cast<std::size_t>(batch * in * out) >= kParallelThreshold;
#pragma omp parallel for if (par) schedule(static)
  for (Index n = 0; n < batch; ++n) {
    double* row = yp + n * out;
    for (Index i = 0; i < in; ++i) {
      const double xv = xp[n * in + i];
      const double* wrow = wtp + i * out;
      for (Index o = 0; o < out; ++o) row[o] += xv * wrow[o];
    }
    for (Index o = 0; o < out; ++o) row[o] += bp[o];
  }
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy) {
  check_grad(x, w, gy);
  const Index batch = static_cast<Index>(x.rows());
  const Index in = static_cast<Index>(x.cols());
  const Index out = static_cast<Index>(w.rows());
  DenseGrads g{Tensor({w.rows(), w.cols()}), Tensor({w.rows()}),
               Tensor({x.rows(), x.cols()})};
  const double* xp = x.data().data();
  const double* wp = w.data().data();
  const double* gp = gy.data().data();
  double* gwp = g.weight.data().data();
  double* gbp = g.bias.data().data();
  double* gxp = g.input.data().data();
  const bool par = static_cast<std::size_t>(batch * in * out) >= kParallelThreshold;
  // Weight/bias gradients sum over n ascending; input gradients over o
  // ascending. Both match the reference loop nest element for element.
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static) nowait
    for (Index o = 0; o < out; ++o) {
      double* gw_row = gwp + o * in;
      double gb = 0.0;
      for (Index n = 0; n < batch; ++n) {
        const double gv = gp[n * out + o];
        const double* x_row = xp + n * in;
        for (Index i = 0; i < in; ++i) gw_row[i] += gv * x_row[i];
        gb += gv;
      }
      gbp[o] = gb;
    }
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      double* gx_row = gxp + n * in;
      for (Index o = 0; o < out; ++o) {
        const double gv = gp[n * out + o];
        const double* w_row = wp + o * in;
        for (Index i = 0; i < in; ++i) gx_row[i] += gv * w_row[i];
      }
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  const Index n = static_cast<Index>(y.size());
  double* p = y.data().data();
#pragma omp parallel for if (static_cast<std::size_t>(n) >= kParallelThreshold)
  for (Index i = 0; i < n; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
  if (!x.same_shape(gy)) throw DimensionError("relu backward: shape mismatch");
  Tensor gx = gy;
  const Index n = static_cast<Index>(gx.size());
  const double* xp = x.data().data();
  double* p = gx.data().data();
#pragma omp parallel for if (static_cast<std::size_t>(n) >= kParallelThreshold)
  for (Index i = 0; i < n; ++i) {
    if (!(xp[i] > 0.0)) p[i] = 0.0;
  }
  return gx;
}

namespace reference {

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_dense(x, w);
  if (b.size() != w.rows()) throw DimensionError("dense: bias length mismatch");
  Tensor y({x.rows(), w.rows()});
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.cols(); ++i) acc += x.at(n, i) * w.at(o, i);
      y.at(n, o) = acc + b[o];
    }
  }
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy) {
  check_grad(x, w, gy);
  DenseGrads g{Tensor({w.rows(), w.cols()}), Tensor({w.rows()}),
               Tensor({x.rows(), x.cols()})};
  for (std::size_t o = 0; o < w.rows(); ++o) {
    for (std::size_t i = 0; i < w.cols(); ++i) {
      double acc = 0.0;
      for (std::size_t n = 0; n < x.rows(); ++n) acc += gy.at(n, o) * x.at(n, i);
      g.weight.at(o, i) = acc;
    }
    double acc = 0.0;
    for (std::size_t n = 0; n < x.rows(); ++n) acc += gy.at(n, o);
    g.bias[o] = acc;
  }
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t i = 0; i < x.cols(); ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.rows(); ++o) acc += gy.at(n, o) * w.at(o, i);
      g.input.at(n, i) = acc;
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
  if (!x.same_shape(gy)) throw DimensionError("relu backward: shape mismatch");
  Tensor gx = gy;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    if (!(x[i] > 0.0)) gx[i] = 0.0;
  }
  return gx;
}

}  // namespace reference
}  // namespace fedsl::kernels
