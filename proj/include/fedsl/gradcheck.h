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

#ifndef FEDSL_GRADCHECK_H_
#define FEDSL_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedsl::check {

struct GradCheckCase {
  std::string name;
  std::size_t checked = 0;  // scalar derivatives compared
  std::size_t skipped = 0;  // perturbation crossed a ReLU kink
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;

  double worst() const;
  bool passed(double tolerance) const { return worst() <= tolerance; }
};

// Central differences against backprop on `trials` random small MLPs and
// `trials` random distillation problems. The difference quotients come from
// an extended-precision re-evaluation of the loss; its agreement with the
// double-precision loss is folded into max_rel_error. Relative error is
// |fd - analytic| / max(|fd|, |analytic|, floor).
inline constexpr double kGradCheckFloor = 1e-8;

GradCheckReport grad_check(std::size_t trials, std::uint64_t seed, double h = 1e-6,
                           double floor = kGradCheckFloor);

}  // namespace fedsl::check

#endif  // FEDSL_GRADCHECK_H_
