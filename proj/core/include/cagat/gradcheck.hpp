// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "cagat/params.hpp"

namespace cagat {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;        // "name[k]" of the worst-matching entry
  double analytic = 0.0;    // analytic derivative at the worst entry
  double numeric = 0.0;     // central-difference estimate there
  std::size_t checked = 0;  // scalar entries compared
};

/// Loss under the current parameter values. When want_grad is set the callee
/// must also fill params' grads (grad_check zeroes them first).
using LossFn = std::function<double(ParamStore&, bool want_grad)>;

/// Central-difference check of every parameter entry. Step per entry is
/// h * max(1, |w|); relative error uses max(1, |analytic|, |numeric|) as the
/// denominator. `stride` > 1 checks every stride-th entry of each parameter.
GradCheckReport grad_check(ParamStore& params, const LossFn& f, double h = 1e-5, int stride = 1);

}  // namespace cagat
