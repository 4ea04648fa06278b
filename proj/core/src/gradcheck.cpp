// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/gradcheck.hpp"

#include <cmath>
#include <vector>

#include "cagat/errors.hpp"

namespace cagat {

GradCheckReport grad_check(ParamStore& params, const LossFn& f, double h, int stride) {
  if (stride < 1) throw ConfigError("grad_check: stride must be >= 1");
  params.zero_grad();
  (void)f(params, /*want_grad=*/true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) analytic.push_back(params[p].grad.data);

  GradCheckReport rep;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p].value.data;
    for (std::size_t k = 0; k < w.size(); k += stride) {
      const double saved = w[k];
      const double step = h * std::max(1.0, std::abs(saved));
      w[k] = saved + step;
      const double fp = f(params, /*want_grad=*/false);
      w[k] = saved - step;
      const double fm = f(params, /*want_grad=*/false);
      w[k] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[p][k];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = params[p].name + "[" + std::to_string(k) + "]";
        rep.analytic = a;
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace cagat
