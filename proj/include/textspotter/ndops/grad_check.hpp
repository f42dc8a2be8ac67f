// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::ndops {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-6;
  // Relative error is |a - n| / max(|a|, |n|, scale_floor). The floor stops
  // entries whose true gradient is ~0 from dividing rounding noise by ~0.
  double scale_floor = 1e-6;
  // 2: (f(x+h) - f(x-h)) / 2h. 4: the fourth-order central stencil, which
  // allows a larger h (less rounding noise) for deep composed losses.
  int stencil = 2;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Central-difference check of `analytic` = dloss/dx at `x`, over the given
/// coordinate indices (all coordinates when `indices` is empty).
inline GradCheckReport grad_check(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> x, std::span<const double> analytic,
    const GradCheckOptions& opt = {}, std::vector<std::size_t> indices = {}) {
  if (opt.eps <= 0) throw ContractError("grad_check: eps must be positive");
  if (opt.stencil != 2 && opt.stencil != 4) {
    throw ContractError("grad_check: stencil must be 2 or 4");
  }
  if (analytic.size() != x.size()) {
    throw DimensionError("grad_check: gradient length mismatch");
  }
  if (indices.empty()) {
    indices.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) indices[i] = i;
  }
  std::vector<double> probe(x.begin(), x.end());
  GradCheckReport report;
  for (std::size_t i : indices) {
    const double orig = probe[i];
    auto at = [&](double offset) {
      probe[i] = orig + offset;
      const double v = loss(probe);
      if (!std::isfinite(v)) {
        probe[i] = orig;
        throw NumericError("grad_check: non-finite loss while probing index " +
                           std::to_string(i));
      }
      return v;
    };
    const double h = opt.eps;
    const double d1 = at(h) - at(-h);
    const double numeric = opt.stencil == 4 ? (8 * d1 - (at(2 * h) - at(-2 * h))) / (12 * h)
                                            : d1 / (2 * h);
    probe[i] = orig;
    const double rel = relative_error(analytic[i], numeric, opt.scale_floor);
    const double abs_err = std::abs(analytic[i] - numeric);
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.max_rel_error < opt.tol;
  return report;
}

/// Checks a gradient over a whole parameter set. At most `per_param`
/// coordinates of each tensor are probed (chosen with `seed`); 0 = all.
inline GradCheckReport grad_check_params(
    const std::function<double(const ParamSet&)>& loss, const ParamSet& params,
    const Gradients& analytic, const GradCheckOptions& opt = {},
    std::size_t per_param = 0, std::uint64_t seed = 1) {
  std::vector<std::pair<std::string, std::size_t>> coords;
  std::mt19937_64 rng(seed);
  for (const auto& [name, t] : params) {
    if (!analytic.count(name)) continue;
    std::vector<std::size_t> idx(t.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (per_param && per_param < idx.size()) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(per_param);
    }
    for (std::size_t i : idx) coords.emplace_back(name, i);
  }
  std::vector<double> x(coords.size()), a(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    x[k] = params.at(coords[k].first)[coords[k].second];
    a[k] = analytic.at(coords[k].first)[coords[k].second];
  }
  ParamSet probe = params;
  auto flat_loss = [&](std::span<const double> v) {
    for (std::size_t k = 0; k < coords.size(); ++k) {
      probe.at(coords[k].first)[coords[k].second] = v[k];
    }
    return loss(probe);
  };
  return grad_check(flat_loss, x, a, opt);
}

}  // namespace textspotter::ndops
