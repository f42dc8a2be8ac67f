// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "textspotter/harness/model.hpp"
#include "textspotter/recognizer/attention.hpp"

namespace textspotter::harness {

/// One image per decode step: the input dimmed to 30%, with the pixels of
/// the pooled region brightened by the attention weight of the grid column
/// nearest to them (normalized by the step's peak weight).
inline std::vector<Tensor> attention_heatmaps(const Tensor& image, const Quadrilateral& frame,
                                              const std::vector<double>& column_centers,
                                              const recognizer::AttentionTrace& trace) {
  std::vector<Tensor> out;
  for (const auto& step : trace) {
    const double peak = *std::max_element(step.alpha.begin(), step.alpha.end());
    Tensor img(image.shape());
    for (std::size_t i = 0; i < image.dim(0); ++i) {
      for (std::size_t j = 0; j < image.dim(1); ++j) {
        const Point p{static_cast<double>(j), static_cast<double>(i)};
        double v = 0.3 * image.at(i, j);
        const auto d = side_distances(frame, p);
        if (std::min({d[0], d[1], d[2], d[3]}) >= 0) {
          const double t = geometry::project_onto_axis(p, frame);
          std::size_t best = 0;
          for (std::size_t k = 1; k < column_centers.size(); ++k) {
            if (std::abs(column_centers[k] - t) < std::abs(column_centers[best] - t)) best = k;
          }
          v += 0.7 * (peak > 0 ? step.alpha[best] / peak : 0.0);
        }
        img.at(i, j) = std::min(v, 1.0);
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace textspotter::harness
