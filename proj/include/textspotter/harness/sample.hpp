// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "textspotter/geometry/quad.hpp"
#include "textspotter/ndops/tensor.hpp"
#include "textspotter/recognizer/charset.hpp"
#include "textspotter/recognizer/losses.hpp"

namespace textspotter::harness {

using geometry::Point;
using geometry::Quadrilateral;
using ndops::Tensor;

enum class Source { kSynthetic, kExternal };

inline const char* source_name(Source s) {
  return s == Source::kSynthetic ? "synthetic" : "external";
}

inline Source parse_source(const std::string& s) {
  if (s == "synthetic") return Source::kSynthetic;
  if (s == "external") return Source::kExternal;
  throw ConfigError("unknown sample source: " + s);
}

/// One annotated character: its box, center and extent along the word axis,
/// all in image pixels.
struct CharBox {
  Quadrilateral quad;
  char label = '?';
  Point center;
  double width = 0.0;
};

struct WordAnnotation {
  Quadrilateral quad;
  std::string text;
  std::vector<CharBox> chars;  // empty when only word-level labels exist
};

/// Image coordinates: pixel (row i, column j) is centered at (x=j, y=i).
struct LabeledSample {
  std::string id;
  Tensor image;  // [H, W], values in [0, 1]
  std::vector<WordAnnotation> words;
  Source source = Source::kSynthetic;

  std::size_t height() const { return image.dim(0); }
  std::size_t width() const { return image.dim(1); }

  /// True when every word carries one character box per symbol.
  bool has_char_annotations() const {
    if (words.empty()) return false;
    for (const auto& w : words) {
      if (w.chars.size() != w.text.size()) return false;
    }
    return true;
  }
};

/// Character annotations of `word` measured along `frame`'s reading axis, the
/// form the alignment loss consumes.
inline std::vector<recognizer::CharAnnotation> char_annotations(
    const WordAnnotation& word, const Quadrilateral& frame, const recognizer::CharSet& cs) {
  std::vector<recognizer::CharAnnotation> out;
  out.reserve(word.chars.size());
  for (const auto& c : word.chars) {
    out.push_back({geometry::project_onto_axis(c.center, frame), c.width, cs.index_of(c.label)});
  }
  return out;
}

/// Checks the construction invariants: transcripts in the charset, character
/// labels matching the transcript, every character box inside its word quad
/// and every center projecting inside the word's span. Returns an empty
/// string when they hold, otherwise a description of the first violation.
inline std::string check_invariants(const LabeledSample& s, const recognizer::CharSet& cs,
                                    double tol = 1e-6) {
  for (std::size_t wi = 0; wi < s.words.size(); ++wi) {
    const auto& w = s.words[wi];
    const std::string where = s.id + " word " + std::to_string(wi);
    for (char ch : w.text) {
      if (!cs.contains(ch)) return where + ": symbol outside charset";
    }
    if (w.chars.empty()) continue;
    if (w.chars.size() != w.text.size()) return where + ": char count mismatch";
    const double span = geometry::norm(w.quad[1] - w.quad[0]);
    for (std::size_t k = 0; k < w.chars.size(); ++k) {
      const auto& c = w.chars[k];
      if (c.label != w.text[k]) return where + ": char label mismatch";
      if (!(c.width > 0.0)) return where + ": nonpositive char width";
      const double t = geometry::project_onto_axis(c.center, w.quad);
      if (t < -tol || t > span + tol) return where + ": char center outside word span";
      const double inside = geometry::intersection_area(c.quad, w.quad);
      if (inside < geometry::quad_area(c.quad) * (1.0 - 1e-9) - tol) {
        return where + ": char box outside word quad";
      }
    }
  }
  return {};
}

/// Mask ground truth on a stride-`stride` feature lattice: each cell takes
/// the class of the character box containing the cell's image-space center,
/// background otherwise.
inline Tensor char_mask(const LabeledSample& s, std::size_t h, std::size_t w,
                        std::size_t stride, const recognizer::CharSet& cs) {
  Tensor m({h, w}, static_cast<double>(cs.mask_background_index()));
  const double half = 0.5 * static_cast<double>(stride) - 0.5;
  auto inside = [](const Quadrilateral& q, Point p) {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < 4; ++i) {
      const double c = geometry::cross(q[(i + 1) % 4] - q[i], p - q[i]);
      if (c > 0) pos = true;
      if (c < 0) neg = true;
    }
    return !(pos && neg);
  };
  for (const auto& word : s.words) {
    for (const auto& c : word.chars) {
      if (c.quad.degenerate()) continue;
      const auto r = c.quad.bounding_rect();
      for (std::size_t i = 0; i < h; ++i) {
        const double y = static_cast<double>(i * stride) + half;
        if (y < r[0].y || y > r[2].y) continue;
        for (std::size_t j = 0; j < w; ++j) {
          const double x = static_cast<double>(j * stride) + half;
          if (x < r[0].x || x > r[2].x) continue;
          if (inside(c.quad, {x, y})) m.at(i, j) = static_cast<double>(cs.index_of(c.label));
        }
      }
    }
  }
  return m;
}

}  // namespace textspotter::harness
