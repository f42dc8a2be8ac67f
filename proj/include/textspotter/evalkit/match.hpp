// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "textspotter/evalkit/lexicon.hpp"
#include "textspotter/geometry/quad.hpp"

namespace textspotter::evalkit {

using geometry::Quadrilateral;
using geometry::ScoredQuad;

inline constexpr double kMatchIou = 0.5;

/// Match counts and the ratios derived from them. Counts add across images.
struct MatchResult {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  double precision() const {
    const std::size_t n = true_positives + false_positives;
    return n ? static_cast<double>(true_positives) / static_cast<double>(n) : 0.0;
  }
  double recall() const {
    const std::size_t n = true_positives + false_negatives;
    return n ? static_cast<double>(true_positives) / static_cast<double>(n) : 0.0;
  }
  double f_measure() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  MatchResult& operator+=(const MatchResult& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    return *this;
  }
  friend MatchResult operator+(MatchResult a, const MatchResult& b) { return a += b; }
  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

namespace detail {

/// Indices of `preds` in descending score order (score_order tie rule).
inline std::vector<std::size_t> score_ranking(const std::vector<ScoredQuad>& preds) {
  std::vector<std::size_t> idx(preds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return geometry::score_order(preds[a], preds[b]);
  });
  return idx;
}

// Greedy one-to-one matching. accept(p, g) filters candidate pairs; each
// prediction takes the unmatched accepted GT of highest IoU (>= kMatchIou),
// lowest index on ties. Returns, per prediction, the matched GT or npos.
template <typename Accept>
std::vector<std::size_t> greedy_match(const std::vector<ScoredQuad>& preds,
                                      const std::vector<Quadrilateral>& gts, Accept accept) {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match(preds.size(), npos);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p : score_ranking(preds)) {
    double best = -1.0;
    std::size_t pick = npos;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || !accept(p, g)) continue;
      const double iou = geometry::quad_iou(preds[p].quad, gts[g]);
      if (iou >= kMatchIou && iou > best) {
        best = iou;
        pick = g;
      }
    }
    if (pick != npos) {
      taken[pick] = true;
      match[p] = pick;
    }
  }
  return match;
}

}  // namespace detail

/// Greedy one-to-one matching in descending score order at IoU >= 0.5.
inline MatchResult eval_detection(const std::vector<ScoredQuad>& preds,
                                  const std::vector<Quadrilateral>& gts) {
  const auto m = detail::greedy_match(preds, gts, [](std::size_t, std::size_t) { return true; });
  MatchResult r;
  for (std::size_t v : m) (v == static_cast<std::size_t>(-1) ? r.false_positives : r.true_positives)++;
  r.false_negatives = gts.size() - r.true_positives;
  return r;
}

enum class Protocol { kEndToEnd, kSpotting };

inline Protocol parse_protocol(std::string_view s) {
  if (s == "e2e") return Protocol::kEndToEnd;
  if (s == "spotting") return Protocol::kSpotting;
  throw ConfigError("unknown protocol: " + std::string(s));
}

inline const char* protocol_name(Protocol p) {
  return p == Protocol::kEndToEnd ? "e2e" : "spotting";
}

/// Whether word spotting scores this ground-truth word: at least 3
/// characters, letters only.
inline bool spotting_counts(std::string_view word) {
  if (word.size() < 3) return false;
  return std::all_of(word.begin(), word.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

struct TextPrediction {
  ScoredQuad box;
  std::string text;
};

struct TextTruth {
  Quadrilateral quad;
  std::string text;
};

/// A prediction is a true positive when it overlaps an unmatched GT word at
/// IoU >= 0.5 and its lexicon-corrected transcript equals the GT transcript
/// (uppercase). Under spotting, GT words failing spotting_counts are removed
/// and predictions lying on them (IoU >= 0.5) are ignored instead of being
/// counted as false positives.
inline MatchResult eval_end_to_end(const std::vector<TextPrediction>& preds,
                                   const std::vector<TextTruth>& gts, const Lexicon& lex,
                                   Protocol protocol) {
  std::vector<ScoredQuad> boxes;
  std::vector<std::string> texts;
  for (const auto& p : preds) {
    boxes.push_back(p.box);
    texts.push_back(to_upper(lexicon_correct(p.text, lex)));
  }
  std::vector<Quadrilateral> kept, dropped;
  std::vector<std::string> kept_text;
  for (const auto& g : gts) {
    const std::string t = to_upper(g.text);
    if (protocol == Protocol::kSpotting && !spotting_counts(t)) {
      dropped.push_back(g.quad);
    } else {
      kept.push_back(g.quad);
      kept_text.push_back(t);
    }
  }
  const auto m = detail::greedy_match(
      boxes, kept, [&](std::size_t p, std::size_t g) { return texts[p] == kept_text[g]; });
  MatchResult r;
  for (std::size_t p = 0; p < boxes.size(); ++p) {
    if (m[p] != static_cast<std::size_t>(-1)) {
      ++r.true_positives;
      continue;
    }
    bool ignored = false;
    for (const auto& d : dropped) {
      if (geometry::quad_iou(boxes[p].quad, d) >= kMatchIou) ignored = true;
    }
    if (!ignored) ++r.false_positives;
  }
  r.false_negatives = kept.size() - r.true_positives;
  return r;
}

}  // namespace textspotter::evalkit
