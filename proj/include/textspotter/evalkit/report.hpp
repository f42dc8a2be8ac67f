// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "textspotter/evalkit/match.hpp"

namespace textspotter::evalkit {

/// Prediction file: one line per detection, "x1,y1,...,x4,y4,score,transcript".
/// The transcript may be empty (detection-only output).
inline void write_predictions(const std::filesystem::path& path,
                              const std::vector<TextPrediction>& preds) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  for (const auto& p : preds) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.17g", p.box.score);
    f << p.box.quad.to_string() << ',' << score << ',' << p.text << '\n';
  }
}

inline std::vector<TextPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::vector<TextPrediction> out;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest;
    TextPrediction p;
    p.box.quad = geometry::parse_quad(line, &rest);
    const auto comma = rest.find(',');
    const std::string_view num = rest.substr(0, comma);
    auto res = std::from_chars(num.data(), num.data() + num.size(), p.box.score);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) {
      throw ConfigError("malformed score in " + path.string() + ": " + line);
    }
    if (comma != std::string_view::npos) p.text = std::string(rest.substr(comma + 1));
    out.push_back(std::move(p));
  }
  return out;
}

/// Human-readable summary followed by a key=value block.
inline std::string format_report(const std::string& name, const MatchResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s: P=%.4f R=%.4f F=%.4f (TP=%zu FP=%zu FN=%zu)\n"
                "%s.precision=%.17g\n%s.recall=%.17g\n%s.f_measure=%.17g\n"
                "%s.tp=%zu\n%s.fp=%zu\n%s.fn=%zu\n",
                name.c_str(), r.precision(), r.recall(), r.f_measure(), r.true_positives,
                r.false_positives, r.false_negatives, name.c_str(), r.precision(), name.c_str(),
                r.recall(), name.c_str(), r.f_measure(), name.c_str(), r.true_positives,
                name.c_str(), r.false_positives, name.c_str(), r.false_negatives);
  return buf;
}

}  // namespace textspotter::evalkit
