// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::evalkit {

/// Levenshtein distance with unit insert, delete and substitute costs.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

enum class LexiconKind { kNone, kStrong, kWeak, kGeneric };

inline LexiconKind parse_lexicon_kind(std::string_view s) {
  if (s == "none") return LexiconKind::kNone;
  if (s == "strong") return LexiconKind::kStrong;
  if (s == "weak") return LexiconKind::kWeak;
  if (s == "generic") return LexiconKind::kGeneric;
  throw ConfigError("unknown lexicon kind: " + std::string(s));
}

inline const char* lexicon_kind_name(LexiconKind k) {
  switch (k) {
    case LexiconKind::kNone: return "none";
    case LexiconKind::kStrong: return "strong";
    case LexiconKind::kWeak: return "weak";
    case LexiconKind::kGeneric: return "generic";
  }
  return "?";
}

struct Lexicon {
  LexiconKind kind = LexiconKind::kNone;
  std::vector<std::string> words;  // uppercase

  static Lexicon none() { return {}; }
  static Lexicon of(LexiconKind kind, const std::vector<std::string>& words) {
    Lexicon l{kind, {}};
    for (const auto& w : words) l.words.push_back(to_upper(w));
    return l;
  }
};

/// One word per line; blank lines skipped, entries uppercased.
inline Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read lexicon " + path.string());
  Lexicon l{kind, {}};
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) l.words.push_back(to_upper(line));
  }
  return l;
}

/// Nearest lexicon entry when its normalized distance d / max(|pred|,
/// |entry|) is at most max_normalized; otherwise `pred` unchanged. Ties go
/// to the smaller distance, then the lexicographically smaller entry.
inline std::string lexicon_correct(const std::string& pred, const Lexicon& lex,
                                   double max_normalized = 0.5) {
  if (lex.kind == LexiconKind::kNone) return pred;
  if (lex.words.empty()) {
    throw ConfigError(std::string("lexicon_correct: empty ") + lexicon_kind_name(lex.kind) +
                      " lexicon");
  }
  const std::string p = to_upper(pred);
  const std::string* best = nullptr;
  std::size_t best_d = 0;
  for (const auto& w : lex.words) {
    const std::size_t d = edit_distance(p, w);
    if (!best || d < best_d || (d == best_d && w < *best)) {
      best = &w;
      best_d = d;
    }
  }
  const std::size_t len = std::max(p.size(), best->size());
  const double norm = len == 0 ? 0.0 : static_cast<double>(best_d) / static_cast<double>(len);
  return norm <= max_normalized ? *best : pred;
}

}  // namespace textspotter::evalkit
