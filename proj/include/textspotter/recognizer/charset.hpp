// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::recognizer {

/// Output alphabet of the decoder.
///
/// Class indices 0..K-1 are the symbols, K is EOS. The decoder input has one
/// extra start token (K+1). Character masks use K+1 classes where index K is
/// background.
class CharSet {
 public:
  explicit CharSet(std::string symbols) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_.find(symbols_[i], i + 1) != std::string::npos) {
        throw ConfigError(std::string("charset: duplicate symbol '") + symbols_[i] + "'");
      }
    }
    if (symbols_.empty()) throw ConfigError("charset: no symbols");
  }

  /// A-Z then 0-9.
  static CharSet alphanumeric() {
    return CharSet("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789");
  }

  const std::string& symbols() const { return symbols_; }
  std::size_t num_symbols() const { return symbols_.size(); }
  std::size_t eos_index() const { return symbols_.size(); }
  std::size_t num_classes() const { return symbols_.size() + 1; }
  std::size_t start_token() const { return symbols_.size() + 1; }
  std::size_t num_input_tokens() const { return symbols_.size() + 2; }
  std::size_t mask_background_index() const { return symbols_.size(); }
  std::size_t num_mask_classes() const { return symbols_.size() + 1; }

  bool contains(char c) const { return symbols_.find(c) != std::string::npos; }

  std::size_t index_of(char c) const {
    const auto pos = symbols_.find(c);
    if (pos == std::string::npos) {
      throw ContractError(std::string("charset: unknown symbol '") + c + "'");
    }
    return pos;
  }

  char symbol(std::size_t index) const { return symbols_.at(index); }

  /// Labels for `text` followed by EOS.
  std::vector<std::size_t> encode_with_eos(const std::string& text) const {
    std::vector<std::size_t> out;
    out.reserve(text.size() + 1);
    for (char c : text) out.push_back(index_of(c));
    out.push_back(eos_index());
    return out;
  }

  /// Maps labels to text, stopping at the first EOS.
  std::string decode(const std::vector<std::size_t>& labels) const {
    std::string s;
    for (std::size_t l : labels) {
      if (l == eos_index()) break;
      s += symbol(l);
    }
    return s;
  }

 private:
  std::string symbols_;
};

}  // namespace textspotter::recognizer
