// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::harness {

inline constexpr std::size_t kGlyphWidth = 5;
inline constexpr std::size_t kGlyphHeight = 7;
inline constexpr std::size_t kGlyphAdvance = 6;  // glyph width plus one blank column

namespace detail {

struct GlyphRows {
  char symbol;
  std::array<std::string_view, kGlyphHeight> rows;
};

// clang-format off
inline constexpr GlyphRows kGlyphs[] = {
  {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
  {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
  {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
  {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
  {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
  {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
  {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
  {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
  {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
  {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
  {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
  {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
  {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
  {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
  {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
  {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
  {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
  {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
  {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
  {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
  {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
  {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
  {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
  {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
  {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
  {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
  {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
  {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
  {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
  {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
  {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
  {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
};
// clang-format on

}  // namespace detail

/// True when `c` has a glyph in the built-in 5x7 font.
inline bool has_glyph(char c) {
  for (const auto& g : detail::kGlyphs) {
    if (g.symbol == c) return true;
  }
  return false;
}

/// Whether font pixel (row, col) of `c` is ink.
inline bool glyph_pixel(char c, std::size_t row, std::size_t col) {
  for (const auto& g : detail::kGlyphs) {
    if (g.symbol == c) return g.rows[row][col] == '#';
  }
  throw ContractError(std::string("font: no glyph for '") + c + "'");
}

/// Word list the synthetic generator draws from. Mostly plain words, plus a
/// few two-letter words and alphanumeric tokens that the word-spotting
/// protocol ignores.
inline const std::vector<std::string>& builtin_vocabulary() {
  static const std::vector<std::string> words = {
      "OPEN",   "EXIT",   "SALE",   "STOP",   "PARK",   "HOTEL",  "CAFE",   "BANK",
      "MARKET", "STREET", "ROAD",   "CITY",   "TOWN",   "SHOP",   "BOOK",   "FOOD",
      "PIZZA",  "TAXI",   "BUS",    "TRAIN",  "GATE",   "DOOR",   "PUSH",   "PULL",
      "FREE",   "WIFI",   "BAR",    "PUB",    "INN",    "POST",   "MAIL",   "NEWS",
      "STORE",  "MALL",   "PLAZA",  "CLOSED", "HELLO",  "ENTER",  "LOBBY",  "FLOOR",
      "LIFT",   "STAIRS", "WATER",  "FIRE",   "SAFE",   "ZONE",   "AREA",   "NORTH",
      "SOUTH",  "EAST",   "WEST",   "LEFT",   "RIGHT",  "SLOW",   "FAST",   "YIELD",
      "BRIDGE", "RIVER",  "LAKE",   "HILL",   "HOUSE",  "TICKET", "OFFICE", "CLINIC",
      "SCHOOL", "CHURCH", "MUSEUM", "CINEMA", "STAGE",  "GARDEN", "FARM",   "MILK",
      "BREAD",  "FRUIT",  "JUICE",  "COFFEE", "TEA",    "WINE",   "BEER",   "GRILL",
      "KEBAB",  "SUSHI",  "NOODLE", "DINER",  "BAKERY", "QUEEN",  "KING",   "ROYAL",
      "GRAND",  "PALACE", "JAZZ",   "CLUB",   "GOLF",   "SPORT",  "GYM",    "YOGA",
      "DANCE",  "MUSIC",  "RADIO",  "PHONE",  "REPAIR", "SHOES",  "DRESS",  "STYLE",
      "SALON",  "BEAUTY", "PHARMA", "DRUGS",  "HEALTH", "DENTAL", "VISION", "OPTIC",
      "IT",     "OF",     "TO",     "IN",     "ON",     "AT",     "BY",     "GO",
      "NO",     "UP",     "2018",   "B52",    "7UP",    "A4",     "K9",     "360",
      "24H",    "MP3",    "R2D2",   "X5",     "404",    "G7",     "99",     "1ST",
  };
  return words;
}

}  // namespace textspotter::harness
