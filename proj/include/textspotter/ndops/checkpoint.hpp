// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::ndops {

/// Fills every tensor with U(-scale, scale) draws from one seeded generator,
/// visiting parameters in key order.
inline void init_uniform(ParamSet& params, std::uint64_t seed,
                         double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& [name, t] : params) {
    for (double& v : t.storage()) v = dist(rng);
  }
}

// Checkpoint layout:
//   <base>.manifest  one line per tensor: "<name> <rank> <d0> <d1> ..."
//   <base>.bin       raw little-endian float64 values, tensors in manifest order

inline void save_checkpoint(const ParamSet& params,
                            const std::filesystem::path& base) {
  std::ofstream manifest(base.string() + ".manifest");
  std::ofstream blob(base.string() + ".bin", std::ios::binary);
  if (!manifest || !blob) {
    throw std::runtime_error("cannot write checkpoint at " + base.string());
  }
  for (const auto& [name, t] : params) {
    manifest << name << ' ' << t.rank();
    for (std::size_t d : t.shape()) manifest << ' ' << d;
    manifest << '\n';
    for (double v : t.data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
      }
      unsigned char bytes[8];
      std::memcpy(bytes, &bits, 8);
      blob.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
}

inline ParamSet load_checkpoint(const std::filesystem::path& base) {
  std::ifstream manifest(base.string() + ".manifest");
  std::ifstream blob(base.string() + ".bin", std::ios::binary);
  if (!manifest || !blob) {
    throw std::runtime_error("cannot read checkpoint at " + base.string());
  }
  ParamSet params;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string name;
    std::size_t rank = 0;
    if (!(is >> name >> rank)) {
      throw std::runtime_error("malformed manifest line: " + line);
    }
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(is >> d)) throw std::runtime_error("malformed manifest line: " + line);
    }
    Tensor t(shape);
    for (double& v : t.storage()) {
      unsigned char bytes[8];
      if (!blob.read(reinterpret_cast<char*>(bytes), 8)) {
        throw std::runtime_error("checkpoint blob truncated at " + name);
      }
      std::uint64_t bits;
      std::memcpy(&bits, bytes, 8);
      if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
      }
      v = std::bit_cast<double>(bits);
    }
    params.emplace(name, std::move(t));
  }
  if (blob.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint blob has trailing bytes");
  }
  return params;
}

}  // namespace textspotter::ndops
