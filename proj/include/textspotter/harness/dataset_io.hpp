// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "textspotter/harness/sample.hpp"

namespace textspotter::harness {

namespace fs = std::filesystem;

/// Writes an 8-bit binary PGM (P5). Values are clamped to [0,1] and rounded
/// to the nearest level.
inline void write_pgm(const fs::path& path, const Tensor& image) {
  if (image.rank() != 2) throw DimensionError("write_pgm: image must be [H,W]");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::string row(image.size(), '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::round(std::min(std::max(image[i], 0.0), 1.0) * 255.0);
    row[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  f.write(row.data(), static_cast<std::streamsize>(row.size()));
}

/// Reads a binary (P5) or ASCII (P2) PGM into [0,1].
inline Tensor read_pgm(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  auto token = [&]() {
    std::string t;
    while (f >> t) {
      if (t[0] != '#') return t;
      std::string rest;
      std::getline(f, rest);
    }
    throw ConfigError("truncated PGM header in " + path.string());
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw ConfigError(path.string() + " is not a PGM");
  const std::size_t w = std::stoul(token()), h = std::stoul(token());
  const double maxval = std::stod(token());
  if (maxval <= 0 || maxval > 255) throw ConfigError("unsupported PGM maxval in " + path.string());
  Tensor img({h, w});
  if (magic == "P5") {
    f.get();
    std::string buf(h * w, '\0');
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw ConfigError("truncated PGM data in " + path.string());
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
      img[i] = static_cast<unsigned char>(buf[i]) / maxval;
    }
  } else {
    for (std::size_t i = 0; i < h * w; ++i) img[i] = std::stod(token()) / maxval;
  }
  return img;
}

namespace detail {

inline nlohmann::json quad_json(const Quadrilateral& q) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : q.corners()) {
    a.push_back(p.x);
    a.push_back(p.y);
  }
  return a;
}

inline Quadrilateral quad_from_json(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 8) throw ConfigError("quad must be 8 numbers");
  std::array<Point, 4> c;
  for (std::size_t i = 0; i < 4; ++i) c[i] = {a[2 * i].get<double>(), a[2 * i + 1].get<double>()};
  return Quadrilateral(c);
}

}  // namespace detail

/// One annotation record. Character entries carry the index of their word.
inline nlohmann::json sample_to_json(const LabeledSample& s, const std::string& image_name) {
  nlohmann::json j;
  j["image"] = image_name;
  j["source"] = source_name(s.source);
  j["words"] = nlohmann::json::array();
  j["chars"] = nlohmann::json::array();
  for (std::size_t wi = 0; wi < s.words.size(); ++wi) {
    const auto& w = s.words[wi];
    j["words"].push_back({{"quad", detail::quad_json(w.quad)}, {"text", w.text}});
    for (const auto& c : w.chars) {
      j["chars"].push_back({{"quad", detail::quad_json(c.quad)},
                            {"label", std::string(1, c.label)},
                            {"center", {c.center.x, c.center.y}},
                            {"width", c.width},
                            {"word", wi}});
    }
  }
  return j;
}

inline LabeledSample sample_from_json(const nlohmann::json& j, const fs::path& dir) {
  LabeledSample s;
  const std::string name = j.at("image").get<std::string>();
  s.id = fs::path(name).stem().string();
  s.image = read_pgm(dir / name);
  s.source = parse_source(j.value("source", std::string("synthetic")));
  for (const auto& w : j.at("words")) {
    s.words.push_back({detail::quad_from_json(w.at("quad")), w.at("text").get<std::string>(), {}});
  }
  if (j.contains("chars")) {
    for (const auto& c : j.at("chars")) {
      const auto wi = c.at("word").get<std::size_t>();
      if (wi >= s.words.size()) throw ConfigError("char annotation refers to missing word");
      const std::string label = c.at("label").get<std::string>();
      if (label.size() != 1) throw ConfigError("char label must be one symbol");
      const auto& ctr = c.at("center");
      s.words[wi].chars.push_back({detail::quad_from_json(c.at("quad")), label[0],
                                   {ctr.at(0).get<double>(), ctr.at(1).get<double>()},
                                   c.at("width").get<double>()});
    }
  }
  return s;
}

inline constexpr const char* kAnnotationFile = "annotations.jsonl";

/// Writes <dir>/images/<id>.pgm and <dir>/annotations.jsonl.
inline void save_dataset(const fs::path& dir, const std::vector<LabeledSample>& samples) {
  fs::create_directories(dir / "images");
  std::ofstream ann(dir / kAnnotationFile);
  if (!ann) throw ConfigError("cannot write " + (dir / kAnnotationFile).string());
  for (const auto& s : samples) {
    const std::string name = "images/" + s.id + ".pgm";
    write_pgm(dir / name, s.image);
    ann << sample_to_json(s, name).dump() << '\n';
  }
}

inline std::vector<LabeledSample> load_dataset(const fs::path& dir) {
  std::ifstream ann(dir / kAnnotationFile);
  if (!ann) throw ConfigError("no " + std::string(kAnnotationFile) + " in " + dir.string());
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ann, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line), dir));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(dir.string() + "/" + kAnnotationFile + ":" + std::to_string(lineno) +
                        ": " + e.what());
    }
  }
  return out;
}

}  // namespace textspotter::harness
