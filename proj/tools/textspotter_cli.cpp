// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//
// textspotter: dataset generation, training, evaluation and diagnostics.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "textspotter/evalkit/report.hpp"
#include "textspotter/harness/dataset_io.hpp"
#include "textspotter/harness/evaluate.hpp"
#include "textspotter/harness/gradcheck_suite.hpp"
#include "textspotter/harness/heatmap.hpp"
#include "textspotter/harness/train.hpp"
#include "textspotter/ndops/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace textspotter;
using namespace textspotter::harness;

namespace {

constexpr std::size_t kStrongLexiconSize = 100;

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  for (const auto& l : lines) f << l << '\n';
}

// Generic: the full vocabulary. Weak: every word in the set. Strong, per
// image: its own words plus distractors, kStrongLexiconSize entries at most.
void write_lexicons(const fs::path& dir, const std::vector<LabeledSample>& data,
                    const std::vector<std::string>& vocabulary, std::uint64_t seed) {
  fs::create_directories(dir / "strong");
  write_lines(dir / "generic.txt", vocabulary);
  std::set<std::string> all;
  for (const auto& s : data) {
    for (const auto& w : s.words) all.insert(w.text);
  }
  write_lines(dir / "weak.txt", {all.begin(), all.end()});
  std::mt19937_64 rng(seed);
  for (const auto& s : data) {
    std::set<std::string> lex;
    for (const auto& w : s.words) lex.insert(w.text);
    std::vector<std::string> pool = vocabulary;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (const auto& v : pool) {
      if (lex.size() >= kStrongLexiconSize) break;
      lex.insert(v);
    }
    write_lines(dir / "strong" / (s.id + ".txt"), {lex.begin(), lex.end()});
  }
}

std::vector<evalkit::Lexicon> load_lexicons(const fs::path& dir, evalkit::LexiconKind kind,
                                            const std::vector<LabeledSample>& data) {
  using evalkit::LexiconKind;
  switch (kind) {
    case LexiconKind::kNone:
      return {evalkit::Lexicon::none()};
    case LexiconKind::kGeneric:
      return {evalkit::load_lexicon(dir / "generic.txt", kind)};
    case LexiconKind::kWeak:
      return {evalkit::load_lexicon(dir / "weak.txt", kind)};
    case LexiconKind::kStrong: {
      std::vector<evalkit::Lexicon> out;
      for (const auto& s : data) {
        out.push_back(evalkit::load_lexicon(dir / "strong" / (s.id + ".txt"), kind));
      }
      return out;
    }
  }
  return {};
}

struct Model {
  TrainConfig cfg;
  ParamSet params;
};

Model load_model(const fs::path& dir) {
  return {load_config(dir / "train.cfg"), ndops::load_checkpoint(dir / "model")};
}

void save_model(const fs::path& dir, const TrainConfig& cfg, const TrainResult& r) {
  fs::create_directories(dir);
  ndops::save_checkpoint(r.params, dir / "model");
  std::ofstream(dir / "train.cfg") << config_to_text(cfg);
  std::ofstream log(dir / "metrics.log");
  write_metric_log(log, r.log);
}

std::string stage_summary(const std::vector<IterationRecord>& log) {
  // mean total loss over the first and last 50 iterations of each stage
  std::map<std::string, std::vector<double>> by_stage;
  std::vector<std::string> order;
  for (const auto& r : log) {
    if (!by_stage.count(r.stage)) order.push_back(r.stage);
    by_stage[r.stage].push_back(r.loss.total);
  }
  std::string out;
  for (const auto& st : order) {
    const auto& v = by_stage[st];
    const std::size_t k = std::min<std::size_t>(50, v.size());
    double a = 0, b = 0;
    for (std::size_t i = 0; i < k; ++i) {
      a += v[i];
      b += v[v.size() - 1 - i];
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "stage %s: %zu iterations, loss %.4f -> %.4f\n", st.c_str(),
                  v.size(), a / k, b / k);
    out += buf;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text spotting with TextAlign pooling and character attention"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "render a synthetic dataset");
  std::size_t gen_n = 500;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  SynthOptions synth;
  gen->add_option("--n", gen_n, "number of images")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--height", synth.height)->capture_default_str();
  gen->add_option("--width", synth.width)->capture_default_str();
  gen->add_option("--max-words", synth.max_words)->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "run the training curriculum");
  std::string train_cfg, train_data, train_out;
  std::vector<std::string> overrides;
  train->add_option("--config", train_cfg, "key = value config file");
  train->add_option("--set", overrides, "config override, key=value (repeatable)");
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "model directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a trained model");
  std::string ev_model, ev_data, ev_lex = "none", ev_lex_dir, ev_protocol = "e2e", ev_pred_out;
  ev->add_option("--model", ev_model, "model directory")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--lexicon", ev_lex, "none|strong|weak|generic")->capture_default_str();
  ev->add_option("--lexicon-dir", ev_lex_dir, "defaults to <data>/lexicons");
  ev->add_option("--protocol", ev_protocol, "e2e|spotting|detection|recognition")
      ->capture_default_str();
  ev->add_option("--predictions", ev_pred_out, "write per-image predictions to this directory");

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "central-difference gradient suite");
  GradSuiteOptions gc_opt;
  gc->add_option("--seed", gc_opt.seed)->capture_default_str();
  gc->add_option("--points", gc_opt.points)->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "recognition-only training with ground-truth boxes");
  std::string ab_cfg, ab_train, ab_test, ab_pooling = "textalign", ab_out;
  bool ab_no_align = false, ab_no_mask = false, ab_no_pos = false;
  ab->add_option("--config", ab_cfg);
  ab->add_option("--train", ab_train, "training dataset")->required();
  ab->add_option("--test", ab_test, "test dataset")->required();
  ab->add_option("--pooling", ab_pooling, "roi|roialign|textalign")->capture_default_str();
  ab->add_flag("--no-align-loss", ab_no_align);
  ab->add_flag("--no-mask-loss", ab_no_mask);
  ab->add_flag("--no-pos-embed", ab_no_pos);
  ab->add_option("--out", ab_out, "optional model directory");

  // heatmap
  auto* hm = app.add_subcommand("heatmap", "attention maps per decoding step");
  std::string hm_model, hm_image, hm_out, hm_quad;
  hm->add_option("--model", hm_model)->required();
  hm->add_option("--image", hm_image, "PGM image")->required();
  hm->add_option("--out", hm_out, "output directory")->required();
  hm->add_option("--quad", hm_quad, "x1,y1,...,x4,y4; default: every detection");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto data = gen_synth_dataset(gen_n, gen_seed, synth);
      save_dataset(gen_out, data);
      write_lexicons(fs::path(gen_out) / "lexicons", data, synth.vocabulary, gen_seed);
      std::size_t words = 0;
      for (const auto& s : data) words += s.words.size();
      std::printf("wrote %zu images, %zu words to %s\n", data.size(), words, gen_out.c_str());
    } else if (*train) {
      TrainConfig cfg = train_cfg.empty() ? TrainConfig{} : load_config(train_cfg);
      std::string extra;
      for (const auto& o : overrides) extra += o + "\n";
      cfg = parse_config(extra, cfg);
      const auto data = load_dataset(train_data);
      const auto r = train_curriculum(cfg, data, [](const IterationRecord& rec) {
        if (rec.iteration % 100 == 0) std::fprintf(stderr, "%s\n", format_record(rec).c_str());
      });
      save_model(train_out, cfg, r);
      std::printf("%strained in %.1f s\n", stage_summary(r.log).c_str(), r.seconds);
    } else if (*ev) {
      const Model m = load_model(ev_model);
      const auto data = load_dataset(ev_data);
      if (ev_protocol == "recognition") {
        const auto acc = gt_word_accuracy(data, m.params, m.cfg);
        std::printf("recognition: word accuracy %.4f (%zu/%zu)\nrecognition.accuracy=%.17g\n",
                    acc.value(), acc.correct, acc.total, acc.value());
        return 0;
      }
      const bool det_only = ev_protocol == "detection";
      const auto preds = spot_dataset(data, m.params, m.cfg, !det_only);
      if (!ev_pred_out.empty()) {
        fs::create_directories(ev_pred_out);
        for (std::size_t i = 0; i < data.size(); ++i) {
          evalkit::write_predictions(fs::path(ev_pred_out) / (data[i].id + ".txt"), preds[i].words);
        }
      }
      if (det_only) {
        std::printf("%s", evalkit::format_report("detection", detection_metrics(data, preds)).c_str());
      } else {
        const auto protocol = evalkit::parse_protocol(ev_protocol);
        const auto kind = evalkit::parse_lexicon_kind(ev_lex);
        const fs::path lex_dir = ev_lex_dir.empty() ? fs::path(ev_data) / "lexicons" : fs::path(ev_lex_dir);
        const auto lex = load_lexicons(lex_dir, kind, data);
        const auto r = end_to_end_metrics(data, preds, lex, protocol);
        std::printf("%s", evalkit::format_report(std::string(evalkit::protocol_name(protocol)) + "." +
                                                     evalkit::lexicon_kind_name(kind), r)
                              .c_str());
      }
    } else if (*gc) {
      bool ok = true;
      for (const auto& e : run_gradient_suite(gc_opt)) {
        std::printf("%-18s max_rel=%.3e tol=%.0e points=%zu %s\n", e.name.c_str(),
                    e.report.max_rel_error, e.tolerance, e.report.checked,
                    e.report.passed ? "PASS" : "FAIL");
        ok = ok && e.report.passed;
      }
      return ok ? 0 : 1;
    } else if (*ab) {
      TrainConfig cfg = ab_cfg.empty() ? TrainConfig{} : load_config(ab_cfg);
      cfg.detection = false;
      cfg.pooling = text_align::parse_pooling_mode(ab_pooling);
      cfg.align_loss = !ab_no_align;
      cfg.mask_loss = !ab_no_mask;
      cfg.position_embedding = !ab_no_pos;
      const auto r = train_curriculum(cfg, load_dataset(ab_train));
      if (!ab_out.empty()) save_model(ab_out, cfg, r);
      const auto acc = gt_word_accuracy(load_dataset(ab_test), r.params, cfg);
      std::printf("pooling=%s align=%d mask=%d pos=%d: word accuracy %.4f (%zu/%zu), %.1f s\n",
                  ab_pooling.c_str(), cfg.align_loss, cfg.mask_loss, cfg.position_embedding,
                  acc.value(), acc.correct, acc.total, r.seconds);
    } else if (*hm) {
      const Model m = load_model(hm_model);
      const ModelConfig mc = m.cfg.model();
      const Tensor image = read_pgm(hm_image);
      const Tensor feat = ndops::chw_to_hwc(backbone_forward(image, m.params, mc));
      std::vector<Quadrilateral> quads;
      if (!hm_quad.empty()) {
        quads.push_back(geometry::parse_quad(hm_quad));
      } else {
        for (const auto& d : decode_detections(detection_heads(feat, m.params, mc), mc.stride(),
                                               m.cfg.score_threshold, m.cfg.nms_threshold)) {
          quads.push_back(d.quad);
        }
      }
      fs::create_directories(hm_out);
      for (std::size_t k = 0; k < quads.size(); ++k) {
        const auto pooled = text_align::pool(m.cfg.pooling, feat, quads[k], mc.rec.grid_w,
                                             mc.rec.grid_h, mc.spatial_scale());
        const auto enc = recognizer::encode_sequence(pooled, m.params, mc.rec);
        const auto res = recognizer::decode_greedy(enc, m.params, mc.rec, m.cfg.max_decode_len);
        const auto maps = attention_heatmaps(image, text_align::grid_frame(m.cfg.pooling, quads[k]),
                                             pooled.grid.column_centers, res.trace);
        for (std::size_t t = 0; t < maps.size(); ++t) {
          char name[64];
          std::snprintf(name, sizeof(name), "word%02zu_step%02zu.pgm", k, t);
          write_pgm(fs::path(hm_out) / name, maps[t]);
        }
        std::printf("word %zu: \"%s\" (%zu steps)\n", k, res.text.c_str(), maps.size());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
