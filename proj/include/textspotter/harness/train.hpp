// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "textspotter/harness/augment.hpp"
#include "textspotter/harness/config.hpp"
#include "textspotter/harness/model.hpp"
#include "textspotter/harness/objective.hpp"

namespace textspotter::harness {

/// Adam with a per-parameter step count, so a parameter that starts
/// training late gets its own bias correction.
class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(ParamSet& params, const Gradients& grads, double lr,
            const std::function<bool(const std::string&)>& frozen) {
    for (auto& [name, p] : params) {
      if (frozen && frozen(name)) continue;
      const Tensor& g = grads.at(name);
      Tensor& m = m_.try_emplace(name, zeros_like(p)).first->second;
      Tensor& v = v_.try_emplace(name, zeros_like(p)).first->second;
      const double t = static_cast<double>(++t_[name]);
      const double c1 = 1.0 - std::pow(b1_, t), c2 = 1.0 - std::pow(b2_, t);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
        v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }

 private:
  double b1_, b2_, eps_;
  std::map<std::string, Tensor> m_, v_;
  std::map<std::string, std::size_t> t_;
};

struct IterationRecord {
  std::size_t iteration = 0;  // global, from 0
  std::string stage;
  double lr = 0.0;
  LossTerms loss;  // batch mean
};

inline std::string format_record(const IterationRecord& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%zu %s %.17g %.17g %.17g %.17g %.17g %.17g", r.iteration,
                r.stage.c_str(), r.lr, r.loss.total, r.loss.loc, r.loss.word, r.loss.align,
                r.loss.mask);
  return buf;
}

inline constexpr const char* kMetricLogHeader = "iteration stage lr total loc word align mask";

struct TrainResult {
  ParamSet params;
  std::vector<IterationRecord> log;
  double seconds = 0.0;
};

struct StagePlan {
  std::string name;
  std::size_t iterations = 0;
  double lr = 0.0;
  bool detection_frozen = false;
  bool mixed = false;  // stage-3 batches: synthetic plus augmented external samples
  LossOptions loss;
};

/// The three-step curriculum as concrete stages. Step one trains recognition
/// with the detection branch frozen and ground-truth grids; step two opens
/// detection, first still on ground-truth grids (2a), then pooling from
/// detections (2b); step three mixes synthetic and augmented samples.
/// With detection disabled every stage uses ground-truth grids; with
/// recognition disabled step one has nothing to train and is skipped.
inline std::vector<StagePlan> curriculum(const TrainConfig& cfg) {
  const LossOptions base = cfg.loss_options();
  std::vector<StagePlan> plan;
  LossOptions s1 = base;
  s1.detection = false;
  s1.grids = GridSource::kGroundTruth;
  plan.push_back({"1", cfg.recognition ? cfg.stage1_iters : 0, cfg.lr_stage1, true, false, s1});
  LossOptions s2a = base;
  s2a.grids = GridSource::kGroundTruth;
  plan.push_back({"2a", cfg.stage2a_iters, cfg.lr_stage2, !cfg.detection, false, s2a});
  LossOptions s2b = base;
  s2b.grids = cfg.detection ? GridSource::kDetected : GridSource::kGroundTruth;
  plan.push_back({"2b", cfg.stage2b_iters, cfg.lr_stage2, !cfg.detection, false, s2b});
  plan.push_back({"3", cfg.stage3_iters, cfg.lr_stage2, !cfg.detection, true, s2b});
  return plan;
}

inline LabeledSample as_external(LabeledSample s) {
  s.source = Source::kExternal;
  for (auto& w : s.words) w.chars.clear();
  return s;
}

inline double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const auto& [name, t] : g) {
    for (double v : t.data()) s += v * v;
  }
  return std::sqrt(s);
}

/// Runs the curriculum from a fresh initialization. Deterministic given
/// (cfg, data). `on_iteration`, when set, sees every record as it is made.
inline TrainResult train_curriculum(const TrainConfig& cfg, const std::vector<LabeledSample>& data,
                                    const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  cfg.validate();
  if (data.empty()) throw ContractError("train_curriculum: empty dataset");
  const ModelConfig mcfg = cfg.model();
  if (cfg.recognition && cfg.stage1_iters > 0 && (cfg.align_loss || cfg.mask_loss)) {
    for (const auto& s : data) {
      if (!s.has_char_annotations()) {
        throw ContractError("train_curriculum: sample " + s.id +
                            " lacks the character annotations stage 1 needs");
      }
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  res.params = init_model(mcfg, cfg.seed);
  Adam adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const AugmentOptions aug = cfg.augment_options();

  std::size_t global = 0;
  for (const StagePlan& st : curriculum(cfg)) {
    auto frozen = [&](const std::string& name) {
      return st.detection_frozen && is_detection_param(name);
    };
    for (std::size_t it = 0; it < st.iterations; ++it, ++global) {
      std::vector<LabeledSample> external;
      std::vector<const LabeledSample*> batch;
      if (st.mixed) {
        for (std::size_t k = 0; k < cfg.stage3_synthetic_per_batch; ++k) {
          batch.push_back(&data[pick(rng)]);
        }
        external.reserve(cfg.stage3_batch_size);
        while (batch.size() + external.size() < cfg.stage3_batch_size) {
          const LabeledSample& src = data[pick(rng)];
          external.push_back(as_external(augment(src, rng(), aug)));
        }
        for (const auto& e : external) batch.push_back(&e);
      } else {
        for (std::size_t k = 0; k < cfg.batch_size; ++k) batch.push_back(&data[pick(rng)]);
      }

      Gradients grads = ndops::zero_gradients(res.params);
      IterationRecord rec{global, st.name, st.lr, {}};
      for (const LabeledSample* s : batch) {
        const LossTerms t = total_loss(*s, res.params, mcfg, st.loss, &grads);
        rec.loss.loc += t.loc;
        rec.loss.word += t.word;
        rec.loss.align += t.align;
        rec.loss.mask += t.mask;
        rec.loss.total += t.total;
        rec.loss.words += t.words;
        rec.loss.detected_grids += t.detected_grids;
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      rec.loss.loc *= inv;
      rec.loss.word *= inv;
      rec.loss.align *= inv;
      rec.loss.mask *= inv;
      rec.loss.total *= inv;
      if (!std::isfinite(rec.loss.total)) {
        throw NumericError("training diverged at stage " + st.name + ", iteration " +
                           std::to_string(global) + ": " + format_record(rec));
      }
      for (auto& [name, g] : grads) g *= inv;
      if (cfg.grad_clip > 0) {
        const double n = global_norm(grads);
        if (n > cfg.grad_clip) {
          for (auto& [name, g] : grads) g *= cfg.grad_clip / n;
        }
      }
      adam.step(res.params, grads, st.lr, frozen);
      if (on_iteration) on_iteration(rec);
      res.log.push_back(std::move(rec));
    }
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline void write_metric_log(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << kMetricLogHeader << '\n';
  for (const auto& r : log) os << format_record(r) << '\n';
}

}  // namespace textspotter::harness
