// Copyright 2026 The AANT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AANT_ROBUSTNESS_HPP_
#define AANT_ROBUSTNESS_HPP_

// Sensor-failure perturbations on raw 8-bit frames and a harness that runs a
// model over each perturbed copy of a video.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/fusion.hpp"
#include "aant/rng.hpp"
#include "aant/visual_branch.hpp"

namespace aant {

enum class PerturbationKind { none, drop_frames, half_resolution, gaussian_noise, occlude_right };
enum class DropMode { blank, remove };

inline std::string_view name_of(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::drop_frames: return "drop_frames";
    case PerturbationKind::half_resolution: return "half_resolution";
    case PerturbationKind::gaussian_noise: return "gaussian_noise";
    case PerturbationKind::occlude_right: return "occlude_right";
  }
  return "none";
}

inline PerturbationKind parse_perturbation_kind(std::string_view s) {
  for (auto k : {PerturbationKind::none, PerturbationKind::drop_frames, PerturbationKind::half_resolution,
                 PerturbationKind::gaussian_noise, PerturbationKind::occlude_right}) {
    if (s == name_of(k)) return k;
  }
  throw ValidationError("unknown perturbation kind '" + std::string(s) + "'");
}

inline DropMode parse_drop_mode(std::string_view s) {
  if (s == "blank") return DropMode::blank;
  if (s == "remove") return DropMode::remove;
  throw ValidationError("drop mode must be 'blank' or 'remove'");
}

struct Perturbation {
  PerturbationKind kind = PerturbationKind::none;
  // drop_frames
  int block = 10;
  int period = 40;
  int offset = 20;
  DropMode mode = DropMode::blank;
  // gaussian_noise
  double mean = 0.0;
  double std = 25.0;
  std::uint64_t seed = 0;

  std::string label() const {
    std::string s(name_of(kind));
    if (kind == PerturbationKind::drop_frames && mode == DropMode::remove) s += "_remove";
    return s;
  }
};

/// Indices i with offset <= (i mod period) < offset + block.
inline bool dropped(int i, int block, int period, int offset) {
  const int r = i % period;
  return r >= offset && r < offset + block;
}

inline void validate_drop(int n, int block, int period, int offset) {
  require(block >= 0 && period >= 1 && offset >= 0, "drop_frames: block, offset >= 0 and period >= 1");
  require(block <= period && period <= n, "drop_frames: need block <= period <= N");
  require(offset + block <= period, "drop_frames: offset + block must not exceed period");
}

inline RawFrameSequence drop_frames(const RawFrameSequence& raw, int block = 10, int period = 40, int offset = 20,
                                    DropMode mode = DropMode::blank) {
  validate_raw(raw);
  validate_drop(raw.n, block, period, offset);
  const std::size_t fb = raw.frame_bytes();
  if (mode == DropMode::blank) {
    RawFrameSequence out = raw;
    for (int i = 0; i < raw.n; ++i) {
      if (dropped(i, block, period, offset)) {
        std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(i * fb), fb, std::uint8_t{0});
      }
    }
    return out;
  }
  RawFrameSequence out(0, raw.height, raw.width, raw.fps);
  for (int i = 0; i < raw.n; ++i) {
    if (dropped(i, block, period, offset)) continue;
    out.data.insert(out.data.end(), raw.data.begin() + static_cast<std::ptrdiff_t>(i * fb),
                    raw.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * fb));
    ++out.n;
  }
  if (out.n == 0) throw ValidationError("drop_frames: every frame would be removed");
  return out;
}

/// Original indices of the frames kept by remove mode.
inline std::vector<int> kept_frames(int n, int block, int period, int offset) {
  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (!dropped(i, block, period, offset)) kept.push_back(i);
  }
  return kept;
}

/// 2x2 mean (rounded half up) then nearest-neighbour upscale to the input size.
inline RawFrameSequence half_resolution(const RawFrameSequence& raw) {
  validate_raw(raw);
  require(raw.height % 2 == 0 && raw.width % 2 == 0, "half_resolution: height and width must be even");
  RawFrameSequence out = raw;
  for (int f = 0; f < raw.n; ++f) {
    for (int y = 0; y < raw.height; y += 2) {
      for (int x = 0; x < raw.width; x += 2) {
        for (int c = 0; c < 3; ++c) {
          const int sum = raw.at(f, y, x, c) + raw.at(f, y, x + 1, c) + raw.at(f, y + 1, x, c) + raw.at(f, y + 1, x + 1, c);
          const auto v = static_cast<std::uint8_t>((sum + 2) / 4);
          out.at(f, y, x, c) = v;
          out.at(f, y, x + 1, c) = v;
          out.at(f, y + 1, x, c) = v;
          out.at(f, y + 1, x + 1, c) = v;
        }
      }
    }
  }
  return out;
}

/// v -> clamp(floor(v + n + 0.5), 0, 255) with n ~ normal(mean, std), one draw
/// per channel value in buffer order.
inline RawFrameSequence add_gaussian_noise(const RawFrameSequence& raw, double mean = 0.0, double std = 25.0,
                                           std::uint64_t seed = 0) {
  validate_raw(raw);
  require(std >= 0.0 && std::isfinite(std) && std::isfinite(mean), "gaussian noise: std must be finite and >= 0");
  RawFrameSequence out = raw;
  SplitMix64 rng(derive_seed(seed, "gaussian-noise"));
  for (auto& v : out.data) {
    const double noisy = std::floor(static_cast<double>(v) + rng.normal(mean, std) + 0.5);
    v = static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
  }
  return out;
}

/// Zeroes columns x >= ceil(W/2) in every frame and channel.
inline RawFrameSequence occlude_right_half(const RawFrameSequence& raw) {
  validate_raw(raw);
  RawFrameSequence out = raw;
  const int from = (raw.width + 1) / 2;
  for (int f = 0; f < raw.n; ++f) {
    for (int y = 0; y < raw.height; ++y) {
      for (int x = from; x < raw.width; ++x) {
        for (int c = 0; c < 3; ++c) out.at(f, y, x, c) = 0;
      }
    }
  }
  return out;
}

inline RawFrameSequence apply(const Perturbation& p, const RawFrameSequence& raw) {
  switch (p.kind) {
    case PerturbationKind::none: validate_raw(raw); return raw;
    case PerturbationKind::drop_frames: return drop_frames(raw, p.block, p.period, p.offset, p.mode);
    case PerturbationKind::half_resolution: return half_resolution(raw);
    case PerturbationKind::gaussian_noise: return add_gaussian_noise(raw, p.mean, p.std, p.seed);
    case PerturbationKind::occlude_right: return occlude_right_half(raw);
  }
  throw ValidationError("unknown perturbation");
}

/// Frame-probability trace of one perturbed copy. `frames` holds the original
/// frame index of each entry, so remove-mode traces stay aligned.
struct PerturbationTrace {
  std::string perturbation;
  std::vector<int> frames;
  std::vector<double> p;
  double video_score = 0.0;
};

/// Runs the model over every perturbed copy. The video score is the maximum
/// over frames whose original index lies before toa (all frames for
/// negatives).
inline std::vector<PerturbationTrace> robustness_sweep(const AnticipationModel& model, const RawVideo& video,
                                                       const FrameEncoder& encoder,
                                                       const std::vector<Perturbation>& perturbations, double tau) {
  require_shape(encoder.dimension() == model.config().dim, "robustness sweep: encoder width differs from model width");
  std::vector<PerturbationTrace> out;
  for (const auto& pert : perturbations) {
    const RawFrameSequence perturbed = apply(pert, video.frames);
    PerturbationTrace trace;
    trace.perturbation = pert.label();
    if (pert.kind == PerturbationKind::drop_frames && pert.mode == DropMode::remove) {
      trace.frames = kept_frames(video.frames.n, pert.block, pert.period, pert.offset);
    } else {
      trace.frames.resize(static_cast<std::size_t>(perturbed.n));
      for (int i = 0; i < perturbed.n; ++i) trace.frames[static_cast<std::size_t>(i)] = i;
    }
    const Matrix features = encoder.encode(perturbed).cast<double>();
    trace.p = adjusted_probabilities(model.forward(features).logits.value(), tau);
    const int limit = video.label == Label::positive ? video.toa : video.frames.n;
    double best = -1.0;
    for (std::size_t i = 0; i < trace.p.size(); ++i) {
      if (trace.frames[i] < limit) best = std::max(best, trace.p[i]);
    }
    trace.video_score = std::max(best, 0.0);
    out.push_back(std::move(trace));
  }
  return out;
}

/// Encodes raw videos into feature records (negatives carry toa = 0).
inline std::vector<VideoRecord> encode_videos(const std::vector<RawVideo>& videos, const FrameEncoder& encoder,
                                              const Perturbation& perturbation = {}) {
  std::vector<VideoRecord> out;
  out.reserve(videos.size());
  for (const auto& v : videos) {
    VideoRecord r;
    r.id = v.id;
    r.fps = v.frames.fps;
    r.toa = v.toa;
    r.label = v.label;
    r.features = encoder.encode(apply(perturbation, v.frames));
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_traces_csv(const std::vector<PerturbationTrace>& traces, std::ostream& out) {
  out << "perturbation,frame,probability\n";
  char line[160];
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.p.size(); ++i) {
      std::snprintf(line, sizeof line, "%s,%d,%.9g\n", t.perturbation.c_str(), t.frames[i], t.p[i]);
      out << line;
    }
  }
}

}  // namespace aant

#endif  // AANT_ROBUSTNESS_HPP_
