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

#ifndef AANT_DATA_MODEL_HPP_
#define AANT_DATA_MODEL_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aant/error.hpp"
#include "aant/rng.hpp"

namespace aant {

/// Per-frame features as stored on disk: float32, row-major, N x D.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Label : int { negative = 0, positive = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }

/// One video's frame features. toa is the accident frame (1-based count of
/// pre-accident frames); 0 marks a non-accident video.
struct VideoRecord {
  std::string id;
  FeatureMatrix features;
  double fps = 20.0;
  int toa = 0;
  Label label = Label::negative;

  int frames() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  bool positive() const { return label == Label::positive; }

  /// End (exclusive) of the pre-accident window: toa for positives, N otherwise.
  int window_end() const { return positive() ? toa : frames(); }

  bool operator==(const VideoRecord& o) const {
    return id == o.id && fps == o.fps && toa == o.toa && label == o.label &&
           features.rows() == o.features.rows() && features.cols() == o.features.cols() &&
           std::memcmp(features.data(), o.features.data(), sizeof(float) * static_cast<std::size_t>(features.size())) == 0;
  }
};

inline void validate_record(const VideoRecord& r) {
  require(r.frames() >= 1, "record '" + r.id + "': needs at least one frame");
  require(r.dim() >= 1, "record '" + r.id + "': feature width must be >= 1");
  require(std::isfinite(r.fps) && r.fps > 0.0, "record '" + r.id + "': fps must be positive");
  if (r.positive()) {
    require(r.toa >= 1 && r.toa <= r.frames(), "record '" + r.id + "': positive toa must lie in [1, N]");
  } else {
    require(r.toa == 0, "record '" + r.id + "': negative records carry toa = 0");
  }
  require(r.features.allFinite(), "record '" + r.id + "': non-finite feature value");
}

/// Raw 8-bit RGB frames, N x H x W x 3, channel-interleaved.
struct RawFrameSequence {
  int n = 0;
  int height = 0;
  int width = 0;
  double fps = 20.0;
  std::vector<std::uint8_t> data;

  RawFrameSequence() = default;
  RawFrameSequence(int frames, int h, int w, double frame_rate)
      : n(frames), height(h), width(w), fps(frame_rate),
        data(static_cast<std::size_t>(frames) * h * w * 3, 0) {}

  std::size_t index(int f, int y, int x, int c) const {
    return ((static_cast<std::size_t>(f) * height + y) * width + x) * 3 + c;
  }
  std::uint8_t& at(int f, int y, int x, int c) { return data[index(f, y, x, c)]; }
  std::uint8_t at(int f, int y, int x, int c) const { return data[index(f, y, x, c)]; }
  std::size_t frame_bytes() const { return static_cast<std::size_t>(height) * width * 3; }

  bool operator==(const RawFrameSequence& o) const = default;
};

inline void validate_raw(const RawFrameSequence& raw) {
  require(raw.n >= 1, "raw sequence needs at least one frame");
  require(raw.height >= 1 && raw.width >= 1, "raw frame height and width must be >= 1");
  require(raw.fps > 0.0, "raw sequence fps must be positive");
  require(raw.data.size() == static_cast<std::size_t>(raw.n) * raw.frame_bytes(), "raw sequence buffer size mismatch");
}

struct DatasetSplit {
  std::vector<VideoRecord> train;
  std::vector<VideoRecord> test;
};

// ---------------------------------------------------------------------------
// "AANT" feature files: magic, u16 version, u32 header length, JSON header,
// then N*D little-endian float32 values row-major.

inline constexpr std::array<char, 4> kFeatureMagic{'A', 'A', 'N', 'T'};
inline constexpr std::uint16_t kFeatureVersion = 1;

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

inline float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f = 0.0F;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace detail

inline std::string encode_feature_file(const VideoRecord& record) {
  validate_record(record);
  const nlohmann::json header = {{"id", record.id},       {"n_frames", record.frames()},
                                 {"dim", record.dim()},     {"fps", record.fps},
                                 {"toa", record.toa},       {"label", to_int(record.label)}};
  const std::string header_text = header.dump();
  std::string out(kFeatureMagic.begin(), kFeatureMagic.end());
  detail::put_u16(out, kFeatureVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  out.reserve(out.size() + static_cast<std::size_t>(record.features.size()) * 4);
  for (Eigen::Index i = 0; i < record.features.size(); ++i) detail::put_f32(out, record.features.data()[i]);
  return out;
}

/// Writes one record; returns the number of bytes emitted.
inline std::size_t write_feature_file(const VideoRecord& record, std::ostream& sink) {
  const std::string bytes = encode_feature_file(record);
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw RuntimeFailure("feature file: write to sink failed");
  return bytes.size();
}

inline VideoRecord decode_feature_file(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic.data(), 4) != 0) {
    throw FormatError("feature file: bad magic");
  }
  if (bytes.size() < 10) throw FormatError("feature file: truncated preamble");
  const std::uint16_t version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (version != kFeatureVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t header_len = detail::get_u32(p + 6);
  if (bytes.size() < 10 + static_cast<std::size_t>(header_len)) throw FormatError("feature file: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("feature file: malformed header: ") + e.what());
  }

  VideoRecord r;
  long long n = 0;
  long long d = 0;
  int label = 0;
  try {
    r.id = header.at("id").get<std::string>();
    n = header.at("n_frames").get<long long>();
    d = header.at("dim").get<long long>();
    r.fps = header.at("fps").get<double>();
    r.toa = header.at("toa").get<int>();
    label = header.at("label").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("feature file: header field error: ") + e.what());
  }
  if (n < 1 || d < 1) throw FormatError("feature file: header shape must be positive");
  if (label != 0 && label != 1) throw FormatError("feature file: label must be 0 or 1");
  r.label = static_cast<Label>(label);

  const std::size_t payload = bytes.size() - 10 - header_len;
  if (payload != static_cast<std::size_t>(n) * static_cast<std::size_t>(d) * 4) {
    throw FormatError("feature file: payload holds " + std::to_string(payload) + " bytes, header implies " +
                      std::to_string(n * d * 4));
  }
  r.features.resize(n, d);
  const unsigned char* blob = p + 10 + header_len;
  for (Eigen::Index i = 0; i < r.features.size(); ++i) r.features.data()[i] = detail::get_f32(blob + 4 * i);
  try {
    validate_record(r);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("feature file: ") + e.what());
  }
  return r;
}

inline VideoRecord read_feature_file(std::istream& source) {
  std::string bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return decode_feature_file(bytes);
}

inline std::size_t save_feature_file(const VideoRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  return write_feature_file(record, out);
}

inline VideoRecord load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open feature file " + path.string());
  return read_feature_file(in);
}

// Dataset manifests are JSON arrays of file paths, resolved relative to the
// manifest's directory when not absolute.

inline void write_manifest(const std::vector<std::string>& paths, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write manifest " + file.string());
  out << nlohmann::json(paths).dump(2) << '\n';
}

inline std::vector<VideoRecord> load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open manifest " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + file.string() + ": " + e.what());
  }
  require(doc.is_array(), "manifest must be a JSON array of paths");
  std::vector<VideoRecord> records;
  for (const auto& entry : doc) {
    require(entry.is_string(), "manifest entries must be strings");
    std::filesystem::path p = entry.get<std::string>();
    if (p.is_relative()) p = file.parent_path() / p;
    records.push_back(load_feature_file(p));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios.

struct SyntheticSpec {
  int n_pos = 50;
  int n_neg = 100;
  int frames = 50;
  int dim = 16;
  double fps = 20.0;
  int toa = 45;
  double separability = 4.0;
  std::uint64_t seed = 7;
  /// Risk ramp length in seconds; the window is min(toa, ceil(fps) * seconds).
  double ramp_seconds = 2.0;
};

inline int risk_window(int toa, double fps, double ramp_seconds = 2.0) {
  const int per_second = static_cast<int>(std::ceil(fps));
  return std::min(toa, static_cast<int>(std::lround(per_second * ramp_seconds)));
}

/// Linear risk ramp: 0 up to toa - window, 1 at toa, continuing past toa.
inline double risk_ramp(int t, int toa, int window) {
  if (window <= 0) return t >= toa ? 1.0 : 0.0;
  return std::max(0.0, static_cast<double>(t - toa + window) / window);
}

/// The fixed unit risk direction used by the generator for a given seed.
inline Eigen::VectorXd risk_direction(int dim, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, "risk-direction"));
  Eigen::VectorXd u(dim);
  do {
    for (int i = 0; i < dim; ++i) u(i) = rng.normal();
  } while (u.norm() == 0.0);
  return u / u.norm();
}

inline std::vector<VideoRecord> generate_synthetic_dataset(const SyntheticSpec& spec) {
  require(spec.n_pos >= 0 && spec.n_neg >= 0 && spec.n_pos + spec.n_neg >= 1, "synthetic: need at least one video");
  require(spec.frames >= 1, "synthetic: frames must be >= 1");
  require(spec.dim >= 2, "synthetic: dim must be >= 2");
  require(spec.fps > 0.0, "synthetic: fps must be positive");
  require(spec.separability >= 0.0, "synthetic: separability must be >= 0");
  if (spec.n_pos > 0) require(spec.toa >= 1 && spec.toa <= spec.frames, "synthetic: toa must lie in [1, frames]");

  const Eigen::VectorXd u = risk_direction(spec.dim, spec.seed);
  const int window = risk_window(spec.toa, spec.fps, spec.ramp_seconds);
  SplitMix64 rng(derive_seed(spec.seed, "synthetic-frames"));

  auto make = [&](bool positive, int index) {
    VideoRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", positive ? "pos" : "neg", index);
    r.id = id;
    r.fps = spec.fps;
    r.label = positive ? Label::positive : Label::negative;
    r.toa = positive ? spec.toa : 0;
    r.features.resize(spec.frames, spec.dim);
    Eigen::VectorXd x(spec.dim);
    for (int t = 0; t < spec.frames; ++t) {
      for (int j = 0; j < spec.dim; ++j) x(j) = rng.normal();
      if (positive) x += spec.separability * risk_ramp(t, spec.toa, window) * u;
      const double norm = x.norm();
      if (norm > 0.0) x /= norm;
      for (int j = 0; j < spec.dim; ++j) r.features(t, j) = static_cast<float>(x(j));
    }
    return r;
  };

  std::vector<VideoRecord> out;
  out.reserve(static_cast<std::size_t>(spec.n_pos + spec.n_neg));
  for (int i = 0; i < spec.n_pos; ++i) out.push_back(make(true, i));
  for (int i = 0; i < spec.n_neg; ++i) out.push_back(make(false, i));
  return out;
}

struct RawSyntheticSpec {
  int n_pos = 40;
  int n_neg = 80;
  int frames = 100;
  int height = 16;
  int width = 16;
  double fps = 20.0;
  int toa = 90;
  /// Peak intensity shift of the left-half risk pattern at toa.
  double risk_amplitude = 90.0;
  /// Half-width of the per-cell base intensity range around its centre.
  double texture_spread = 24.0;
  /// Upper bound of right-half intensities; small values keep that half dark.
  int right_half_max = 255;
  std::uint64_t seed = 11;
};

struct RawVideo {
  std::string id;
  RawFrameSequence frames;
  int toa = 0;
  Label label = Label::negative;
};

/// Raw-pixel scenarios for the perturbation experiments. Each video has a
/// static per-cell base texture with pixel jitter; positives add a growing
/// warm patch confined to the left half of the frame.
inline std::vector<RawVideo> generate_synthetic_raw(const RawSyntheticSpec& spec) {
  require(spec.frames >= 1 && spec.height >= 4 && spec.width >= 4, "raw synthetic: invalid shape");
  require(spec.height % 2 == 0 && spec.width % 2 == 0, "raw synthetic: height and width must be even");
  require(spec.n_pos == 0 || (spec.toa >= 1 && spec.toa <= spec.frames), "raw synthetic: toa must lie in [1, frames]");
  require(spec.right_half_max >= 0 && spec.right_half_max <= 255, "raw synthetic: right_half_max in [0,255]");

  SplitMix64 rng(derive_seed(spec.seed, "synthetic-raw"));
  const int window = risk_window(spec.toa, spec.fps);
  const int half = spec.width / 2;

  auto clamp_round = [](double v, double hi) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, hi));
  };

  auto make = [&](bool positive, int index) {
    RawVideo v;
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", positive ? "rawpos" : "rawneg", index);
    v.id = id;
    v.label = positive ? Label::positive : Label::negative;
    v.toa = positive ? spec.toa : 0;
    v.frames = RawFrameSequence(spec.frames, spec.height, spec.width, spec.fps);

    // Base level per (row block, column block, channel) on a 4x4 grid.
    std::array<double, 4 * 4 * 3> base{};
    for (int cy = 0; cy < 4; ++cy) {
      for (int cx = 0; cx < 4; ++cx) {
        const bool right = cx >= 2;
        const double centre = right ? spec.right_half_max / 2.0 : 128.0;
        const double spread = right ? std::min(spec.texture_spread, centre) : spec.texture_spread;
        for (int c = 0; c < 3; ++c) base[(cy * 4 + cx) * 3 + c] = centre + spread * (2.0 * rng.uniform() - 1.0);
      }
    }
    for (int f = 0; f < spec.frames; ++f) {
      const double ramp = positive ? std::min(1.0, risk_ramp(f, spec.toa, window)) : 0.0;
      for (int y = 0; y < spec.height; ++y) {
        const int cy = y * 4 / spec.height;
        for (int x = 0; x < spec.width; ++x) {
          const int cx = x * 4 / spec.width;
          const bool right = x >= half;
          const double jitter_scale = right ? spec.right_half_max / 255.0 : 1.0;
          for (int c = 0; c < 3; ++c) {
            double value = base[(cy * 4 + cx) * 3 + c] + 6.0 * jitter_scale * rng.normal();
            if (!right && cy >= 1 && cy <= 2) {
              if (c == 0) value += spec.risk_amplitude * ramp;
              if (c == 2) value -= spec.risk_amplitude * ramp;
            }
            v.frames.at(f, y, x, c) = clamp_round(value, right ? spec.right_half_max : 255.0);
          }
        }
      }
    }
    return v;
  };

  std::vector<RawVideo> out;
  for (int i = 0; i < spec.n_pos; ++i) out.push_back(make(true, i));
  for (int i = 0; i < spec.n_neg; ++i) out.push_back(make(false, i));
  return out;
}

// ---------------------------------------------------------------------------

/// Stratified split. Each class contributes test items in proportion to its
/// size; the total test count is round(fraction * size) clamped to leave both
/// sides non-empty, with leftover slots going to the largest remainders.
inline DatasetSplit split_dataset(const std::vector<VideoRecord>& records, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "split: test fraction must lie in (0, 1)");
  require(records.size() >= 2, "split: need at least two records");
  std::set<std::string> ids;
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(ids.insert(records[i].id).second, "split: duplicate record id '" + records[i].id + "'");
    by_class[static_cast<std::size_t>(to_int(records[i].label))].push_back(i);
  }
  require(!by_class[0].empty() && !by_class[1].empty(), "split: both labels must be present");

  const auto total = static_cast<long long>(records.size());
  const long long want = std::clamp<long long>(std::llround(test_fraction * static_cast<double>(total)), 1, total - 1);
  std::array<long long, 2> take{};
  std::array<double, 2> remainder{};
  long long assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double quota = test_fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<long long>(std::floor(quota));
    remainder[c] = quota - static_cast<double>(take[c]);
    assigned += take[c];
  }
  while (assigned < want) {
    // Positive class first on equal remainders.
    const std::size_t c = remainder[1] >= remainder[0] ? 1 : 0;
    const std::size_t pick = take[c] < static_cast<long long>(by_class[c].size()) ? c : 1 - c;
    ++take[pick];
    remainder[pick] = -1.0;
    ++assigned;
  }

  SplitMix64 rng(derive_seed(seed, "split"));
  DatasetSplit split;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::size_t> order = by_class[c];
    rng.shuffle(order);
    std::vector<std::size_t> test(order.begin(), order.begin() + take[c]);
    std::vector<std::size_t> train(order.begin() + take[c], order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    for (auto i : test) split.test.push_back(records[i]);
    for (auto i : train) split.train.push_back(records[i]);
  }
  return split;
}

}  // namespace aant

#endif  // AANT_DATA_MODEL_HPP_
