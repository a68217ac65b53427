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

#ifndef AANT_VISUAL_BRANCH_HPP_
#define AANT_VISUAL_BRANCH_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "aant/autograd.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/text_branch.hpp"

namespace aant {

inline constexpr int kDefaultFeatureDim = 512;
inline constexpr int kDefaultHeads = 8;

class FrameEncoder {
 public:
  virtual ~FrameEncoder() = default;
  virtual FeatureMatrix encode(const RawFrameSequence& raw) const = 0;
  virtual int dimension() const = 0;
};

/// Whole-frame descriptor: 4x4 grid of per-channel cell means (48 values in
/// [0,1]) times a fixed seeded 48xD matrix, then L2-normalized. A frame whose
/// descriptor is all zero encodes to the zero vector.
class MockFrameEncoder final : public FrameEncoder {
 public:
  static constexpr int kGrid = 4;
  static constexpr int kDescriptor = kGrid * kGrid * 3;

  MockFrameEncoder(int dimension, std::uint64_t seed)
      : dim_(dimension), projection_(init_matrix(kDescriptor, dimension, seed, "frame-encoder")) {
    require(dimension >= 1, "frame encoder dimension must be >= 1");
  }

  static Eigen::Matrix<double, 1, kDescriptor> descriptor(const RawFrameSequence& raw, int frame) {
    Eigen::Matrix<double, 1, kDescriptor> d;
    for (int gy = 0; gy < kGrid; ++gy) {
      const int y0 = gy * raw.height / kGrid;
      const int y1 = (gy + 1) * raw.height / kGrid;
      for (int gx = 0; gx < kGrid; ++gx) {
        const int x0 = gx * raw.width / kGrid;
        const int x1 = (gx + 1) * raw.width / kGrid;
        for (int c = 0; c < 3; ++c) {
          double s = 0.0;
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) s += raw.at(frame, y, x, c);
          }
          d(0, (gy * kGrid + gx) * 3 + c) = s / (255.0 * (y1 - y0) * (x1 - x0));
        }
      }
    }
    return d;
  }

  FeatureMatrix encode(const RawFrameSequence& raw) const override {
    validate_raw(raw);
    require(raw.height >= kGrid && raw.width >= kGrid, "frame encoder: frames must be at least 4x4");
    FeatureMatrix out(raw.n, dim_);
    for (int f = 0; f < raw.n; ++f) {
      RowVector row = descriptor(raw, f) * projection_;
      const double n = row.norm();
      if (n > 0.0) row /= n;
      out.row(f) = row.cast<float>();
    }
    return out;
  }

  int dimension() const override { return dim_; }

 private:
  int dim_;
  Matrix projection_;
};

inline FeatureMatrix mock_encode_frames(const RawFrameSequence& raw, int dimension, std::uint64_t seed) {
  return MockFrameEncoder(dimension, seed).encode(raw);
}

/// Row-vector convention throughout: features are N x D, projections D x D.
struct AttentionParams {
  ag::Var wq;
  ag::Var wk;
  ag::Var wv;
  ag::Var wo;
  int heads = kDefaultHeads;

  int dim() const { return static_cast<int>(wq.rows()); }

  static AttentionParams init(int dim, int heads, std::uint64_t seed) {
    require(heads >= 1 && dim % heads == 0, "attention: heads must divide the feature width");
    return {ag::Var::parameter(init_matrix(dim, dim, seed, "attn-q")),
            ag::Var::parameter(init_matrix(dim, dim, seed, "attn-k")),
            ag::Var::parameter(init_matrix(dim, dim, seed, "attn-v")),
            ag::Var::parameter(init_matrix(dim, dim, seed, "attn-o")), heads};
  }

  static AttentionParams from(const Matrix& q, const Matrix& k, const Matrix& v, const Matrix& o, int heads) {
    return {ag::Var::parameter(q), ag::Var::parameter(k), ag::Var::parameter(v), ag::Var::parameter(o), heads};
  }
};

/// Multi-head self-attention over frames, no positional encoding:
/// X = layernorm(V_f); per head softmax(Q Kᵀ / sqrt(d_k)) V; heads
/// concatenated and projected by W_O. When `weights` is given it receives the
/// per-head N x N attention matrices.
inline ag::Var temporal_attention(const ag::Var& frames, const AttentionParams& p,
                                  std::vector<Matrix>* weights = nullptr) {
  const int d = p.dim();
  require_shape(frames.cols() == d, "temporal_attention: feature width differs from attention width");
  require_shape(p.heads >= 1 && d % p.heads == 0, "temporal_attention: heads must divide the feature width");
  require_shape(p.wk.rows() == d && p.wk.cols() == d && p.wv.rows() == d && p.wv.cols() == d && p.wo.rows() == d &&
                    p.wo.cols() == d && p.wq.cols() == d,
                "temporal_attention: projection matrices must be D x D");
  const int dk = d / p.heads;
  const ag::Var x = ag::layer_norm_rows(frames);
  const ag::Var q = ag::matmul(x, p.wq);
  const ag::Var k = ag::matmul(x, p.wk);
  const ag::Var v = ag::matmul(x, p.wv);
  std::vector<ag::Var> heads;
  heads.reserve(static_cast<std::size_t>(p.heads));
  if (weights) weights->clear();
  for (int h = 0; h < p.heads; ++h) {
    const ag::Var qh = ag::slice_cols(q, h * dk, dk);
    const ag::Var kh = ag::slice_cols(k, h * dk, dk);
    const ag::Var vh = ag::slice_cols(v, h * dk, dk);
    const ag::Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dk)));
    const ag::Var attn = ag::softmax_rows(scores);
    if (weights) weights->push_back(attn.value());
    heads.push_back(ag::matmul(attn, vh));
  }
  return ag::matmul(ag::concat_cols(heads), p.wo);
}

inline Matrix temporal_attention(const Matrix& frames, const AttentionParams& p) {
  return temporal_attention(ag::Var::constant(frames), p).value();
}

/// Single affine layer D -> 2 (column 0 non-accident, column 1 accident).
struct ClassifierHead {
  ag::Var weight;  // D x 2
  ag::Var bias;    // 1 x 2

  static ClassifierHead init(int dim, std::uint64_t seed) {
    return {ag::Var::parameter(init_matrix(dim, 2, seed, "classifier")), ag::Var::parameter(Matrix::Zero(1, 2))};
  }
  static ClassifierHead from(const Matrix& w, const Matrix& b) {
    return {ag::Var::parameter(w), ag::Var::parameter(b)};
  }
};

inline ag::Var classify(const ag::Var& features, const ClassifierHead& head) {
  require_shape(features.cols() == head.weight.rows() && head.weight.cols() == 2, "classify: weight must be D x 2");
  require_shape(head.bias.rows() == 1 && head.bias.cols() == 2, "classify: bias must be 1 x 2");
  return ag::add_row(ag::matmul(features, head.weight), head.bias);
}

inline Matrix classify(const Matrix& features, const ClassifierHead& head) {
  return classify(ag::Var::constant(features), head).value();
}

}  // namespace aant

#endif  // AANT_VISUAL_BRANCH_HPP_
