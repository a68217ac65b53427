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

#ifndef AANT_TEXT_BRANCH_HPP_
#define AANT_TEXT_BRANCH_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aant/autograd.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/rng.hpp"

namespace aant {

inline constexpr int kDefaultTextDim = 768;

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Vector encode(std::string_view text) const = 0;
  virtual int dimension() const = 0;
};

/// Bag-of-words hashing encoder. Tokens are whitespace-separated after ASCII
/// lowercasing; each token seeds its own normal vector, and the sentence
/// vector is the L2-normalized sum.
class MockTextEncoder final : public TextEncoder {
 public:
  explicit MockTextEncoder(int dimension = kDefaultTextDim, std::uint64_t seed = 0) : dim_(dimension), seed_(seed) {
    require(dimension >= 1, "text encoder dimension must be >= 1");
  }

  Vector token_vector(std::string_view token) const {
    SplitMix64 rng(fnv1a64(token) ^ seed_);
    Vector v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = rng.normal();
    return v;
  }

  Vector encode(std::string_view text) const override {
    Vector acc = Vector::Zero(dim_);
    std::string token;
    bool any = false;
    auto flush = [&] {
      if (token.empty()) return;
      acc += token_vector(token);
      token.clear();
      any = true;
    };
    for (unsigned char c : text) {
      if (std::isspace(c)) {
        flush();
      } else {
        token.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
      }
    }
    flush();
    require(any, "text encoder: empty text");
    const double n = acc.norm();
    return n > 0.0 ? Vector(acc / n) : acc;
  }

  int dimension() const override { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
};

inline Vector mock_encode(std::string_view text, std::uint64_t seed, int dimension = kDefaultTextDim) {
  return MockTextEncoder(dimension, seed).encode(text);
}

/// Serves embeddings computed elsewhere: an AANT file whose rows are the
/// embeddings of a list of texts, in the same order.
class PrecomputedTextEncoder final : public TextEncoder {
 public:
  PrecomputedTextEncoder(const std::vector<std::string>& texts, const FeatureMatrix& rows) {
    require_shape(static_cast<Eigen::Index>(texts.size()) == rows.rows(),
                  "precomputed encoder: text count differs from embedding rows");
    dim_ = static_cast<int>(rows.cols());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      table_[texts[i]] = rows.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    }
  }

  static PrecomputedTextEncoder load(const std::filesystem::path& embeddings, const std::filesystem::path& texts_json) {
    const VideoRecord rec = load_feature_file(embeddings);
    std::ifstream in(texts_json);
    require(static_cast<bool>(in), "cannot open text list " + texts_json.string());
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    require(doc.is_array(), "text list must be a JSON array of strings");
    return PrecomputedTextEncoder(doc.get<std::vector<std::string>>(), rec.features);
  }

  Vector encode(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    require(it != table_.end(), "precomputed encoder: no embedding for text");
    return it->second;
  }

  int dimension() const override { return dim_; }

 private:
  int dim_ = 0;
  std::map<std::string, Vector> table_;
};

/// Scaled-normal init (std 1/sqrt(fan_in)) for an in x out matrix.
inline Matrix init_matrix(int fan_in, int fan_out, std::uint64_t seed, std::string_view tag) {
  SplitMix64 rng(derive_seed(seed, tag));
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(fan_in, fan_out);
  for (int i = 0; i < fan_in; ++i) {
    for (int j = 0; j < fan_out; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

inline Matrix init_projection(int text_dim, int dim, std::uint64_t seed) {
  return init_matrix(text_dim, dim, seed, "text-projection");
}

/// eᵀP.
inline RowVector project_to_d(const Vector& e, const Matrix& projection) {
  require_shape(e.size() == projection.rows(), "project_to_d: embedding width differs from projection rows");
  return e.transpose() * projection;
}

inline Vector l2_normalized(const Vector& v) {
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

/// Normalized text embeddings per class, one row per report text.
struct TextBank {
  Matrix negative;  // n_neg x E
  Matrix positive;  // n_pos x E

  int text_dim() const { return static_cast<int>(positive.cols()); }
};

inline TextBank build_text_bank(const std::vector<std::string>& pos_texts, const std::vector<std::string>& neg_texts,
                                const TextEncoder& encoder) {
  require(!pos_texts.empty(), "class embeddings: accident text list is empty");
  require(!neg_texts.empty(), "class embeddings: non-accident text list is empty");
  auto encode_all = [&](const std::vector<std::string>& texts) {
    Matrix m(static_cast<Eigen::Index>(texts.size()), encoder.dimension());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = l2_normalized(encoder.encode(texts[i])).transpose();
    }
    return m;
  };
  return TextBank{encode_all(neg_texts), encode_all(pos_texts)};
}

/// X as a graph node: row 0 non-accident, row 1 accident. Each row is the
/// coordinate-wise max over that class's projected text embeddings, so the
/// projection receives gradients through the arg-max texts.
inline ag::Var class_embeddings(const TextBank& bank, const ag::Var& projection) {
  require_shape(bank.positive.cols() == projection.rows() && bank.negative.cols() == projection.rows(),
                "class embeddings: text width differs from projection rows");
  auto pooled = [&](const Matrix& texts) {
    const ag::Var projected = ag::matmul(ag::Var::constant(texts), projection);
    return ag::max_over_rows(projected, 0, projected.rows());
  };
  return ag::concat_rows({pooled(bank.negative), pooled(bank.positive)});
}

struct ClassEmbeddings {
  Matrix x;  // 2 x D

  int dim() const { return static_cast<int>(x.cols()); }
  RowVector negative() const { return x.row(0); }
  RowVector positive() const { return x.row(1); }
};

inline ClassEmbeddings build_class_embeddings(const std::vector<std::string>& pos_texts,
                                              const std::vector<std::string>& neg_texts, const TextEncoder& encoder,
                                              const Matrix& projection) {
  const TextBank bank = build_text_bank(pos_texts, neg_texts, encoder);
  return ClassEmbeddings{class_embeddings(bank, ag::Var::constant(projection)).value()};
}

}  // namespace aant

#endif  // AANT_TEXT_BRANCH_HPP_
