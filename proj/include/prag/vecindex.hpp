/*
 * Copyright 2026 The PocketRAG Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prag/corpus.hpp"

namespace prag {

class MemoryGuard;

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

// Text encoder. embed() must return exactly dim() finite values and be
// deterministic for identical input.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> embed(std::string_view text) const = 0;
  virtual std::vector<float> embed_chunk(const Chunk& chunk) const { return embed(chunk.text); }
};

// Signed feature hashing of lowercase character 3-grams, L2-normalized.
// Deterministic and dependency-free; stands in for a neural encoder.
class HashNgramEmbedder final : public EmbeddingProvider {
 public:
  explicit HashNgramEmbedder(std::size_t dim = kDefaultEmbeddingDim);
  std::string name() const override { return "hash-ngram-3"; }
  std::size_t dim() const override { return dim_; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

// Chunk embeddings produced offline by an external encoder: `embeddings.f32`
// holds count x dim little-endian float32, row = chunk_id. Queries go through
// `query_encoder`; without one, embed() throws.
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  PrecomputedEmbeddings(std::vector<float> rows, std::size_t dim,
                        std::shared_ptr<const EmbeddingProvider> query_encoder = nullptr);
  static PrecomputedEmbeddings load(const std::filesystem::path& path, std::size_t dim,
                                    std::shared_ptr<const EmbeddingProvider> query_encoder = nullptr);

  std::string name() const override { return "precomputed"; }
  std::size_t dim() const override { return dim_; }
  std::size_t count() const { return rows_.size() / dim_; }
  std::vector<float> embed(std::string_view text) const override;
  std::vector<float> embed_chunk(const Chunk& chunk) const override;

 private:
  std::vector<float> rows_;
  std::size_t dim_;
  std::shared_ptr<const EmbeddingProvider> query_encoder_;
};

struct QuantizedView {
  std::span<const std::int8_t> q;
  float scale = 0.0f;
  float norm = 0.0f;
};

struct QuantizedVector {
  std::vector<std::int8_t> q;
  float scale = 0.0f;  // max|v| / 127, 0 for the zero vector
  float norm = 0.0f;   // L2 norm of the unquantized vector

  std::size_t dim() const { return q.size(); }
  QuantizedView view() const { return {q, scale, norm}; }
};

// Throws ValueError on NaN/Inf.
QuantizedVector quantize_vector(std::span<const float> v);

// (sum a.q*b.q) * a.scale * b.scale / (a.norm * b.norm), clamped to [-1, 1];
// 0 if either norm is 0. Throws ValueError on dimension mismatch.
double cosine_q(const QuantizedView& a, const QuantizedView& b);
inline double cosine_q(const QuantizedVector& a, const QuantizedVector& b) { return cosine_q(a.view(), b.view()); }

// Flat INT8 index, row = chunk_id. Immutable after build.
class VectorIndex {
 public:
  static constexpr std::uint16_t kFormatVersion = 1;
  static constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 4;

  VectorIndex() = default;
  explicit VectorIndex(std::size_t dim) : dim_(dim) {}

  // Embeds and quantizes every chunk. A provider failure aborts the build with
  // the offending chunk id in the message. When `guard` is given the index
  // size is registered as "index.vector".
  static VectorIndex build(std::span<const Chunk> chunks, const EmbeddingProvider& provider,
                           MemoryGuard* guard = nullptr);

  void append(const QuantizedVector& v);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return scales_.size(); }
  QuantizedView at(std::uint32_t id) const;

  // Cosine of `query` against each candidate, in candidate order. Throws
  // LookupError for ids >= count().
  std::vector<std::pair<std::uint32_t, double>> top_cosine(const QuantizedVector& query,
                                                           std::span<const std::uint32_t> candidates) const;

  std::size_t byte_size() const { return kHeaderBytes + count() * (8 + dim_); }
  std::size_t payload_bytes() const { return codes_.size(); }

  // PRVX v1: magic, u16 version, u16 dim, u32 count, then per vector f32 scale,
  // f32 norm, dim x i8. Little-endian, fixed stride.
  std::vector<std::uint8_t> serialize() const;
  static VectorIndex deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = kDefaultEmbeddingDim;
  std::vector<std::int8_t> codes_;
  std::vector<float> scales_;
  std::vector<float> norms_;
};

}  // namespace prag
