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

#include "prag/vecindex.hpp"

#include <algorithm>
#include <cmath>

#include "prag/binio.hpp"
#include "prag/errors.hpp"
#include "prag/memguard.hpp"
#include "prag/quant.hpp"

namespace prag {

HashNgramEmbedder::HashNgramEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ConfigError("embedding dim must be >= 1");
}

std::vector<float> HashNgramEmbedder::embed(std::string_view text) const {
  std::vector<double> acc(dim_, 0.0);
  const std::string s = " " + to_lower(collapse_whitespace(text)) + " ";
  if (s.size() > 2) {
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
      const auto h = fnv1a64(std::string_view(s).substr(i, 3));
      const auto bucket = static_cast<std::size_t>(h % dim_);
      acc[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<float> out(dim_, 0.0f);
  if (norm > 0.0) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
  }
  return out;
}

PrecomputedEmbeddings::PrecomputedEmbeddings(std::vector<float> rows, std::size_t dim,
                                             std::shared_ptr<const EmbeddingProvider> query_encoder)
    : rows_(std::move(rows)), dim_(dim), query_encoder_(std::move(query_encoder)) {
  if (dim_ == 0) throw ConfigError("embedding dim must be >= 1");
  if (rows_.size() % dim_ != 0) throw FormatError("embeddings: size is not a multiple of dim");
  if (query_encoder_ && query_encoder_->dim() != dim_) throw ConfigError("query encoder dim differs from embeddings dim");
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(const std::filesystem::path& path, std::size_t dim,
                                                  std::shared_ptr<const EmbeddingProvider> query_encoder) {
  const auto bytes = binio::read_file(path.string());
  if (dim == 0 || bytes.size() % (dim * 4) != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) + " is not count x " +
                      std::to_string(dim) + " x 4 bytes");
  }
  binio::Reader r(bytes, path.string());
  std::vector<float> rows(bytes.size() / 4);
  for (auto& x : rows) x = r.f32();
  return PrecomputedEmbeddings(std::move(rows), dim, std::move(query_encoder));
}

std::vector<float> PrecomputedEmbeddings::embed(std::string_view text) const {
  if (!query_encoder_) throw StageError("query-embedding", "precomputed embeddings have no query encoder");
  return query_encoder_->embed(text);
}

std::vector<float> PrecomputedEmbeddings::embed_chunk(const Chunk& chunk) const {
  if (chunk.chunk_id >= count()) {
    throw LookupError("no precomputed embedding for chunk " + std::to_string(chunk.chunk_id));
  }
  const auto begin = rows_.begin() + static_cast<std::ptrdiff_t>(chunk.chunk_id * dim_);
  return {begin, begin + static_cast<std::ptrdiff_t>(dim_)};
}

QuantizedVector quantize_vector(std::span<const float> v) {
  QuantizedVector out;
  out.q.resize(v.size());
  out.scale = quantize_symmetric(v, out.q);
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  out.norm = static_cast<float>(std::sqrt(sq));
  return out;
}

double cosine_q(const QuantizedView& a, const QuantizedView& b) {
  if (a.q.size() != b.q.size()) {
    throw ValueError("cosine_q: dimension mismatch (" + std::to_string(a.q.size()) + " vs " +
                     std::to_string(b.q.size()) + ")");
  }
  if (a.norm == 0.0f || b.norm == 0.0f) return 0.0;
  std::int32_t dot = 0;
  for (std::size_t i = 0; i < a.q.size(); ++i) dot += static_cast<std::int32_t>(a.q[i]) * b.q[i];
  // Scale and norm products are formed first so the result is symmetric in a, b.
  const double scales = static_cast<double>(a.scale) * b.scale;
  const double norms = static_cast<double>(a.norm) * b.norm;
  return std::clamp(dot * scales / norms, -1.0, 1.0);
}

VectorIndex VectorIndex::build(std::span<const Chunk> chunks, const EmbeddingProvider& provider, MemoryGuard* guard) {
  VectorIndex idx(provider.dim());
  idx.codes_.reserve(chunks.size() * idx.dim_);
  for (const auto& c : chunks) {
    try {
      const auto v = provider.embed_chunk(c);
      if (v.size() != idx.dim_) {
        throw ValueError("provider returned " + std::to_string(v.size()) + " values, expected " +
                         std::to_string(idx.dim_));
      }
      idx.append(quantize_vector(v));
    } catch (const std::exception& e) {
      throw StageError("embedding", "chunk " + std::to_string(c.chunk_id) + ": " + e.what());
    }
  }
  if (guard) guard->update("index.vector", idx.byte_size());
  return idx;
}

void VectorIndex::append(const QuantizedVector& v) {
  if (v.dim() != dim_) throw ValueError("append: dimension mismatch");
  codes_.insert(codes_.end(), v.q.begin(), v.q.end());
  scales_.push_back(v.scale);
  norms_.push_back(v.norm);
}

QuantizedView VectorIndex::at(std::uint32_t id) const {
  if (id >= count()) throw LookupError("vector index has no chunk " + std::to_string(id));
  return {std::span<const std::int8_t>(codes_).subspan(static_cast<std::size_t>(id) * dim_, dim_), scales_[id],
          norms_[id]};
}

std::vector<std::pair<std::uint32_t, double>> VectorIndex::top_cosine(const QuantizedVector& query,
                                                                      std::span<const std::uint32_t> candidates) const {
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(candidates.size());
  const auto qv = query.view();
  for (auto id : candidates) out.emplace_back(id, cosine_q(qv, at(id)));
  return out;
}

std::vector<std::uint8_t> VectorIndex::serialize() const {
  if (dim_ > 0xFFFF) throw FormatError("vecindex.bin: dim does not fit u16");
  binio::Writer w;
  w.magic("PRVX");
  w.u16(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(dim_));
  w.u32(static_cast<std::uint32_t>(count()));
  for (std::size_t i = 0; i < count(); ++i) {
    w.f32(scales_[i]);
    w.f32(norms_[i]);
    w.bytes(codes_.data() + i * dim_, dim_);
  }
  return w.data();
}

VectorIndex VectorIndex::deserialize(const std::vector<std::uint8_t>& bytes) {
  binio::Reader r(bytes, "vecindex.bin");
  r.expect_magic("PRVX");
  if (const auto v = r.u16(); v != kFormatVersion) throw FormatError("vecindex.bin: unsupported version " + std::to_string(v));
  const std::size_t dim = r.u16();
  const std::size_t count = r.u32();
  if (dim == 0) throw FormatError("vecindex.bin: dim is 0");
  if (r.remaining() != count * (8 + dim)) throw FormatError("vecindex.bin: payload size does not match header");
  VectorIndex idx(dim);
  idx.codes_.resize(count * dim);
  idx.scales_.resize(count);
  idx.norms_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    idx.scales_[i] = r.f32();
    idx.norms_[i] = r.f32();
    r.skip_into(idx.codes_.data() + i * dim, dim);
  }
  return idx;
}

void VectorIndex::save(const std::filesystem::path& path) const { binio::write_file(path.string(), serialize()); }

VectorIndex VectorIndex::load(const std::filesystem::path& path) { return deserialize(binio::read_file(path.string())); }

}  // namespace prag
