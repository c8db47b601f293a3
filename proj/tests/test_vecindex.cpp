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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "prag/errors.hpp"
#include "prag/memguard.hpp"
#include "prag/quant.hpp"
#include "prag/vecindex.hpp"

using namespace prag;

namespace {

// Gaussian-ish components from a portable uniform source (sum of 4 uniforms).
std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double n = 0;
  for (auto& x : v) {
    double s = 0;
    for (int k = 0; k < 4; ++k) s += static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
    x = static_cast<float>(s);
    n += s * s;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
  return v;
}

Chunk chunk_with(std::uint32_t id, std::string text) {
  Chunk c;
  c.chunk_id = id;
  c.text = std::move(text);
  return c;
}

}  // namespace

TEST(Quantize, ZeroVector) {
  const std::vector<float> z(16, 0.0f);
  const auto q = quantize_vector(z);
  EXPECT_EQ(q.scale, 0.0f);
  EXPECT_EQ(q.norm, 0.0f);
  for (auto x : q.q) EXPECT_EQ(x, 0);
}

TEST(Quantize, MaxAbsExample) {
  std::vector<float> v = {0.1f, -2.54f, 1.0f, 0.0f};
  const auto q = quantize_vector(v);
  EXPECT_NEAR(q.scale, 0.02f, 1e-7);
  EXPECT_EQ(q.q[1], -127);
  v[1] = 2.54f;
  EXPECT_EQ(quantize_vector(v).q[1], 127);
}

TEST(Quantize, RejectsNonFinite) {
  const std::vector<float> nan = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  const std::vector<float> inf = {std::numeric_limits<float>::infinity()};
  EXPECT_THROW(quantize_vector(nan), ValueError);
  EXPECT_THROW(quantize_vector(inf), ValueError);
}

TEST(Quantize, RoundTripWithinHalfStep) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const auto v = random_unit(rng, 384);
    const auto q = quantize_vector(v);
    const double s = q.scale;
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_LE(std::fabs(q.q[i] * s - v[i]), s / 2) << "vector " << t;
  }
}

TEST(Quantize, ScaleInvariantCodes) {
  std::mt19937_64 rng(5);
  const auto v = random_unit(rng, 64);
  const auto base = quantize_vector(v);
  for (float c : {0.5f, 2.0f, 8.0f}) {
    std::vector<float> w(v);
    for (auto& x : w) x *= c;
    const auto q = quantize_vector(w);
    EXPECT_EQ(q.q, base.q);
    EXPECT_FLOAT_EQ(q.scale, base.scale * c);
  }
}

TEST(CosineQ, SelfOrthogonalZeroAndSymmetry) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const auto a = quantize_vector(random_unit(rng, 384));
    const auto b = quantize_vector(random_unit(rng, 384));
    EXPECT_NEAR(cosine_q(a, a), 1.0, 0.02);
    EXPECT_EQ(cosine_q(a, b), cosine_q(b, a));
  }
  std::vector<float> e1(384, 0.0f), e2(384, 0.0f), z(384, 0.0f);
  e1[0] = 1.0f;
  e2[1] = 1.0f;
  EXPECT_NEAR(cosine_q(quantize_vector(e1), quantize_vector(e2)), 0.0, 0.02);
  EXPECT_EQ(cosine_q(quantize_vector(z), quantize_vector(e1)), 0.0);
  std::vector<float> short_v(3, 1.0f);
  EXPECT_THROW(cosine_q(quantize_vector(e1), quantize_vector(short_v)), ValueError);
}

TEST(CosineQ, TracksFloatCosine) {
  std::mt19937_64 rng(13);
  int within = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const auto a = random_unit(rng, 384);
    const auto b = random_unit(rng, 384);
    if (std::fabs(cosine_q(quantize_vector(a), quantize_vector(b)) - oracle::cosine(a, b)) <= 0.02) ++within;
  }
  EXPECT_GE(within, trials * 99 / 100);
}

TEST(HashNgram, DeterministicUnitAndCaseInsensitive) {
  HashNgramEmbedder e(384);
  const auto a = e.embed("Apply firm pressure to the wound");
  EXPECT_EQ(a.size(), 384u);
  EXPECT_EQ(a, e.embed("Apply firm pressure to the wound"));
  EXPECT_EQ(a, e.embed("apply   FIRM pressure to the wound"));
  double n = 0;
  for (float x : a) n += static_cast<double>(x) * x;
  EXPECT_NEAR(n, 1.0, 1e-5);
  const auto empty = e.embed("");
  for (float x : empty) EXPECT_TRUE(std::isfinite(x));
  EXPECT_GT(oracle::cosine(a, e.embed("apply pressure to the wound")),
            oracle::cosine(a, e.embed("psychological first aid listening")));
  EXPECT_THROW(HashNgramEmbedder(0), ConfigError);
}

TEST(Precomputed, RowsByChunkIdAndNoQueryEncoder) {
  std::vector<float> rows = {1, 0, 0, 0, 1, 0};
  PrecomputedEmbeddings p(rows, 3);
  EXPECT_EQ(p.count(), 2u);
  EXPECT_EQ(p.embed_chunk(chunk_with(1, "x")), (std::vector<float>{0, 1, 0}));
  EXPECT_THROW(p.embed_chunk(chunk_with(2, "x")), LookupError);
  try {
    p.embed("query");
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "query-embedding");
  }
  EXPECT_THROW(PrecomputedEmbeddings(std::vector<float>{1, 2}, 3), FormatError);
  auto enc = std::make_shared<HashNgramEmbedder>(3);
  PrecomputedEmbeddings with(rows, 3, enc);
  EXPECT_EQ(with.embed("q").size(), 3u);
}

TEST(VectorIndex, BuildSizesAndSelfRetrieval) {
  HashNgramEmbedder e(384);
  std::vector<Chunk> chunks;
  const char* texts[] = {"airway obstruction in children", "severe bleeding control", "burn cooling with water",
                         "fracture splinting", "shock position and warmth", "panic attack grounding technique",
                         "snake bite immobilisation", "heat stroke cooling"};
  for (std::uint32_t i = 0; i < 8; ++i) chunks.push_back(chunk_with(i, texts[i]));
  MemoryGuard guard;
  const auto idx = VectorIndex::build(chunks, e, &guard);
  EXPECT_EQ(idx.count(), 8u);
  EXPECT_EQ(idx.byte_size(), VectorIndex::kHeaderBytes + 8 * (384 + 8));
  EXPECT_EQ(guard.ledger().m_index, idx.byte_size());

  const auto q = quantize_vector(e.embed(texts[5]));
  std::vector<std::uint32_t> all = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto scores = idx.top_cosine(q, all);
  ASSERT_EQ(scores.size(), 8u);
  std::uint32_t best = 0;
  for (const auto& [id, s] : scores) {
    if (s > scores[best].second) best = id;
  }
  EXPECT_EQ(best, 5u);
  EXPECT_TRUE(idx.top_cosine(q, {}).empty());
  const std::vector<std::uint32_t> one = {3};
  EXPECT_EQ(idx.top_cosine(q, one).size(), 1u);
  const std::vector<std::uint32_t> bad = {8};
  EXPECT_THROW(idx.top_cosine(q, bad), LookupError);

  EXPECT_EQ(VectorIndex::build(chunks, e).serialize(), idx.serialize());
  EXPECT_EQ(VectorIndex::build(std::vector<Chunk>{}, e).count(), 0u);
}

TEST(VectorIndex, PaperScaleSizeArithmetic) {
  // 8,000 chunks at dim 384: codes plus per-row scale and norm.
  VectorIndex idx(384);
  const QuantizedVector v{std::vector<std::int8_t>(384, 1), 0.01f, 1.0f};
  for (int i = 0; i < 8000; ++i) idx.append(v);
  EXPECT_EQ(idx.payload_bytes(), 8000u * 384u);
  EXPECT_EQ(idx.byte_size(), VectorIndex::kHeaderBytes + 8000u * 392u);
}

TEST(VectorIndex, ProviderFailureNamesChunk) {
  PrecomputedEmbeddings p(std::vector<float>{1, 0, 0}, 3);
  const std::vector<Chunk> chunks = {chunk_with(0, "a"), chunk_with(1, "b")};
  try {
    VectorIndex::build(chunks, p);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("chunk 1"), std::string::npos);
  }
}

TEST(VectorIndex, SerializationRoundTrip) {
  HashNgramEmbedder e(32);
  const std::vector<Chunk> chunks = {chunk_with(0, "one"), chunk_with(1, "two words"), chunk_with(2, "")};
  const auto idx = VectorIndex::build(chunks, e);
  const auto path = std::filesystem::temp_directory_path() / "prag_vecindex_test.bin";
  idx.save(path);
  const auto back = VectorIndex::load(path);
  EXPECT_EQ(back.serialize(), idx.serialize());
  EXPECT_EQ(back.dim(), 32u);
  std::filesystem::remove(path);

  auto bytes = idx.serialize();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PRVX");
  bytes.pop_back();
  EXPECT_THROW(VectorIndex::deserialize(bytes), FormatError);
}
