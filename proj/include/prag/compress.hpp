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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prag/lexindex.hpp"

namespace prag {

// A retrieved chunk handed to compression, in rank order. `weight` is the
// retrieval score (hybrid U), carried through for downstream consumers.
struct ContextChunk {
  std::uint32_t chunk_id = 0;
  std::string text;
  double weight = 0.0;
};

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;
  std::uint32_t source_chunk_id = 0;
  std::size_t position_in_chunk = 0;
  double score = 0.0;
  bool has_query_phrase = false;
};

struct CompressionConfig {
  double target_reduction_min = 0.20;
  double target_reduction_max = 0.40;
  bool always_keep_first = true;

  void validate() const;
};

enum class CompressionRegime {
  in_band,      // reduction landed in [min, max]
  constrained,  // protected sentences alone exceed the (1 - min) token bound
  granularity,  // sentence sizes made the band unreachable; kept more instead
  single,       // one sentence or less: returned intact
  disabled,     // compression switched off
};

std::string_view to_string(CompressionRegime r);

struct CompressedContext {
  std::vector<Sentence> kept_sentences;  // original order
  std::vector<ContextChunk> chunks;      // source chunks in rank order, text included
  std::size_t original_tokens = 0;
  std::size_t kept_tokens = 0;
  double reduction = 0.0;  // 1 - kept / original
  CompressionRegime regime = CompressionRegime::single;

  bool empty() const { return kept_sentences.empty(); }
  // Kept sentences grouped per chunk; chunks separated by a blank line.
  std::string text() const;
  double chunk_weight(std::uint32_t chunk_id) const;
};

// Splits at '.', '!' or '?' followed by whitespace and an uppercase letter or
// digit. "e.g.", "i.e.", "Dr." and "vs." never end a sentence. Text without a
// terminator is one sentence.
std::vector<Sentence> split_sentences(const ContextChunk& chunk);

// 2 per distinct query phrase present + 1 per distinct other lexicon phrase.
double score_sentence(const Sentence& s, const QueryKeywords& kq, const KeywordLexicon& lexicon);

// Keeps the highest scoring sentences until the reduction falls within
// [min, max]. Sentences holding a query phrase are never dropped, and the first
// sentence of each chunk is kept when always_keep_first; both outrank the
// reduction targets. Reduction never exceeds max.
CompressedContext compress_context(std::span<const ContextChunk> chunks, const QueryKeywords& kq,
                                   const KeywordLexicon& lexicon, const CompressionConfig& cfg = {});

// All sentences kept, reduction 0.
CompressedContext passthrough_context(std::span<const ContextChunk> chunks);

}  // namespace prag
