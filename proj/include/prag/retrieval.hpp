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
#include <string_view>
#include <vector>

#include "prag/lexindex.hpp"
#include "prag/vecindex.hpp"

namespace prag {

struct RetrievalConfig {
  double alpha = 0.6;
  std::size_t top_k = 3;
  std::size_t candidate_cap = 50;
  // false = rank by S_lex alone, no query embedding ("RAG without rerank").
  bool rerank_enabled = true;

  void validate() const;
};

struct RetrievalCandidate {
  std::uint32_t chunk_id = 0;
  double s_lex = 0.0;
  double cosine = 0.0;  // 0 when rerank is disabled
  double hybrid = 0.0;  // U
  bool fallback = false;
  bool operator==(const RetrievalCandidate&) const = default;
};

// U = alpha * cosine + (1 - alpha) * s_lex, unclamped. Throws ConfigError
// when alpha is outside [0, 1].
double hybrid_score(double cosine, double s_lex, double alpha);

// Sorts by hybrid descending, ties by ascending chunk id.
void rank_candidates(std::vector<RetrievalCandidate>& candidates);

struct RetrievalResult {
  QueryKeywords keywords;
  std::vector<LexCandidate> stage1;
  std::vector<RetrievalCandidate> candidates;  // top_k, best first
};

// Two-stage retrieval over indices built from the same corpus. Holds
// references only; the indices must outlive it. Safe for concurrent use.
class Retriever {
 public:
  Retriever(const LexicalIndex& lexical, const VectorIndex& vectors, const KeywordLexicon& lexicon,
            const EmbeddingProvider& embedder);

  // extract_keywords -> prefilter -> embed query -> cosine over candidates ->
  // hybrid score -> rank -> top_k. Embedding failures surface as StageError
  // with stage "query-embedding".
  RetrievalResult retrieve(std::string_view query, const RetrievalConfig& cfg) const;

 private:
  const LexicalIndex& lexical_;
  const VectorIndex& vectors_;
  const KeywordLexicon& lexicon_;
  const EmbeddingProvider& embedder_;
};

}  // namespace prag
