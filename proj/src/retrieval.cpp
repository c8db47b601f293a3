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

#include "prag/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "prag/errors.hpp"

namespace prag {

void RetrievalConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("retrieval.alpha must be in [0, 1]");
  if (top_k < 1) throw ConfigError("retrieval.top_k must be >= 1");
  if (candidate_cap < 1) throw ConfigError("retrieval.candidate_cap must be >= 1");
  if (top_k > candidate_cap) throw ConfigError("retrieval.top_k must not exceed candidate_cap");
}

double hybrid_score(double cosine, double s_lex, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  return alpha * cosine + (1.0 - alpha) * s_lex;
}

void rank_candidates(std::vector<RetrievalCandidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
    if (a.hybrid != b.hybrid) return a.hybrid > b.hybrid;
    return a.chunk_id < b.chunk_id;
  });
}

Retriever::Retriever(const LexicalIndex& lexical, const VectorIndex& vectors, const KeywordLexicon& lexicon,
                     const EmbeddingProvider& embedder)
    : lexical_(lexical), vectors_(vectors), lexicon_(lexicon), embedder_(embedder) {
  if (lexical_.chunk_count() != vectors_.count()) {
    throw ConfigError("lexical index covers " + std::to_string(lexical_.chunk_count()) +
                      " chunks but vector index covers " + std::to_string(vectors_.count()));
  }
  if (embedder_.dim() != vectors_.dim()) throw ConfigError("embedder dim differs from vector index dim");
}

RetrievalResult Retriever::retrieve(std::string_view query, const RetrievalConfig& cfg) const {
  cfg.validate();
  RetrievalResult res;
  res.keywords = extract_keywords(query, lexicon_);
  res.stage1 = lexical_.prefilter(res.keywords, cfg.candidate_cap);
  if (res.stage1.empty()) return res;

  std::vector<RetrievalCandidate> cands;
  cands.reserve(res.stage1.size());
  for (const auto& c : res.stage1) cands.push_back({c.chunk_id, c.s_lex, 0.0, c.s_lex, c.fallback});

  if (cfg.rerank_enabled) {
    QuantizedVector qv;
    try {
      const auto emb = embedder_.embed(query);
      if (emb.size() != vectors_.dim()) throw ValueError("query embedding has wrong dimension");
      qv = quantize_vector(emb);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("query-embedding", e.what());
    }
    std::vector<std::uint32_t> ids;
    ids.reserve(cands.size());
    for (const auto& c : cands) ids.push_back(c.chunk_id);
    const auto cos = vectors_.top_cosine(qv, ids);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      cands[i].cosine = cos[i].second;
      cands[i].hybrid = hybrid_score(cands[i].cosine, cands[i].s_lex, cfg.alpha);
    }
  }

  rank_candidates(cands);
  if (cands.size() > cfg.top_k) cands.resize(cfg.top_k);
  res.candidates = std::move(cands);
  return res;
}

}  // namespace prag
