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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "prag/compress.hpp"
#include "prag/config.hpp"
#include "prag/corpus.hpp"
#include "prag/engine.hpp"
#include "prag/lexindex.hpp"
#include "prag/memguard.hpp"
#include "prag/retrieval.hpp"
#include "prag/vecindex.hpp"

namespace prag {

enum class PipelineMode { vanilla, rag, rag_rerank };

std::string_view to_string(PipelineMode m);
// "vanilla" | "rag" | "rag-rerank"
PipelineMode parse_pipeline_mode(std::string_view s);

inline constexpr std::string_view kChunksFile = "chunks.jsonl";
inline constexpr std::string_view kLexIndexFile = "lexindex.bin";
inline constexpr std::string_view kVecIndexFile = "vecindex.bin";

KeywordLexicon load_lexicon(const EngineConfig& cfg);
std::shared_ptr<const EmbeddingProvider> make_embedder(const EngineConfig& cfg);

// Guard with the configured budget and the static model/runtime components
// ("model.weights", "runtime.base") registered.
std::unique_ptr<MemoryGuard> make_guard(const EngineConfig& cfg);

// Chunks plus both indices. Not movable: the retriever refers into it.
struct KnowledgeBase {
  std::vector<Chunk> chunks;
  KeywordLexicon lexicon;
  LexicalIndex lexical;
  VectorIndex vectors;
  std::shared_ptr<const EmbeddingProvider> embedder;

  KnowledgeBase() = default;
  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  Retriever retriever() const { return Retriever(lexical, vectors, lexicon, *embedder); }
  std::uint64_t index_bytes() const { return lexical.byte_size() + vectors.byte_size(); }
};

struct BuildOutcome {
  Admission admission;
  std::uint64_t projected_index_bytes = 0;
  std::unique_ptr<KnowledgeBase> kb;  // null when rejected
};

// Builds the lexical index, projects the vector index size, asks the guard
// for admission and only then embeds. On success the index components are
// registered as "index.lexical" and "index.vector".
BuildOutcome build_knowledge_base(std::vector<Chunk> chunks, const EngineConfig& cfg, MemoryGuard& guard);

void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& index_dir);

// Throws LookupError naming the missing file when the index dir is incomplete.
std::unique_ptr<KnowledgeBase> load_knowledge_base(const EngineConfig& cfg, MemoryGuard* guard = nullptr);

std::unique_ptr<GenerationBackend> make_backend(const EngineConfig& cfg,
                                                MockBackend::Mode mock_mode = MockBackend::Mode::echo);
GenerationConfig generation_config(const EngineConfig& cfg, std::uint64_t seed);

struct AnswerRequest {
  std::string question;
  std::vector<std::string> options;
  PipelineMode mode = PipelineMode::rag_rerank;
  bool compress = true;
  std::uint64_t seed = 0;
};

struct AnswerTrace {
  bool retrieval_enabled = false;
  RetrievalResult retrieval;
  CompressedContext context;
  std::string prompt_text;
  GenerationResult generation;
};

// retrieve -> compress -> prompt -> generate. `kb` may be null for vanilla.
AnswerTrace answer(const KnowledgeBase* kb, const AnswerRequest& req, GenerationBackend& backend,
                   MemoryGuard& guard, const EngineConfig& cfg, const TokenConsumer& consumer = {});

// "retrieval: rag-rerank chunks=3,1,7 | reduction: 31.2% | ttft_ms: ... | tps: ... | rho=...,tier=...,t_max=..."
std::string metrics_line(const AnswerTrace& trace, PipelineMode mode);

}  // namespace prag
