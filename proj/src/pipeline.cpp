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

#include "prag/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "prag/binio.hpp"
#include "prag/corpus_io.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace fs = std::filesystem;

std::string_view to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::vanilla: return "vanilla";
    case PipelineMode::rag: return "rag";
    case PipelineMode::rag_rerank: return "rag-rerank";
  }
  return "?";
}

PipelineMode parse_pipeline_mode(std::string_view s) {
  if (s == "vanilla") return PipelineMode::vanilla;
  if (s == "rag") return PipelineMode::rag;
  if (s == "rag-rerank" || s == "rag_rerank") return PipelineMode::rag_rerank;
  throw ConfigError("pipeline config must be vanilla|rag|rag-rerank, got '" + std::string(s) + "'");
}

KeywordLexicon load_lexicon(const EngineConfig& cfg) {
  return cfg.paths.lexicon.empty() ? KeywordLexicon::builtin() : KeywordLexicon::load(cfg.paths.lexicon);
}

std::shared_ptr<const EmbeddingProvider> make_embedder(const EngineConfig& cfg) {
  if (cfg.paths.embeddings.empty()) return std::make_shared<HashNgramEmbedder>(cfg.embedding_dim);
  return std::make_shared<PrecomputedEmbeddings>(PrecomputedEmbeddings::load(cfg.paths.embeddings, cfg.embedding_dim));
}

std::unique_ptr<MemoryGuard> make_guard(const EngineConfig& cfg) {
  auto guard = std::make_unique<MemoryGuard>(cfg.memory.budget_bytes, cfg.memory.mode);
  if (cfg.memory.model_bytes > 0) guard->register_component("model.weights", cfg.memory.model_bytes);
  if (cfg.memory.runtime_bytes > 0) guard->register_component("runtime.base", cfg.memory.runtime_bytes);
  return guard;
}

BuildOutcome build_knowledge_base(std::vector<Chunk> chunks, const EngineConfig& cfg, MemoryGuard& guard) {
  BuildOutcome out;
  auto kb = std::make_unique<KnowledgeBase>();
  kb->chunks = std::move(chunks);
  kb->lexicon = load_lexicon(cfg);
  kb->embedder = make_embedder(cfg);
  kb->lexical = LexicalIndex::build(kb->chunks, kb->lexicon, cfg.entry_cap);

  const std::uint64_t lex_bytes = kb->lexical.byte_size();
  const std::uint64_t vec_bytes =
      VectorIndex::kHeaderBytes + static_cast<std::uint64_t>(kb->chunks.size()) * (8 + kb->embedder->dim());
  out.projected_index_bytes = lex_bytes + vec_bytes;
  out.admission = guard.check_admission(out.projected_index_bytes);
  if (!out.admission) return out;

  guard.register_component("index.lexical", lex_bytes);
  kb->vectors = VectorIndex::build(kb->chunks, *kb->embedder, &guard);
  out.kb = std::move(kb);
  return out;
}

void save_knowledge_base(const KnowledgeBase& kb, const fs::path& index_dir) {
  fs::create_directories(index_dir);
  binio::write_text_file((index_dir / kChunksFile).string(), chunks_to_jsonl(kb.chunks));
  kb.lexical.save(index_dir / kLexIndexFile);
  kb.vectors.save(index_dir / kVecIndexFile);
}

std::unique_ptr<KnowledgeBase> load_knowledge_base(const EngineConfig& cfg, MemoryGuard* guard) {
  const fs::path dir = cfg.paths.index_dir;
  for (auto name : {kChunksFile, kLexIndexFile, kVecIndexFile}) {
    if (!fs::exists(dir / name)) {
      throw LookupError("index file " + (dir / name).string() +
                        " not found; run `pocketrag ingest` and `pocketrag build-index` first");
    }
  }
  auto kb = std::make_unique<KnowledgeBase>();
  kb->chunks = load_chunks(dir / kChunksFile);
  kb->lexicon = load_lexicon(cfg);
  kb->embedder = make_embedder(cfg);
  kb->lexical = LexicalIndex::load(dir / kLexIndexFile);
  kb->vectors = VectorIndex::load(dir / kVecIndexFile);
  if (kb->lexical.chunk_count() != kb->chunks.size() || kb->vectors.count() != kb->chunks.size()) {
    throw FormatError("index files in " + dir.string() + " disagree on the chunk count; rebuild the index");
  }
  if (kb->vectors.dim() != kb->embedder->dim()) {
    throw ConfigError("vector index has dim " + std::to_string(kb->vectors.dim()) + " but embedding.dim is " +
                      std::to_string(kb->embedder->dim()));
  }
  if (guard) {
    guard->register_component("index.lexical", kb->lexical.byte_size());
    guard->register_component("index.vector", kb->vectors.byte_size());
  }
  return kb;
}

std::unique_ptr<GenerationBackend> make_backend(const EngineConfig& cfg, MockBackend::Mode mock_mode) {
  if (cfg.engine.backend == "external") {
    std::vector<std::string> argv;
    std::istringstream is(cfg.engine.backend_command);
    for (std::string a; is >> a;) argv.push_back(a);
    return std::make_unique<ExternalProcessBackend>(std::move(argv), cfg.engine.context_limit);
  }
  return std::make_unique<MockBackend>(mock_mode, cfg.engine.context_limit);
}

GenerationConfig generation_config(const EngineConfig& cfg, std::uint64_t seed) {
  GenerationConfig g;
  g.block_size = cfg.engine.block_size;
  g.kv_precision = cfg.engine.kv_precision;
  g.max_new_tokens = cfg.engine.max_new_tokens;
  g.seed = seed;
  g.latency = cfg.latency;
  return g;
}

AnswerTrace answer(const KnowledgeBase* kb, const AnswerRequest& req, GenerationBackend& backend,
                   MemoryGuard& guard, const EngineConfig& cfg, const TokenConsumer& consumer) {
  AnswerTrace trace;
  trace.retrieval_enabled = req.mode != PipelineMode::vanilla;
  if (trace.retrieval_enabled) {
    if (!kb) throw ConfigError("retrieval requested without a loaded index");
    auto rcfg = cfg.retrieval;
    rcfg.rerank_enabled = req.mode == PipelineMode::rag_rerank;
    trace.retrieval = kb->retriever().retrieve(req.question, rcfg);

    std::vector<ContextChunk> ctx;
    ctx.reserve(trace.retrieval.candidates.size());
    for (const auto& c : trace.retrieval.candidates) ctx.push_back({c.chunk_id, kb->chunks.at(c.chunk_id).text, c.hybrid});
    trace.context = req.compress ? compress_context(ctx, trace.retrieval.keywords, kb->lexicon, cfg.compression)
                                 : passthrough_context(ctx);
  }
  const auto prompt =
      build_prompt(req.question, req.options, trace.context.empty() ? nullptr : &trace.context);
  trace.prompt_text = prompt.text;
  trace.generation = generate(prompt, backend, guard, generation_config(cfg, req.seed), consumer);
  return trace;
}

std::string metrics_line(const AnswerTrace& trace, PipelineMode mode) {
  std::ostringstream os;
  if (!trace.retrieval_enabled) {
    os << "retrieval: disabled";
  } else {
    os << "retrieval: " << to_string(mode) << " chunks=";
    for (std::size_t i = 0; i < trace.retrieval.candidates.size(); ++i) {
      os << (i ? "," : "") << trace.retrieval.candidates[i].chunk_id;
    }
    if (trace.retrieval.candidates.empty()) os << "none";
  }
  const auto& g = trace.generation;
  char buf[256];
  std::snprintf(buf, sizeof buf, " | reduction: %.1f%% | ttft_ms: %.2f | tps: %.2f | sim_ttft_ms: %.1f | sim_tps: %.2f | ",
                100.0 * trace.context.reduction, g.ttft_ms, g.tokens_per_second, g.simulated_prefill_ms,
                g.simulated_tps);
  os << buf << g.pressure.metrics_line();
  if (g.truncated) os << " | truncated";
  return os.str();
}

}  // namespace prag
