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
#include <string>
#include <string_view>
#include <vector>

#include "prag/compress.hpp"
#include "prag/corpus.hpp"
#include "prag/engine.hpp"
#include "prag/memguard.hpp"
#include "prag/retrieval.hpp"

namespace prag {

struct PathsConfig {
  std::string corpus_dir = "corpus";
  std::string index_dir = "index";
  std::string lexicon;     // empty = built-in lexicon
  std::string embeddings;  // empty = hash-ngram embedder
};

struct EngineSection {
  std::size_t block_size = 512;
  KvPrecision kv_precision = KvPrecision::int8;
  std::string backend = "mock";  // mock | external
  std::string backend_command;   // runner argv, whitespace separated
  std::size_t context_limit = 8192;
  std::size_t max_new_tokens = 1024;
};

struct MemorySection {
  std::uint64_t budget_bytes = MemoryGuard::kDefaultBudget;
  MemoryMode mode = MemoryMode::accounting;
  std::uint64_t model_bytes = 0;
  std::uint64_t runtime_bytes = 0;
};

// Every tunable of the engine. Loaded from a key = value file with optional
// [section] headers; `section.key` and dotted keys are equivalent. Unknown
// keys are rejected.
struct EngineConfig {
  PathsConfig paths;
  ChunkConfig chunking;
  std::size_t entry_cap = 5000;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  RetrievalConfig retrieval;
  CompressionConfig compression;
  bool compression_enabled = true;
  EngineSection engine;
  LatencyModel latency;
  MemorySection memory;
  std::uint64_t seed = 0;

  // Applies one key. Throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  static EngineConfig parse(std::string_view text);
  static EngineConfig load(const std::filesystem::path& path);
  static const std::vector<std::string>& known_keys();

  std::string dump() const;
};

}  // namespace prag
