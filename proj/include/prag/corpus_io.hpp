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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prag/corpus.hpp"

namespace prag {

struct CorpusLoad {
  std::vector<RawDocument> documents;
  // "<file>: <reason>" for every file that could not be read or decoded.
  std::vector<std::string> errors;
};

// Reads every .txt/.md file of `dir` in filename order. An optional
// manifest.json maps filename -> {"domain_tag": ..., "source_name": ...}.
CorpusLoad load_corpus_dir(const std::filesystem::path& dir);

// One JSON object per line with keys chunk_id, text, section_title, page_id,
// domain_tag, token_count (in that order).
std::string chunks_to_jsonl(std::span<const Chunk> chunks);

// Inverse of chunks_to_jsonl. Tokens are recomputed from the stored text.
std::vector<Chunk> chunks_from_jsonl(std::string_view jsonl, const Tokenizer& tokenizer = default_tokenizer());

std::vector<Chunk> load_chunks(const std::filesystem::path& path);

}  // namespace prag
