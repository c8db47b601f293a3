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

#include "prag/text.hpp"

namespace prag {

enum class DomainTag { physical, psychological, general };

std::string_view to_string(DomainTag tag);
DomainTag parse_domain_tag(std::string_view s);

struct RawDocument {
  std::string doc_id;
  std::string body;
  std::string source_name;
  DomainTag domain_tag = DomainTag::general;
};

struct ChunkConfig {
  std::size_t window_size = 300;
  std::size_t overlap = 50;

  void validate() const;
  std::size_t stride() const { return window_size - overlap; }
};

struct NormalizeConfig {
  // A trimmed line present on more than this fraction of pages is boilerplate.
  double boilerplate_page_fraction = 0.5;
  // Below this page count the boilerplate rule is skipped; with a single page
  // every line would otherwise qualify.
  std::size_t min_pages_for_boilerplate = 2;
};

struct Chunk {
  std::uint32_t chunk_id = 0;
  std::vector<std::string> tokens;
  std::string text;
  std::string section_title;
  std::uint32_t page_id = 0;  // 1-based; 0 = unknown
  DomainTag domain_tag = DomainTag::general;
  std::size_t token_count = 0;
};

struct ChunkMetadata {
  DomainTag domain_tag = DomainTag::general;
};

// Half-open token index range.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TokenRange&) const = default;
};

// Form-feed separated pages (pdftotext convention). A body with no form feed
// is a single page.
std::vector<std::string> split_pages(std::string_view body);

// Strips repeated header/footer lines and exact-duplicate paragraphs. The
// output has one entry per input page (pages may become empty) unless the
// whole document cleans to nothing, in which case the result is empty.
std::vector<std::string> normalize_text(const RawDocument& raw, std::span<const std::string> pages,
                                        const NormalizeConfig& cfg = {});

// Numbered heading ("3.2 Airway") or a short mostly-capitalized line.
bool is_heading(std::string_view line);

// Window token ranges for a stream of `n_tokens`: stride = window - overlap,
// final window right-aligned to the last token.
std::vector<TokenRange> window_ranges(std::size_t n_tokens, const ChunkConfig& cfg);

// Chunks one cleaned document. Chunk ids start at `first_chunk_id` and are
// dense. Chunk text is the verbatim source span of its tokens.
std::vector<Chunk> chunk_document(std::span<const std::string> cleaned_pages, const ChunkConfig& cfg,
                                  const ChunkMetadata& meta, std::uint32_t first_chunk_id,
                                  const Tokenizer& tokenizer = default_tokenizer());

// normalize_text + chunk_document over a whole corpus, in input order.
std::vector<Chunk> build_corpus(std::span<const RawDocument> docs, const ChunkConfig& cfg,
                                const NormalizeConfig& norm = {},
                                const Tokenizer& tokenizer = default_tokenizer());

}  // namespace prag
