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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "prag/corpus.hpp"

namespace prag {

inline constexpr std::size_t kMaxPhraseTokens = 3;

// Lowercase domain phrases of 1-3 tokens plus the stopword list used to
// reject phrases made only of function words.
class KeywordLexicon {
 public:
  KeywordLexicon() = default;
  // Phrases are normalized (lowercased, re-tokenized, single-space joined).
  // Throws FormatError for phrases longer than 3 tokens or made only of stopwords.
  explicit KeywordLexicon(std::span<const std::string> phrases,
                          std::set<std::string> stopwords = default_stopwords());

  // One phrase per line, '#' starts a comment. Throws when nothing remains.
  static KeywordLexicon parse(std::string_view text);
  static KeywordLexicon load(const std::filesystem::path& path);
  // Shipped emergency-care lexicon.
  static KeywordLexicon builtin();

  static std::set<std::string> default_stopwords();
  static std::string_view builtin_text();

  bool contains(std::string_view phrase) const { return lookup_.contains(std::string(phrase)); }
  const std::set<std::string>& phrases() const { return phrases_; }
  const std::set<std::string>& stopwords() const { return stopwords_; }
  bool empty() const { return phrases_.empty(); }
  std::size_t size() const { return phrases_.size(); }

 private:
  std::set<std::string> phrases_;
  std::unordered_set<std::string> lookup_;
  std::set<std::string> stopwords_;
};

// K_q: distinct lexicon phrases found in a text, in order of first occurrence.
struct QueryKeywords {
  std::vector<std::string> phrases;

  bool empty() const { return phrases.empty(); }
  std::size_t size() const { return phrases.size(); }
  bool contains(std::string_view p) const;
};

// All 1..3-gram phrases of the lowercased token stream of `text`, deduplicated.
std::vector<std::string> ngram_phrases(std::string_view text, std::size_t max_n = kMaxPhraseTokens);

// Every lexicon phrase present in `text` (membership, overlapping matches count).
QueryKeywords extract_keywords(std::string_view text, const KeywordLexicon& lexicon);

struct LexCandidate {
  std::uint32_t chunk_id = 0;
  double s_lex = 0.0;
  bool fallback = false;
  bool operator==(const LexCandidate&) const = default;
};

// Capped keyword -> chunk-id index. Immutable after build.
class LexicalIndex {
 public:
  static constexpr std::size_t kDefaultEntryCap = 5000;
  static constexpr std::uint16_t kFormatVersion = 1;

  LexicalIndex() = default;

  // One entry per lexicon phrase occurring in >= 1 chunk. If more than `entry_cap`
  // phrases occur, the `entry_cap` with highest document frequency are kept
  // (ties lexicographic). Throws ConfigError for entry_cap == 0.
  static LexicalIndex build(std::span<const Chunk> chunks, const KeywordLexicon& lexicon,
                            std::size_t entry_cap = kDefaultEntryCap);

  // |K_q ∩ W_c| / |K_q|, or 0 when K_q is empty. Throws LookupError for an
  // unknown chunk id.
  double lexical_score(const QueryKeywords& kq, std::uint32_t chunk_id) const;

  // Chunks with S_lex > 0, best first (ties by ascending id), truncated to
  // `candidate_cap`. An empty K_q yields the first `candidate_cap` chunk ids
  // flagged as fallback with S_lex = 0.
  std::vector<LexCandidate> prefilter(const QueryKeywords& kq, std::size_t candidate_cap = 50) const;

  const std::map<std::string, std::vector<std::uint32_t>>& entries() const { return entries_; }
  // W_c restricted to retained phrases, sorted.
  const std::vector<std::string>& keywords_of(std::uint32_t chunk_id) const;
  std::size_t chunk_count() const { return chunk_keywords_.size(); }
  std::size_t entry_cap() const { return entry_cap_; }
  std::size_t posting_count() const;

  // PRLX v1: magic, u16 version, u32 entry count, then per entry (phrase order)
  // u32 phrase length, phrase bytes, u32 posting count, u32 chunk ids; trailer
  // u32 chunk count, u32 entry cap. Little-endian.
  std::vector<std::uint8_t> serialize() const;
  static LexicalIndex deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static LexicalIndex load(const std::filesystem::path& path);
  std::size_t byte_size() const { return serialize().size(); }

 private:
  void rebuild_chunk_keywords(std::size_t chunk_count);

  std::map<std::string, std::vector<std::uint32_t>> entries_;
  std::vector<std::vector<std::string>> chunk_keywords_;
  std::size_t entry_cap_ = kDefaultEntryCap;
};

}  // namespace prag
