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

#include "prag/lexindex.hpp"

#include <algorithm>
#include <unordered_map>

#include "prag/binio.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace {

std::string normalize_phrase(std::string_view raw) { return join(tokenize(to_lower(raw)), " "); }

constexpr std::string_view kStopwords[] = {
    "a",     "about", "after", "again", "all",   "am",    "an",    "and",   "any",   "are",   "as",
    "at",    "be",    "been",  "before", "being", "both",  "but",   "by",    "can",   "could", "did",
    "do",    "does",  "doing", "down",  "during", "each", "few",   "for",   "from",  "had",   "has",
    "have",  "having", "he",   "her",   "here",  "hers",  "him",   "his",   "how",   "i",     "if",
    "in",    "into",  "is",    "it",    "its",   "just",  "may",   "me",    "might", "more",  "most",
    "must",  "my",    "no",    "nor",   "not",   "of",    "off",   "on",    "once",  "only",  "or",
    "other", "our",   "out",   "over",  "own",   "same",  "she",   "should", "so",   "some",  "such",
    "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",  "this",  "those",
    "through", "to",  "too",   "under", "until", "up",    "very",  "was",   "we",    "were",  "what",
    "when",  "where", "which", "while", "who",   "whom",  "why",   "will",  "with",  "would", "you",
    "your"};

}  // namespace

KeywordLexicon::KeywordLexicon(std::span<const std::string> phrases, std::set<std::string> stopwords)
    : stopwords_(std::move(stopwords)) {
  for (const auto& raw : phrases) {
    auto p = normalize_phrase(raw);
    if (p.empty()) continue;
    const auto toks = tokenize(p);
    if (toks.size() > kMaxPhraseTokens) throw FormatError("lexicon phrase '" + p + "' has more than 3 tokens");
    const bool all_stop =
        std::all_of(toks.begin(), toks.end(), [&](const std::string& t) { return stopwords_.contains(t); });
    if (all_stop) throw FormatError("lexicon phrase '" + p + "' consists only of stopwords");
    lookup_.insert(p);
    phrases_.insert(std::move(p));
  }
}

KeywordLexicon KeywordLexicon::parse(std::string_view text) {
  std::vector<std::string> phrases;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    phrases.emplace_back(line);
  }
  try {
    KeywordLexicon lex(phrases);
    if (lex.empty()) throw FormatError("lexicon contains no phrases");
    return lex;
  } catch (const FormatError& e) {
    throw FormatError(std::string("lexicon: ") + e.what());
  }
}

KeywordLexicon KeywordLexicon::load(const std::filesystem::path& path) {
  return parse(binio::read_text_file(path.string()));
}

KeywordLexicon KeywordLexicon::builtin() { return parse(builtin_text()); }

std::set<std::string> KeywordLexicon::default_stopwords() {
  return {std::begin(kStopwords), std::end(kStopwords)};
}

bool QueryKeywords::contains(std::string_view p) const {
  return std::find(phrases.begin(), phrases.end(), p) != phrases.end();
}

std::vector<std::string> ngram_phrases(std::string_view text, std::size_t max_n) {
  const auto toks = tokenize(to_lower(text));
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < max_n && i + n < toks.size(); ++n) {
      if (n) gram += ' ';
      gram += toks[i + n];
      if (seen.insert(gram).second) out.push_back(gram);
    }
  }
  return out;
}

QueryKeywords extract_keywords(std::string_view text, const KeywordLexicon& lexicon) {
  QueryKeywords kq;
  if (lexicon.empty()) return kq;
  const auto toks = tokenize(to_lower(text));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    // Longest match first at each position; shorter sub-phrases still count
    // when they are lexicon entries of their own.
    std::vector<std::string> grams;
    std::string gram;
    for (std::size_t n = 0; n < kMaxPhraseTokens && i + n < toks.size(); ++n) {
      if (n) gram += ' ';
      gram += toks[i + n];
      grams.push_back(gram);
    }
    for (auto it = grams.rbegin(); it != grams.rend(); ++it) {
      if (lexicon.contains(*it) && seen.insert(*it).second) kq.phrases.push_back(*it);
    }
  }
  return kq;
}

LexicalIndex LexicalIndex::build(std::span<const Chunk> chunks, const KeywordLexicon& lexicon,
                                 std::size_t entry_cap) {
  if (entry_cap == 0) throw ConfigError("index.entry_cap must be >= 1");
  std::map<std::string, std::vector<std::uint32_t>> postings;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].chunk_id != i) throw FormatError("chunk ids must be dense and ordered");
    for (auto& p : extract_keywords(chunks[i].text, lexicon).phrases) {
      postings[p].push_back(static_cast<std::uint32_t>(i));
    }
  }

  if (postings.size() > entry_cap) {
    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(postings.size());
    for (const auto& [p, ids] : postings) ranked.emplace_back(p, ids.size());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::map<std::string, std::vector<std::uint32_t>> kept;
    for (std::size_t i = 0; i < entry_cap; ++i) kept.emplace(ranked[i].first, std::move(postings[ranked[i].first]));
    postings = std::move(kept);
  }

  LexicalIndex idx;
  idx.entry_cap_ = entry_cap;
  idx.entries_ = std::move(postings);
  idx.rebuild_chunk_keywords(chunks.size());
  return idx;
}

void LexicalIndex::rebuild_chunk_keywords(std::size_t chunk_count) {
  chunk_keywords_.assign(chunk_count, {});
  // entries_ iterates in phrase order, so each list comes out sorted.
  for (const auto& [p, ids] : entries_) {
    for (auto id : ids) {
      if (id >= chunk_count) throw FormatError("posting references chunk " + std::to_string(id) + " beyond corpus");
      chunk_keywords_[id].push_back(p);
    }
  }
}

const std::vector<std::string>& LexicalIndex::keywords_of(std::uint32_t chunk_id) const {
  if (chunk_id >= chunk_keywords_.size()) throw LookupError("unknown chunk id " + std::to_string(chunk_id));
  return chunk_keywords_[chunk_id];
}

double LexicalIndex::lexical_score(const QueryKeywords& kq, std::uint32_t chunk_id) const {
  const auto& w = keywords_of(chunk_id);
  if (kq.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : kq.phrases) {
    if (std::binary_search(w.begin(), w.end(), p)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(kq.size());
}

std::vector<LexCandidate> LexicalIndex::prefilter(const QueryKeywords& kq, std::size_t candidate_cap) const {
  std::vector<LexCandidate> out;
  if (kq.empty()) {
    const auto n = std::min(candidate_cap, chunk_count());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<std::uint32_t>(i), 0.0, true});
    return out;
  }

  std::unordered_map<std::uint32_t, std::size_t> hits;
  for (const auto& p : kq.phrases) {
    const auto it = entries_.find(p);
    if (it == entries_.end()) continue;
    for (auto id : it->second) ++hits[id];
  }
  out.reserve(hits.size());
  for (const auto& [id, h] : hits) {
    out.push_back({id, static_cast<double>(h) / static_cast<double>(kq.size()), false});
  }
  std::sort(out.begin(), out.end(), [](const LexCandidate& a, const LexCandidate& b) {
    if (a.s_lex != b.s_lex) return a.s_lex > b.s_lex;
    return a.chunk_id < b.chunk_id;
  });
  if (out.size() > candidate_cap) out.resize(candidate_cap);
  return out;
}

std::size_t LexicalIndex::posting_count() const {
  std::size_t n = 0;
  for (const auto& [p, ids] : entries_) n += ids.size();
  return n;
}

std::vector<std::uint8_t> LexicalIndex::serialize() const {
  binio::Writer w;
  w.magic("PRLX");
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [p, ids] : entries_) {
    w.u32(static_cast<std::uint32_t>(p.size()));
    w.bytes(p.data(), p.size());
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (auto id : ids) w.u32(id);
  }
  w.u32(static_cast<std::uint32_t>(chunk_count()));
  w.u32(static_cast<std::uint32_t>(entry_cap_));
  return w.data();
}

LexicalIndex LexicalIndex::deserialize(const std::vector<std::uint8_t>& bytes) {
  binio::Reader r(bytes, "lexindex.bin");
  r.expect_magic("PRLX");
  if (const auto v = r.u16(); v != kFormatVersion) throw FormatError("lexindex.bin: unsupported version " + std::to_string(v));
  LexicalIndex idx;
  const auto n = r.u32();
  std::string prev;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto phrase = r.str(r.u32());
    if (i > 0 && phrase <= prev) throw FormatError("lexindex.bin: entries not in phrase order");
    const auto count = r.u32();
    std::vector<std::uint32_t> ids(count);
    for (auto& id : ids) id = r.u32();
    if (!std::is_sorted(ids.begin(), ids.end()) || std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw FormatError("lexindex.bin: posting list for '" + phrase + "' not strictly ascending");
    }
    prev = phrase;
    idx.entries_.emplace(std::move(phrase), std::move(ids));
  }
  const auto chunks = r.u32();
  idx.entry_cap_ = r.u32();
  if (!r.at_end()) throw FormatError("lexindex.bin: trailing bytes");
  if (idx.entry_cap_ == 0 || idx.entries_.size() > idx.entry_cap_) throw FormatError("lexindex.bin: entry cap violated");
  idx.rebuild_chunk_keywords(chunks);
  return idx;
}

void LexicalIndex::save(const std::filesystem::path& path) const { binio::write_file(path.string(), serialize()); }

LexicalIndex LexicalIndex::load(const std::filesystem::path& path) {
  return deserialize(binio::read_file(path.string()));
}

}  // namespace prag
