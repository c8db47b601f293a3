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

#include "prag/compress.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <unordered_set>

#include "prag/errors.hpp"

namespace prag {

void CompressionConfig::validate() const {
  if (!(target_reduction_min >= 0.0 && target_reduction_min <= target_reduction_max && target_reduction_max < 1.0)) {
    throw ConfigError("compression targets must satisfy 0 <= min <= max < 1");
  }
}

std::string_view to_string(CompressionRegime r) {
  switch (r) {
    case CompressionRegime::in_band:
      return "in_band";
    case CompressionRegime::constrained:
      return "constrained";
    case CompressionRegime::granularity:
      return "granularity";
    case CompressionRegime::single:
      return "single";
    case CompressionRegime::disabled:
      return "disabled";
  }
  return "in_band";
}

std::string CompressedContext::text() const {
  std::string out;
  bool first_chunk = true;
  std::uint32_t cur = 0;
  for (const auto& s : kept_sentences) {
    if (first_chunk || s.source_chunk_id != cur) {
      if (!first_chunk) out += "\n\n";
      first_chunk = false;
      cur = s.source_chunk_id;
    } else {
      out += ' ';
    }
    out += s.text;
  }
  return out;
}

double CompressedContext::chunk_weight(std::uint32_t chunk_id) const {
  for (const auto& c : chunks) {
    if (c.chunk_id == chunk_id) return c.weight;
  }
  return 0.0;
}

namespace {

constexpr std::array<std::string_view, 4> kAbbreviations = {"e.g.", "i.e.", "dr.", "vs."};

bool is_upper_or_digit(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

bool ends_with_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  const auto word = to_lower(text.substr(b, dot + 1 - b));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

void push_sentence(std::vector<Sentence>& out, std::string_view piece, std::uint32_t chunk_id) {
  piece = trim(piece);
  auto toks = tokenize(piece);
  if (toks.empty()) return;
  Sentence s;
  s.text = std::string(piece);
  s.tokens = std::move(toks);
  s.source_chunk_id = chunk_id;
  s.position_in_chunk = out.size();
  out.push_back(std::move(s));
}

}  // namespace

std::vector<Sentence> split_sentences(const ContextChunk& chunk) {
  std::vector<Sentence> out;
  const std::string_view text = chunk.text;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 >= text.size() || !is_space(text[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size() || !is_upper_or_digit(text[j])) continue;
    if (c == '.' && ends_with_abbreviation(text, i)) continue;
    push_sentence(out, text.substr(start, i + 1 - start), chunk.chunk_id);
    start = j;
    i = j - 1;
  }
  if (start < text.size()) push_sentence(out, text.substr(start), chunk.chunk_id);
  return out;
}

double score_sentence(const Sentence& s, const QueryKeywords& kq, const KeywordLexicon& lexicon) {
  const auto grams = ngram_phrases(join(s.tokens, " "));
  const std::unordered_set<std::string> present(grams.begin(), grams.end());
  std::size_t query_hits = 0;
  for (const auto& p : kq.phrases) {
    if (present.contains(p)) ++query_hits;
  }
  std::size_t other_hits = 0;
  for (const auto& g : grams) {
    if (lexicon.contains(g) && !kq.contains(g)) ++other_hits;
  }
  return 2.0 * static_cast<double>(query_hits) + 1.0 * static_cast<double>(other_hits);
}

namespace {

std::vector<Sentence> collect(std::span<const ContextChunk> chunks, std::vector<ContextChunk>& sources) {
  std::vector<Sentence> all;
  for (const auto& c : chunks) {
    sources.push_back(c);
    for (auto& s : split_sentences(c)) all.push_back(std::move(s));
  }
  return all;
}

std::size_t token_sum(const std::vector<Sentence>& ss) {
  return std::accumulate(ss.begin(), ss.end(), std::size_t{0},
                         [](std::size_t acc, const Sentence& s) { return acc + s.tokens.size(); });
}

}  // namespace

CompressedContext passthrough_context(std::span<const ContextChunk> chunks) {
  CompressedContext out;
  out.kept_sentences = collect(chunks, out.chunks);
  out.original_tokens = token_sum(out.kept_sentences);
  out.kept_tokens = out.original_tokens;
  out.reduction = 0.0;
  out.regime = CompressionRegime::disabled;
  return out;
}

CompressedContext compress_context(std::span<const ContextChunk> chunks, const QueryKeywords& kq,
                                   const KeywordLexicon& lexicon, const CompressionConfig& cfg) {
  cfg.validate();
  CompressedContext out;
  auto all = collect(chunks, out.chunks);
  const std::size_t total = token_sum(all);
  out.original_tokens = total;

  for (auto& s : all) {
    s.score = score_sentence(s, kq, lexicon);
    const auto grams = ngram_phrases(join(s.tokens, " "));
    s.has_query_phrase = std::any_of(grams.begin(), grams.end(), [&](const std::string& g) { return kq.contains(g); });
  }

  if (all.size() <= 1) {
    out.kept_sentences = std::move(all);
    out.kept_tokens = total;
    out.regime = CompressionRegime::single;
    return out;
  }

  auto reduction_at = [total](std::size_t kept) {
    return static_cast<double>(total - kept) / static_cast<double>(total);
  };

  std::vector<bool> keep(all.size(), false);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].has_query_phrase || (cfg.always_keep_first && all[i].position_in_chunk == 0)) {
      keep[i] = true;
      kept += all[i].tokens.size();
    }
  }
  const bool constrained = reduction_at(kept) < cfg.target_reduction_min;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!keep[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return all[a].score > all[b].score; });

  // Pass 1: best-first, only sentences that keep us at or above min reduction.
  for (auto i : order) {
    if (reduction_at(kept) <= cfg.target_reduction_max) break;
    if (reduction_at(kept + all[i].tokens.size()) >= cfg.target_reduction_min) {
      keep[i] = true;
      kept += all[i].tokens.size();
    }
  }
  // Pass 2: the band was unreachable; cross min with the smallest overshoot.
  while (reduction_at(kept) > cfg.target_reduction_max) {
    std::size_t best = all.size();
    std::size_t first_open = all.size();
    for (auto i : order) {
      if (keep[i]) continue;
      if (first_open == all.size()) first_open = i;
      if (reduction_at(kept + all[i].tokens.size()) <= cfg.target_reduction_max &&
          (best == all.size() || all[i].tokens.size() < all[best].tokens.size())) {
        best = i;
      }
    }
    const auto pick = best != all.size() ? best : first_open;
    keep[pick] = true;
    kept += all[pick].tokens.size();
  }

  for (std::size_t i = 0; i < all.size(); ++i) {
    if (keep[i]) out.kept_sentences.push_back(std::move(all[i]));
  }
  out.kept_tokens = kept;
  out.reduction = reduction_at(kept);
  if (constrained) {
    out.regime = CompressionRegime::constrained;
  } else if (out.reduction >= cfg.target_reduction_min && out.reduction <= cfg.target_reduction_max) {
    out.regime = CompressionRegime::in_band;
  } else {
    out.regime = CompressionRegime::granularity;
  }
  return out;
}

}  // namespace prag
