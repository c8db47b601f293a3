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

#include "prag/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "prag/errors.hpp"

namespace prag {

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::physical:
      return "physical";
    case DomainTag::psychological:
      return "psychological";
    case DomainTag::general:
      return "general";
  }
  return "general";
}

DomainTag parse_domain_tag(std::string_view s) {
  if (s == "physical") return DomainTag::physical;
  if (s == "psychological") return DomainTag::psychological;
  if (s == "general") return DomainTag::general;
  throw ConfigError("unknown domain_tag '" + std::string(s) + "'");
}

void ChunkConfig::validate() const {
  if (window_size == 0) throw ConfigError("chunking.window_size must be >= 1");
  if (overlap >= window_size) throw ConfigError("chunking.overlap must be < window_size");
}

std::vector<std::string> split_pages(std::string_view body) {
  std::vector<std::string> pages;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == '\f') {
      pages.emplace_back(body.substr(start, i - start));
      start = i + 1;
    }
  }
  return pages;
}

namespace {

using Paragraph = std::vector<std::string>;

std::vector<Paragraph> paragraphs_of(const std::vector<std::string>& lines) {
  std::vector<Paragraph> out;
  Paragraph cur;
  for (const auto& l : lines) {
    if (l.empty()) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(l);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::vector<std::string> normalize_text(const RawDocument& /*raw*/, std::span<const std::string> pages,
                                        const NormalizeConfig& cfg) {
  std::vector<std::vector<std::string>> page_lines;
  page_lines.reserve(pages.size());
  for (const auto& p : pages) {
    std::vector<std::string> lines;
    for (auto l : split_lines(p)) lines.push_back(collapse_whitespace(l));
    page_lines.push_back(std::move(lines));
  }

  std::unordered_set<std::string> boilerplate;
  if (pages.size() >= cfg.min_pages_for_boilerplate) {
    std::map<std::string, std::size_t> page_freq;
    for (const auto& lines : page_lines) {
      std::set<std::string> distinct;
      for (const auto& l : lines) {
        if (!l.empty()) distinct.insert(l);
      }
      for (const auto& l : distinct) ++page_freq[l];
    }
    const double limit = cfg.boilerplate_page_fraction * static_cast<double>(pages.size());
    for (const auto& [line, freq] : page_freq) {
      if (static_cast<double>(freq) > limit) boilerplate.insert(line);
    }
  }

  std::unordered_set<std::string> seen_paragraphs;
  std::vector<std::string> out;
  out.reserve(pages.size());
  bool any_content = false;
  for (auto& lines : page_lines) {
    std::vector<std::string> kept_lines;
    for (auto& l : lines) {
      if (l.empty() || !boilerplate.contains(l)) kept_lines.push_back(std::move(l));
    }
    std::string page;
    for (const auto& para : paragraphs_of(kept_lines)) {
      const std::string key = to_lower(collapse_whitespace(join(para, " ")));
      if (!seen_paragraphs.insert(key).second) continue;
      if (!page.empty()) page += "\n\n";
      page += join(para, "\n");
    }
    any_content = any_content || !page.empty();
    out.push_back(std::move(page));
  }
  if (!any_content) return {};
  return out;
}

bool is_heading(std::string_view line) {
  line = trim(line);
  if (line.empty()) return false;

  // ^\d+(\.\d+)*\s+\S
  std::size_t i = 0;
  auto digits = [&] {
    const std::size_t s = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    return i > s;
  };
  if (digits()) {
    bool ok = true;
    while (i < line.size() && line[i] == '.') {
      ++i;
      if (!digits()) {
        ok = false;
        break;
      }
    }
    if (ok && i < line.size() && is_space(line[i])) {
      while (i < line.size() && is_space(line[i])) ++i;
      if (i < line.size()) return true;
    }
  }

  const auto toks = tokenize(line);
  if (toks.size() > 8) return false;
  std::size_t words = 0;
  std::size_t capitalized = 0;
  for (const auto& t : toks) {
    const char c = t.front();
    const bool upper = c >= 'A' && c <= 'Z';
    const bool lower = c >= 'a' && c <= 'z';
    if (!upper && !lower) continue;
    ++words;
    if (upper) ++capitalized;
  }
  return words > 0 && static_cast<double>(capitalized) >= 0.6 * static_cast<double>(words);
}

std::vector<TokenRange> window_ranges(std::size_t n_tokens, const ChunkConfig& cfg) {
  cfg.validate();
  std::vector<TokenRange> out;
  if (n_tokens == 0) return out;
  const std::size_t w = cfg.window_size;
  for (std::size_t start = 0;; start += cfg.stride()) {
    if (start + w >= n_tokens) {
      out.push_back({n_tokens > w ? n_tokens - w : 0, n_tokens});
      break;
    }
    out.push_back({start, start + w});
  }
  return out;
}

std::vector<Chunk> chunk_document(std::span<const std::string> cleaned_pages, const ChunkConfig& cfg,
                                  const ChunkMetadata& meta, std::uint32_t first_chunk_id,
                                  const Tokenizer& tokenizer) {
  cfg.validate();
  std::string doc;
  std::vector<std::size_t> page_starts;
  for (const auto& p : cleaned_pages) {
    if (!doc.empty()) doc += '\n';
    page_starts.push_back(doc.size());
    doc += p;
  }

  struct Heading {
    std::size_t offset;
    std::string title;
  };
  std::vector<Heading> headings;
  {
    std::size_t off = 0;
    for (auto line : split_lines(doc)) {
      if (is_heading(line)) headings.push_back({off, collapse_whitespace(line)});
      off += line.size() + 1;
    }
  }

  const auto spans = tokenizer.spans(doc);
  std::vector<Chunk> chunks;
  std::uint32_t next_id = first_chunk_id;
  for (const auto& r : window_ranges(spans.size(), cfg)) {
    Chunk c;
    c.chunk_id = next_id++;
    const std::size_t byte_begin = spans[r.begin].begin;
    const std::size_t byte_end = spans[r.end - 1].end;
    c.text = doc.substr(byte_begin, byte_end - byte_begin);
    c.tokens.reserve(r.end - r.begin);
    for (std::size_t t = r.begin; t < r.end; ++t) c.tokens.emplace_back(doc.substr(spans[t].begin, spans[t].size()));
    c.token_count = c.tokens.size();
    c.domain_tag = meta.domain_tag;

    auto page_it = std::upper_bound(page_starts.begin(), page_starts.end(), byte_begin);
    c.page_id = static_cast<std::uint32_t>(std::distance(page_starts.begin(), page_it));

    auto h_it = std::upper_bound(headings.begin(), headings.end(), byte_begin,
                                 [](std::size_t off, const Heading& h) { return off < h.offset; });
    if (h_it != headings.begin()) c.section_title = std::prev(h_it)->title;
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<Chunk> build_corpus(std::span<const RawDocument> docs, const ChunkConfig& cfg,
                                const NormalizeConfig& norm, const Tokenizer& tokenizer) {
  std::vector<Chunk> all;
  for (const auto& d : docs) {
    const auto pages = split_pages(d.body);
    const auto cleaned = normalize_text(d, pages, norm);
    auto chunks = chunk_document(cleaned, cfg, {d.domain_tag}, static_cast<std::uint32_t>(all.size()), tokenizer);
    for (auto& c : chunks) all.push_back(std::move(c));
  }
  return all;
}

}  // namespace prag
