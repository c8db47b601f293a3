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
#include <string>
#include <string_view>
#include <vector>

namespace prag {

// Byte range [begin, end) of one token inside the tokenized text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// Pluggable tokenizer. Token counts everywhere in the engine (chunk windows,
// compression ratios, prefill lengths) are relative to the active tokenizer.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;

  std::vector<std::string> tokenize(std::string_view text) const;
};

// Splits on whitespace, then peels leading and trailing ASCII punctuation off
// each word, one token per punctuation character. Case is preserved.
class WhitespacePunctTokenizer final : public Tokenizer {
 public:
  std::vector<TokenSpan> spans(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

std::vector<std::string> tokenize(std::string_view text);

bool is_ascii_punct(char c);
bool is_space(char c);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
// Trims and collapses internal whitespace runs to a single space.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);

bool is_valid_utf8(std::string_view s);

// 64-bit FNV-1a. Used wherever a hash must be stable across platforms.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace prag
