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

#include <gtest/gtest.h>

#include <random>

#include "prag/compress.hpp"
#include "prag/errors.hpp"

using namespace prag;

namespace {

std::vector<std::string> v(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

ContextChunk chunk(std::uint32_t id, std::string text) { return {id, std::move(text), 1.0}; }

// Six tokens: five words and the period. `tag` replaces the third word.
std::string sentence(int i, const std::string& tag = "") {
  return "Step" + std::to_string(i) + " is " + (tag.empty() ? "plain" : tag) + " text here.";
}

}  // namespace

TEST(SplitSentences, Examples) {
  EXPECT_EQ(split_sentences(chunk(0, "Check airway. Begin CPR.")).size(), 2u);
  EXPECT_EQ(split_sentences(chunk(0, "e.g. apply pressure")).size(), 1u);
  EXPECT_EQ(split_sentences(chunk(0, "Use a splint, e.g. A board. Then rest.")).size(), 2u);
  EXPECT_EQ(split_sentences(chunk(0, "Call Dr. Smith now. 2 minutes later")).size(), 2u);
  const auto one = split_sentences(chunk(4, "no terminator here"));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].text, "no terminator here");
  EXPECT_EQ(one[0].source_chunk_id, 4u);
  EXPECT_EQ(split_sentences(chunk(0, "lowercase. after dot")).size(), 1u);
  EXPECT_TRUE(split_sentences(chunk(0, "   ")).empty());
}

TEST(ScoreSentence, Weights) {
  KeywordLexicon lex(v({"burn", "blister", "shock", "cool water"}));
  const QueryKeywords kq{v({"burn", "shock"})};
  auto score = [&](const char* t) { return score_sentence(split_sentences(chunk(0, t))[0], kq, lex); };
  EXPECT_EQ(score("Treat the burn and any blister"), 3.0);
  EXPECT_EQ(score("Nothing relevant"), 0.0);
  EXPECT_EQ(score("A burn can cause shock"), 4.0);
  EXPECT_EQ(score("Run cool water over the blister"), 2.0);
}

TEST(Compress, SingleSentenceIntact) {
  KeywordLexicon lex(v({"burn"}));
  const std::vector<ContextChunk> in = {chunk(0, "Only one sentence")};
  const auto out = compress_context(in, {}, lex);
  EXPECT_EQ(out.regime, CompressionRegime::single);
  EXPECT_EQ(out.reduction, 0.0);
  EXPECT_EQ(out.kept_sentences.size(), 1u);
}

TEST(Compress, TenSentencesThreeScored) {
  KeywordLexicon lex(v({"bandage"}));
  std::string text;
  for (int i = 0; i < 10; ++i) text += sentence(i, i == 2 || i == 5 || i == 8 ? "bandage" : "") + " ";
  const std::vector<ContextChunk> in = {chunk(0, text)};
  const auto out = compress_context(in, {}, lex);

  // Independent greedy simulation: the first sentence is protected, the rest
  // are taken best-first (ties in document order) until reduction <= 0.40,
  // skipping any that would push it below 0.20.
  std::vector<int> order = {2, 5, 8, 1, 3, 4, 6, 7, 9};
  std::vector<bool> keep(10, false);
  keep[0] = true;
  const double len = static_cast<double>(tokenize(sentence(0)).size());
  const double total = 10 * len;
  double kept = len;
  for (int i : order) {
    if (1.0 - kept / total <= 0.40) break;
    if (1.0 - (kept + len) / total >= 0.20) {
      keep[i] = true;
      kept += len;
    }
  }
  std::vector<std::size_t> want;
  for (std::size_t i = 0; i < 10; ++i) {
    if (keep[i]) want.push_back(i);
  }
  std::vector<std::size_t> got;
  for (const auto& s : out.kept_sentences) got.push_back(s.position_in_chunk);
  EXPECT_EQ(got, want);
  EXPECT_NEAR(out.reduction, 1.0 - kept / total, 1e-12);
  EXPECT_GE(out.reduction, 0.20);
  EXPECT_LE(out.reduction, 0.40);
  EXPECT_EQ(out.regime, CompressionRegime::in_band);
  EXPECT_EQ(static_cast<double>(out.original_tokens), total);
}

TEST(Compress, QueryPhrasesNeverDropped) {
  KeywordLexicon lex(v({"shock"}));
  std::string text;
  for (int i = 0; i < 6; ++i) text += sentence(i, "shock") + " ";
  const std::vector<ContextChunk> in = {chunk(0, text)};
  const auto out = compress_context(in, QueryKeywords{v({"shock"})}, lex);
  EXPECT_EQ(out.kept_sentences.size(), 6u);
  EXPECT_EQ(out.reduction, 0.0);
  EXPECT_EQ(out.regime, CompressionRegime::constrained);
}

TEST(Compress, EmptyScoringFillsPrefixAfterFirstSentences) {
  KeywordLexicon lex(std::vector<std::string>{});
  std::string a, b;
  for (int i = 0; i < 5; ++i) a += sentence(i) + " ";
  for (int i = 5; i < 10; ++i) b += sentence(i) + " ";
  const std::vector<ContextChunk> in = {chunk(3, a), chunk(7, b)};
  const auto out = compress_context(in, {}, lex);
  // First sentences of both chunks, then fill in document order until the
  // reduction reaches 0.40.
  std::vector<std::pair<std::uint32_t, std::size_t>> got;
  for (const auto& s : out.kept_sentences) got.emplace_back(s.source_chunk_id, s.position_in_chunk);
  const std::vector<std::pair<std::uint32_t, std::size_t>> want = {{3, 0}, {3, 1}, {3, 2}, {3, 3}, {3, 4}, {7, 0}};
  EXPECT_EQ(got, want);
  EXPECT_NEAR(out.reduction, 0.4, 1e-12);
  EXPECT_EQ(out.text().find("\n\n"), out.text().find("Step5") - 2);
}

TEST(Compress, GranularityKeepsMoreNotLess) {
  KeywordLexicon lex(std::vector<std::string>{});
  // Dropping the long second sentence would overshoot max, so it stays and
  // the reduction falls to 0, below min.
  std::string long_sentence = "Then";
  for (int i = 0; i < 18; ++i) long_sentence += " word";
  const std::vector<ContextChunk> in = {chunk(0, "Short one. " + long_sentence + ".")};
  const auto out = compress_context(in, {}, lex);
  EXPECT_EQ(out.kept_sentences.size(), 2u);
  EXPECT_EQ(out.reduction, 0.0);
  EXPECT_EQ(out.regime, CompressionRegime::granularity);
}

TEST(Compress, RandomizedInvariants) {
  std::mt19937_64 rng(37);
  const std::vector<std::string> terms = {"burn", "shock", "airway", "fracture", "fever", "grief"};
  KeywordLexicon lex(terms);
  for (int round = 0; round < 300; ++round) {
    std::vector<ContextChunk> in;
    for (std::uint32_t c = 0; c < 3; ++c) {
      std::string t;
      const int n = 1 + static_cast<int>(rng() % 8);
      for (int i = 0; i < n; ++i) {
        t += "Line" + std::to_string(i);
        const int len = 2 + static_cast<int>(rng() % 12);
        for (int k = 0; k < len; ++k) t += rng() % 6 == 0 ? " " + terms[rng() % terms.size()] : " word";
        t += ". ";
      }
      in.push_back(chunk(c * 10, t));
    }
    const QueryKeywords kq{rng() % 2 ? v({"burn"}) : v({"shock", "fever"})};
    const auto out = compress_context(in, kq, lex);
    EXPECT_LE(out.reduction, 0.40 + 1e-12);
    std::size_t kept = 0;
    for (const auto& s : out.kept_sentences) kept += s.tokens.size();
    EXPECT_EQ(kept, out.kept_tokens);
    // Never-drop and first-sentence guarantees, and document order.
    std::vector<Sentence> all;
    for (const auto& c : in) {
      for (auto& s : split_sentences(c)) all.push_back(s);
    }
    std::size_t cursor = 0;
    for (const auto& s : out.kept_sentences) {
      while (cursor < all.size() && !(all[cursor].source_chunk_id == s.source_chunk_id &&
                                      all[cursor].position_in_chunk == s.position_in_chunk)) {
        ++cursor;
      }
      ASSERT_LT(cursor, all.size()) << "kept sentences out of order";
      ++cursor;
    }
    for (const auto& s : all) {
      bool has_q = false;
      for (const auto& p : kq.phrases) has_q |= (" " + s.text + " ").find(" " + p + " ") != std::string::npos;
      if (!has_q && s.position_in_chunk != 0) continue;
      const bool present = std::any_of(out.kept_sentences.begin(), out.kept_sentences.end(), [&](const Sentence& k) {
        return k.source_chunk_id == s.source_chunk_id && k.position_in_chunk == s.position_in_chunk;
      });
      EXPECT_TRUE(present);
    }
  }
}

TEST(Compress, IdempotentOnceMinimal) {
  KeywordLexicon lex(v({"shock"}));
  const std::vector<ContextChunk> in = {chunk(0, sentence(0, "shock") + " " + sentence(1, "shock"))};
  const auto once = compress_context(in, QueryKeywords{v({"shock"})}, lex);
  const std::vector<ContextChunk> again = {chunk(0, once.text())};
  const auto twice = compress_context(again, QueryKeywords{v({"shock"})}, lex);
  EXPECT_EQ(twice.text(), once.text());
  EXPECT_EQ(twice.reduction, 0.0);
}

TEST(Compress, PassthroughAndConfig) {
  const std::vector<ContextChunk> in = {chunk(0, "One. Two. Three.")};
  const auto p = passthrough_context(in);
  EXPECT_EQ(p.reduction, 0.0);
  EXPECT_EQ(p.regime, CompressionRegime::disabled);
  EXPECT_EQ(p.kept_sentences.size(), 3u);
  CompressionConfig bad;
  bad.target_reduction_min = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}
