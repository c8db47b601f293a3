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

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "prag/binio.hpp"
#include "prag/corpus.hpp"
#include "prag/corpus_io.hpp"
#include "prag/errors.hpp"

using namespace prag;
namespace fs = std::filesystem;

TEST(Tokenizer, SplitsPunctuation) {
  EXPECT_EQ(tokenize("Check airway."), (std::vector<std::string>{"Check", "airway", "."}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("cardiac arrest"), (std::vector<std::string>{"cardiac", "arrest"}));
  EXPECT_EQ(tokenize("(ABC)!"), (std::vector<std::string>{"(", "ABC", ")", "!"}));
  EXPECT_EQ(tokenize("  a \t b\n"), (std::vector<std::string>{"a", "b"}));
}

TEST(Tokenizer, SpansPointIntoSource) {
  const std::string text = "Press firmly, then wait.";
  for (const auto& s : default_tokenizer().spans(text)) {
    EXPECT_LE(s.end, text.size());
    EXPECT_LT(s.begin, s.end);
  }
  const auto spans = default_tokenizer().spans(text);
  ASSERT_EQ(spans.size(), 6u);
  EXPECT_EQ(text.substr(spans[2].begin, spans[2].size()), ",");
}

TEST(Text, Utf8Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("caf\xc3\xa9"));
  EXPECT_FALSE(is_valid_utf8("\xc3"));
  EXPECT_FALSE(is_valid_utf8("\xff\xfe"));
}

TEST(Text, CollapseAndTrim) {
  EXPECT_EQ(collapse_whitespace("  a   b \t c  "), "a b c");
  EXPECT_EQ(trim("\n x \t"), "x");
  EXPECT_EQ(to_lower("CPR Now"), "cpr now");
}

TEST(Normalize, RepeatedHeaderRemoved) {
  std::vector<std::string> pages;
  for (int i = 0; i < 10; ++i) pages.push_back("WHO BEC Manual\nPage body number " + std::to_string(i) + ".");
  RawDocument raw;
  const auto out = normalize_text(raw, pages);
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].find("WHO BEC Manual"), std::string::npos);
    EXPECT_NE(out[i].find("Page body number " + std::to_string(i)), std::string::npos);
  }
}

TEST(Normalize, DuplicateParagraphRemoved) {
  std::vector<std::string> pages = {"Apply pressure to the wound.\n\nKeep the patient warm.\n\nApply pressure to the wound."};
  const auto out = normalize_text({}, pages);
  ASSERT_EQ(out.size(), 1u);
  const auto first = out[0].find("Apply pressure");
  EXPECT_NE(first, std::string::npos);
  EXPECT_EQ(out[0].find("Apply pressure", first + 1), std::string::npos);
  EXPECT_NE(out[0].find("Keep the patient warm."), std::string::npos);
}

TEST(Normalize, UniqueContentUnchangedModuloWhitespace) {
  std::vector<std::string> pages = {"Alpha  line one.\nBeta line two.", "Gamma   page two.", "Delta page three."};
  const auto out = normalize_text({}, pages);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < pages.size(); ++i) EXPECT_EQ(collapse_whitespace(out[i]), collapse_whitespace(pages[i]));
}

TEST(Normalize, EmptyDocument) {
  std::vector<std::string> pages = {"   \n  "};
  EXPECT_TRUE(normalize_text({}, pages).empty());
}

TEST(Headings, Detection) {
  EXPECT_TRUE(is_heading("3.2 Airway management"));
  EXPECT_TRUE(is_heading("Psychological First Aid"));
  EXPECT_FALSE(is_heading("Check the airway and begin compressions if the person is not breathing."));
  EXPECT_FALSE(is_heading(""));
}

TEST(Windows, SpecExampleAndOracle) {
  ChunkConfig cfg;
  const auto r = window_ranges(700, cfg);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], (TokenRange{0, 300}));
  EXPECT_EQ(r[1], (TokenRange{250, 550}));
  EXPECT_EQ(r[2], (TokenRange{400, 700}));  // final window right-aligned
  EXPECT_EQ(window_ranges(300, cfg), (std::vector<TokenRange>{{0, 300}}));
  EXPECT_TRUE(window_ranges(0, cfg).empty());
  EXPECT_EQ(window_ranges(17, cfg), (std::vector<TokenRange>{{0, 17}}));
}

TEST(Windows, MatchesBruteForceEnumeration) {
  for (std::size_t w : {1u, 2u, 7u, 50u, 300u}) {
    for (std::size_t ov = 0; ov < w; ov += std::max<std::size_t>(1, w / 3)) {
      ChunkConfig cfg{w, ov};
      for (std::size_t n = 0; n < 3 * w + 20; ++n) {
        const auto got = window_ranges(n, cfg);
        const auto want = oracle::windows(n, w, ov);
        ASSERT_EQ(got.size(), want.size()) << "n=" << n << " w=" << w << " ov=" << ov;
        std::size_t covered = 0;
        for (std::size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(got[i].begin, want[i].first);
          EXPECT_EQ(got[i].end, want[i].second);
          EXPECT_LE(got[i].begin, covered);  // no gaps
          covered = std::max(covered, got[i].end);
        }
        EXPECT_EQ(covered, n);
      }
    }
  }
}

TEST(ChunkConfig, Validation) {
  EXPECT_THROW((ChunkConfig{0, 0}.validate()), ConfigError);
  EXPECT_THROW((ChunkConfig{10, 10}.validate()), ConfigError);
  EXPECT_NO_THROW((ChunkConfig{10, 9}.validate()));
}

namespace {

std::string numbered_words(std::size_t n, const char* stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += std::string(stem) + std::to_string(i) + (i + 1 == n ? "" : " ");
  return s;
}

}  // namespace

TEST(ChunkDocument, VerbatimTextAndMetadata) {
  const std::vector<std::string> pages = {"1 Airway\n" + numbered_words(400, "a"), numbered_words(300, "b")};
  ChunkMetadata meta{DomainTag::physical};
  const auto chunks = chunk_document(pages, ChunkConfig{}, meta, 10);
  const std::size_t total = 2 + 400 + 300;
  EXPECT_EQ(chunks.size(), oracle::windows(total, 300, 50).size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    EXPECT_EQ(c.chunk_id, 10 + i);
    EXPECT_EQ(c.token_count, c.tokens.size());
    EXPECT_EQ(tokenize(c.text), c.tokens);
    EXPECT_EQ(c.domain_tag, DomainTag::physical);
    EXPECT_EQ(c.section_title, "1 Airway");
  }
  EXPECT_EQ(chunks.front().page_id, 1u);
  EXPECT_EQ(chunks.back().page_id, 2u);
  EXPECT_EQ(chunks.front().tokens.front(), "1");
}

TEST(ChunkDocument, SectionTitleTracksLastHeading) {
  const std::vector<std::string> pages = {"1 First\n" + numbered_words(280) + "\n2 Second\n" + numbered_words(400, "x")};
  const auto chunks = chunk_document(pages, ChunkConfig{}, {}, 0);
  // Windows start at 0, 250 and 384; the second heading sits at token 282.
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].section_title, "1 First");
  EXPECT_EQ(chunks[1].section_title, "1 First");
  EXPECT_EQ(chunks[2].section_title, "2 Second");
}

TEST(BuildCorpus, DenseIdsAcrossDocuments) {
  RawDocument a{"a.txt", numbered_words(500), "a.txt", DomainTag::physical};
  RawDocument b{"b.txt", numbered_words(100), "b.txt", DomainTag::psychological};
  const std::vector<RawDocument> docs = {a, b};
  const auto chunks = build_corpus(docs, ChunkConfig{});
  ASSERT_EQ(chunks.size(), 3u);
  for (std::uint32_t i = 0; i < chunks.size(); ++i) EXPECT_EQ(chunks[i].chunk_id, i);
  EXPECT_EQ(chunks[2].domain_tag, DomainTag::psychological);
}

TEST(CorpusIo, LoadDirAndJsonlRoundTrip) {
  const auto dir = fs::temp_directory_path() / "prag_corpus_io_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  binio::write_text_file((dir / "b.txt").string(), "Second file about bleeding control.");
  binio::write_text_file((dir / "a.md").string(), "First file about airway.\fSecond page.");
  binio::write_text_file((dir / "skip.pdf").string(), "ignored");
  binio::write_text_file((dir / "bad.txt").string(), "\xff\xfe");
  binio::write_text_file((dir / "manifest.json").string(), R"({"b.txt": {"domain_tag": "psychological"}})");

  const auto load = load_corpus_dir(dir);
  ASSERT_EQ(load.documents.size(), 2u);
  ASSERT_EQ(load.errors.size(), 1u);
  EXPECT_NE(load.errors[0].find("bad.txt"), std::string::npos);
  EXPECT_EQ(load.documents[0].doc_id, "a.md");
  EXPECT_EQ(load.documents[1].domain_tag, DomainTag::psychological);

  const auto chunks = build_corpus(load.documents, ChunkConfig{});
  const auto jsonl = chunks_to_jsonl(chunks);
  EXPECT_EQ(jsonl.substr(0, 14), R"({"chunk_id":0,)");
  const auto back = chunks_from_jsonl(jsonl);
  ASSERT_EQ(back.size(), chunks.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].text, chunks[i].text);
    EXPECT_EQ(back[i].tokens, chunks[i].tokens);
    EXPECT_EQ(back[i].page_id, chunks[i].page_id);
    EXPECT_EQ(back[i].domain_tag, chunks[i].domain_tag);
  }
  EXPECT_EQ(chunks_to_jsonl(back), jsonl);
  fs::remove_all(dir);
}

TEST(CorpusIo, RejectsNonDenseIds) {
  EXPECT_THROW(chunks_from_jsonl(R"({"chunk_id":1,"text":"x","section_title":"","page_id":1,"domain_tag":"general","token_count":1})"),
               FormatError);
  EXPECT_THROW(chunks_from_jsonl("not json"), FormatError);
}
