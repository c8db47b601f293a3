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

#include "prag/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "prag/binio.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace {

constexpr std::array<const char*, 28> kOnsets = {"b",  "d",  "f",  "g",  "h",  "j",  "k",  "l",  "m",  "n",
                                                 "p",  "r",  "s",  "t",  "v",  "w",  "z",  "br", "dr", "gl",
                                                 "kr", "pl", "st", "tr", "sk", "th", "sh", "qu"};
constexpr std::array<const char*, 9> kVowels = {"a", "e", "i", "o", "u", "y", "ai", "ou", "ea"};
constexpr std::array<const char*, 6> kCodas = {"n", "r", "s", "l", "k", "m"};
constexpr std::size_t kSignatureWords = 7;
constexpr std::size_t kSectionWordsPerSentence = 3;
constexpr std::string_view kBoilerplate = "Synthetic Field Manual - Restricted Draft";

// Portable draws: the standard fixes mt19937_64's output sequence but not the
// algorithms behind its distributions or std::shuffle.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 rng_;
};

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

class WordMint {
 public:
  WordMint(Draw& draw, const KeywordLexicon& lex) : draw_(draw), lex_(lex) {}
  std::string fresh() {
    for (;;) {
      std::string w;
      const std::size_t n = 2 + draw_.below(3);
      for (std::size_t i = 0; i < n; ++i) {
        w += kOnsets[draw_.below(kOnsets.size())];
        w += kVowels[draw_.below(kVowels.size())];
        if (draw_.chance(0.3)) w += kCodas[draw_.below(kCodas.size())];
      }
      if (lex_.contains(w) || lex_.stopwords().contains(w)) continue;
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Draw& draw_;
  const KeywordLexicon& lex_;
  std::unordered_set<std::string> used_;
};

struct Fact {
  std::size_t topic = 0;
  std::vector<std::string> sig;  // pseudo-words unique to this fact and its section
  std::string text;
  std::string section;  // body of the section holding the fact
  std::size_t doc = 0;
};

struct Topic {
  std::string a, b;
  std::vector<std::size_t> facts;
};

}  // namespace

SyntheticDataset make_synthetic(const SyntheticOptions& opts, const KeywordLexicon& lexicon) {
  opts.chunking.validate();
  if (opts.facts_per_topic < 2 || opts.facts_per_document == 0) {
    throw ValueError("synthetic corpus needs facts_per_topic >= 2 and facts_per_document >= 1");
  }
  Draw draw(opts.seed);
  WordMint mint(draw, lexicon);

  std::vector<std::string> singles;
  for (const auto& p : lexicon.phrases()) {
    if (p.find(' ') == std::string::npos && !lexicon.stopwords().contains(p)) singles.push_back(p);
  }
  if (singles.size() < 8) throw ValueError("lexicon has fewer than 8 single-word phrases");
  draw.shuffle(singles);
  const std::vector<std::string> topic_words(singles.begin(), singles.begin() + singles.size() / 2);
  const std::vector<std::string> filler_keywords(singles.begin() + singles.size() / 2, singles.end());

  std::vector<std::string> vocab;
  for (int i = 0; i < 1500; ++i) vocab.push_back(mint.fresh());
  // Filler reuses the section's own vocabulary, as prose about one subject does.
  auto filler_sentence = [&](const std::vector<std::string>& section_words) {
    const std::size_t n = 8 + draw.below(7);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[draw.below(vocab.size())]);
    for (std::size_t k = 0; k < kSectionWordsPerSentence; ++k) {
      words[draw.below(n)] = section_words[draw.below(section_words.size())];
    }
    if (draw.chance(0.35)) words[1 + draw.below(n - 1)] = filler_keywords[draw.below(filler_keywords.size())];
    words[0] = capitalize(words[0]);
    return join(words, " ") + ".";
  };

  // Topics: distinct keyword pairs. Oversupply facts since some straddle chunks.
  const std::size_t wanted_facts = 3 * opts.n_questions + opts.facts_per_topic;
  const std::size_t n_topics = (wanted_facts + opts.facts_per_topic - 1) / opts.facts_per_topic;
  const std::size_t max_pairs = topic_words.size() * (topic_words.size() - 1) / 2;
  if (n_topics > max_pairs) throw ValueError("lexicon too small for " + std::to_string(opts.n_questions) + " questions");
  std::vector<Topic> topics;
  std::set<std::pair<std::string, std::string>> pairs;
  while (topics.size() < n_topics) {
    auto a = topic_words[draw.below(topic_words.size())];
    auto b = topic_words[draw.below(topic_words.size())];
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    if (!pairs.emplace(a, b).second) continue;
    topics.push_back({a, b, {}});
  }

  std::vector<Fact> facts;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    for (std::size_t k = 0; k < opts.facts_per_topic; ++k) {
      Fact f;
      f.topic = t;
      for (std::size_t i = 0; i < kSignatureWords; ++i) f.sig.push_back(mint.fresh());
      f.text = capitalize(f.sig[0]) + " " + f.sig[1] + " " + topics[t].a + " " + f.sig[2] + " " + f.sig[3] + " " +
               f.sig[4] + " " + topics[t].b + " " + f.sig[5] + " " + f.sig[6] + ".";
      topics[t].facts.push_back(facts.size());
      facts.push_back(std::move(f));
    }
  }

  // Place facts so that no document holds two facts of one topic.
  std::vector<std::size_t> order(facts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  draw.shuffle(order);
  std::vector<std::vector<std::size_t>> doc_facts;
  std::vector<std::set<std::size_t>> doc_topics;
  for (auto fi : order) {
    std::size_t d = 0;
    while (d < doc_facts.size() &&
           (doc_facts[d].size() >= opts.facts_per_document || doc_topics[d].contains(facts[fi].topic))) {
      ++d;
    }
    if (d == doc_facts.size()) {
      doc_facts.emplace_back();
      doc_topics.emplace_back();
    }
    doc_facts[d].push_back(fi);
    doc_topics[d].insert(facts[fi].topic);
    facts[fi].doc = d;
  }

  SyntheticDataset out;
  for (std::size_t d = 0; d < doc_facts.size(); ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "doc_%04zu.txt", d + 1);
    RawDocument doc;
    doc.doc_id = name;
    doc.source_name = name;
    doc.domain_tag = d % 2 == 0 ? DomainTag::physical : DomainTag::psychological;
    std::string body;
    for (std::size_t j = 0; j < doc_facts[d].size(); ++j) {
      if (j % 2 == 0) {
        if (j > 0) body += '\f';
        body += std::string(kBoilerplate) + "\n";
      }
      body += std::to_string(d + 1) + "." + std::to_string(j + 1) + " " + capitalize(vocab[draw.below(vocab.size())]) +
              " " + capitalize(vocab[draw.below(vocab.size())]) + "\n";
      const std::size_t at = draw.below(opts.filler_per_fact + 1);
      std::vector<std::string> sentences;
      auto& fact = facts[doc_facts[d][j]];
      for (std::size_t s = 0; s < opts.filler_per_fact; ++s) sentences.push_back(filler_sentence(fact.sig));
      sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at), fact.text);
      fact.section = join(sentences, " ");
      body += fact.section + "\n\n";
    }
    doc.body = std::move(body);
    out.documents.push_back(std::move(doc));
  }

  // Targets sit inside exactly one chunk, together with their whole section.
  const auto chunks = build_corpus(out.documents, opts.chunking);
  std::vector<std::vector<std::uint32_t>> found_in(facts.size());
  for (std::size_t fi = 0; fi < facts.size(); ++fi) {
    for (const auto& c : chunks) {
      if (c.text.find(facts[fi].text) != std::string::npos) found_in[fi].push_back(c.chunk_id);
    }
  }
  // A chunk cut through a fact keeps a fragment of it. When that fragment holds
  // a topic keyword the chunk competes with the fact's home chunk, so such
  // facts are not used as targets.
  auto clean_cut = [&](std::size_t fi) {
    const auto& f = facts[fi];
    const auto& topic = topics[f.topic];
    const auto spans = default_tokenizer().spans(f.text);
    for (std::size_t k = 1; k < spans.size(); ++k) {
      const std::string_view text(f.text);
      const auto head = text.substr(0, spans[k - 1].end);
      const auto tail = text.substr(spans[k].begin);
      auto keyword_in = [&](std::string_view frag) {
        for (const auto& w : tokenize(frag)) {
          if (w == topic.a || w == topic.b) return true;
        }
        return false;
      };
      const bool head_kw = keyword_in(head);
      const bool tail_kw = keyword_in(tail);
      for (const auto& c : chunks) {
        const std::string_view ct(c.text);
        if (ct.find(f.text) != std::string_view::npos) continue;
        if (head_kw && ct.ends_with(head)) return false;
        if (tail_kw && ct.starts_with(tail)) return false;
      }
    }
    return true;
  };
  auto outside = [&](std::size_t fi, std::uint32_t chunk) {
    return std::find(found_in[fi].begin(), found_in[fi].end(), chunk) == found_in[fi].end();
  };

  auto shares_keyword = [&](std::size_t t, std::size_t u) {
    return topics[t].a == topics[u].a || topics[t].a == topics[u].b || topics[t].b == topics[u].a ||
           topics[t].b == topics[u].b;
  };

  std::vector<std::size_t> targets = order;
  for (auto fi : targets) {
    if (out.questions.size() == opts.n_questions) break;
    if (found_in[fi].size() != 1 || !clean_cut(fi)) continue;
    const auto home = found_in[fi].front();
    if (chunks[home].text.find(facts[fi].section) == std::string::npos) continue;
    const auto& f = facts[fi];
    const auto& topic = topics[f.topic];

    std::vector<std::string> options;
    std::vector<std::size_t> same;
    for (auto other : topic.facts) {
      if (other != fi && outside(other, home)) same.push_back(other);
    }
    if (same.empty()) continue;
    options.push_back(facts[same[draw.below(same.size())]].text);
    while (options.size() < 3) {
      const auto cand = draw.below(facts.size());
      if (shares_keyword(facts[cand].topic, f.topic) || !outside(cand, home)) continue;
      if (std::find(options.begin(), options.end(), facts[cand].text) != options.end()) continue;
      options.push_back(facts[cand].text);
    }
    draw.shuffle(options);
    const std::size_t answer = draw.below(kMcqOptions);
    options.insert(options.begin() + static_cast<std::ptrdiff_t>(answer), f.text);

    EvalQuestion q;
    char id[32];
    std::snprintf(id, sizeof id, "q%04zu", out.questions.size() + 1);
    q.id = id;
    q.question = "Which statement about " + topic.a + " and " + topic.b +  " mentions " + join(f.sig, " ") + "?";
    q.options = std::move(options);
    q.answer_index = static_cast<int>(answer);
    q.domain_tag = out.documents[f.doc].domain_tag;
    out.questions.push_back(std::move(q));
  }
  if (out.questions.size() < opts.n_questions) {
    throw ValueError("only " + std::to_string(out.questions.size()) + " single-chunk facts for " +
                     std::to_string(opts.n_questions) + " questions");
  }
  return out;
}

void write_synthetic_corpus(const SyntheticDataset& data, const std::filesystem::path& corpus_dir) {
  std::filesystem::create_directories(corpus_dir);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
  for (const auto& d : data.documents) {
    binio::write_text_file((corpus_dir / d.doc_id).string(), d.body);
    manifest[d.doc_id] = {{"domain_tag", std::string(to_string(d.domain_tag))}, {"source_name", d.source_name}};
  }
  binio::write_text_file((corpus_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace prag
