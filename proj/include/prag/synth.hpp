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
#include <vector>

#include "prag/corpus.hpp"
#include "prag/eval.hpp"
#include "prag/lexindex.hpp"

namespace prag {

// Generated corpus and MCQ set for exercising the full pipeline without the
// original datasets. Every question targets one "fact" sentence built from
// pseudo-words around two topic keywords; the surrounding section reuses those
// pseudo-words and no other section does. Each topic recurs in
// `facts_per_topic` documents, so keyword matching alone ties between them and
// only the semantic stage singles out the right chunk. The correct option is
// the fact verbatim and lies, with its whole section, inside exactly one
// chunk; distractors are one
// same-topic fact and two facts sharing no keyword with the question.
struct SyntheticOptions {
  std::size_t n_questions = 400;
  std::uint64_t seed = 7;
  std::size_t facts_per_topic = 5;
  std::size_t facts_per_document = 6;
  std::size_t filler_per_fact = 10;
  ChunkConfig chunking;
};

struct SyntheticDataset {
  std::vector<RawDocument> documents;
  std::vector<EvalQuestion> questions;
};

// Throws ValueError when the lexicon has too few single-word phrases to form
// topics or when not enough facts land inside a single chunk.
SyntheticDataset make_synthetic(const SyntheticOptions& opts, const KeywordLexicon& lexicon);

// Writes one .txt per document plus manifest.json (domain tags) so that
// load_corpus_dir + build_corpus reproduce the in-memory chunking.
void write_synthetic_corpus(const SyntheticDataset& data, const std::filesystem::path& corpus_dir);

}  // namespace prag
