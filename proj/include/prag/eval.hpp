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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prag/corpus.hpp"
#include "prag/pipeline.hpp"

namespace prag {

inline constexpr std::size_t kMcqOptions = 4;

struct EvalQuestion {
  std::string id;
  std::string question;
  std::vector<std::string> options;  // exactly 4, options[i] <-> letter 'A' + i
  int answer_index = 0;
  DomainTag domain_tag = DomainTag::general;
};

// JSON Lines, one {"id","question","options","answer_index","domain_tag"}
// object per line; blank lines skipped. Errors name the 1-based line.
std::vector<EvalQuestion> parse_mcq(std::string_view jsonl);
std::vector<EvalQuestion> load_mcq(const std::filesystem::path& path);
std::string mcq_to_jsonl(std::span<const EvalQuestion> questions);

// First match of (?i)\b(answer|option)?\s*[:\-]?\s*([ABCD])\b wins; otherwise
// the option with most shared word tokens (lowest index on ties). nullopt
// (abstain) only for empty output.
std::optional<int> parse_answer(std::string_view output, std::span<const std::string> options);

struct EvalSettings {
  PipelineMode mode = PipelineMode::rag_rerank;
  bool compress = true;
  std::uint64_t seed = 0;
  std::string descriptor() const;  // e.g. "rag-rerank+compress"
};

struct EvalRow {
  std::string id;
  int answer_index = 0;
  int predicted = -1;  // -1 = abstain or failure
  bool correct = false;
  bool failed = false;
  std::string error;
  std::vector<std::uint32_t> retrieved;
  std::size_t prompt_tokens = 0;
  double ttft_ms = 0.0;  // simulated prefill
  double tps = 0.0;      // simulated decode rate
  double reduction = 0.0;
  std::string regime;
  PressureState pressure;
};

struct EvalReport {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t n_questions = 0;
  std::size_t n_correct = 0;
  std::size_t n_failed = 0;
  double mean_ttft_ms = 0.0;
  double mean_tps = 0.0;
  double mean_reduction = 0.0;
  std::vector<EvalRow> rows;  // sorted by id

  // 100 * n_correct / n_questions; NaN when n_questions == 0.
  double accuracy() const;
  std::string accuracy_text() const;  // "97.50" or "n/a"
  std::string to_csv() const;
  std::string summary_json() const;
};

// Runs every question through the pipeline. Latency columns come from the
// latency model so reports are reproducible byte for byte. Per-question seed
// is settings.seed ^ fnv1a64(id). A backend failure marks the row failed and
// incorrect; the run continues.
EvalReport run_eval(std::span<const EvalQuestion> questions, const KnowledgeBase* kb, const EvalSettings& settings,
                    GenerationBackend& backend, MemoryGuard& guard, const EngineConfig& cfg);

}  // namespace prag
