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
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prag/compress.hpp"
#include "prag/memguard.hpp"

namespace prag {

// ---------------------------------------------------------------------------
// Prefill planning and latency model

struct PrefillBlock {
  std::size_t start = 0;
  std::size_t len = 0;
  bool operator==(const PrefillBlock&) const = default;
};

// ceil(L / B) blocks partitioning [0, L); all but the last have len == B.
struct PrefillPlan {
  std::size_t total_tokens = 0;
  std::size_t block_size = 512;
  std::vector<PrefillBlock> blocks;
};

// Throws ConfigError for block_size == 0.
PrefillPlan plan_prefill(std::size_t total_tokens, std::size_t block_size);

// Per-block cost tau(x) = t_fixed + t_per_token * x, plus a flat per-token
// decode cost. Milliseconds throughout.
struct LatencyModel {
  // Defaults equal mobile_preset().
  double t_fixed_ms = (14200.0 - 4800.0) / (2048.0 - 4.0);
  double t_per_token_ms = (4800.0 - 4.0 * t_fixed_ms) / 2048.0;
  double decode_ms_per_token = 1000.0 / 22.57;

  double tau(std::size_t tokens) const { return t_fixed_ms + t_per_token_ms * static_cast<double>(tokens); }
  void validate() const;

  // Fits (t_fixed, t_per_token) from a sequential (B = 1) and a batched
  // (B = block_size) measurement at the same context length. Throws
  // ConfigError when the measurements imply a negative fixed cost or a
  // non-positive per-token cost.
  static LatencyModel calibrate(std::size_t context_tokens, double sequential_ms, double batched_ms,
                                std::size_t block_size, double decode_ms_per_token);

  // Phone-class preset: 14.2 s sequential and 4.8 s batched (B = 512) prefill
  // at 2048 context tokens, 22.57 tokens/s decode. A calibration anchor, not a
  // measurement of this machine.
  static LatencyModel mobile_preset();
  static constexpr std::size_t kPresetContextTokens = 2048;
  static constexpr std::size_t kPresetBlockSize = 512;
};

// Sum of tau(len) over the blocks of plan_prefill(L, B). B = 1 gives L * tau(1).
double simulate_prefill(std::size_t total_tokens, std::size_t block_size, const LatencyModel& model);

// ---------------------------------------------------------------------------
// KV cache

enum class KvPrecision { fp16, int8 };

std::string_view to_string(KvPrecision p);
KvPrecision parse_kv_precision(std::string_view s);

std::uint16_t float_to_half(float f);
float half_to_float(std::uint16_t h);

// Append-only per-token key/value rows. fp16 stores 2 bytes per element; int8
// stores 1 byte per element plus one f32 scale per row (symmetric max-abs).
class KvStore {
 public:
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  KvStore(KvPrecision precision, std::size_t rows_per_token, std::size_t cols,
          std::uint64_t capacity_bytes = kUnlimited);

  // Appends one token: rows_per_token x cols values, row-major. Throws
  // CachePressureError when the capacity would be exceeded (the store is left
  // unchanged) and ValueError for non-finite input.
  void append(std::span<const float> token_rows);
  void append_tokens(std::span<const float> rows, std::size_t n_tokens);

  std::vector<float> row(std::size_t token, std::size_t r) const;
  float row_scale(std::size_t token, std::size_t r) const;

  KvPrecision precision() const { return precision_; }
  std::size_t rows_per_token() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t token_count() const { return tokens_; }
  std::uint64_t payload_bytes() const;
  std::uint64_t scale_bytes() const;
  std::uint64_t bytes_used() const { return payload_bytes() + scale_bytes(); }
  std::uint64_t bytes_per_token() const;
  std::uint64_t capacity_bytes() const { return capacity_; }

 private:
  KvPrecision precision_;
  std::size_t rows_;
  std::size_t cols_;
  std::uint64_t capacity_;
  std::size_t tokens_ = 0;
  std::vector<std::uint16_t> half_;
  std::vector<std::int8_t> q_;
  std::vector<float> scales_;
};

// ---------------------------------------------------------------------------
// Prompt and backends

inline constexpr std::string_view kDefaultPreamble =
    "You are an offline first-aid assistant. Answer using only the context provided. "
    "If the context does not cover the question, say so.";

struct Prompt {
  std::string preamble;
  std::string question;
  std::vector<std::string> options;  // MCQ options, empty for free-form
  const CompressedContext* context = nullptr;
  std::string text;
  std::vector<std::string> tokens;
};

// preamble + context (when non-empty) + question (+ lettered options).
Prompt build_prompt(std::string_view question, std::span<const std::string> options,
                    const CompressedContext* context, std::string_view preamble = kDefaultPreamble);

struct DecodeStep {
  std::string token;  // text piece; concatenating pieces yields the output
  bool eos = false;
};

// Text generation runtime. Deterministic given the seed passed to start().
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t context_limit() const = 0;
  virtual void start(const Prompt& prompt, std::uint64_t seed) = 0;
  virtual void prefill(std::span<const std::string> block, KvStore& kv) = 0;
  virtual DecodeStep decode_step(KvStore& kv) = 0;
};

// Deterministic stand-in for a language model.
//   echo:        answers with the highest scored context sentence.
//   mcq_overlap: picks the option with the largest token overlap against a
//                context sentence (ties: highest retrieval weight, then lowest
//                letter) and answers "Answer: X". Without context or overlap it
//                picks a seeded uniform random letter.
class MockBackend final : public GenerationBackend {
 public:
  enum class Mode { echo, mcq_overlap };

  explicit MockBackend(Mode mode = Mode::echo, std::size_t context_limit = 8192);

  std::string name() const override { return mode_ == Mode::echo ? "mock-echo" : "mock-mcq"; }
  std::size_t context_limit() const override { return context_limit_; }
  void start(const Prompt& prompt, std::uint64_t seed) override;
  void prefill(std::span<const std::string> block, KvStore& kv) override;
  DecodeStep decode_step(KvStore& kv) override;

  // Test hook: throw from decode_step after this many emitted pieces.
  void fail_after(std::size_t pieces) { fail_after_ = pieces; }

 private:
  void push_kv(std::string_view token, KvStore& kv) const;

  Mode mode_;
  std::size_t context_limit_;
  std::vector<std::string> pieces_;
  std::size_t next_ = 0;
  std::size_t fail_after_ = std::numeric_limits<std::size_t>::max();
};

// Index of the option the MCQ mock would choose, or -1 for no overlap signal.
int mcq_overlap_choice(std::span<const std::string> options, const CompressedContext& context);

// Line-delimited JSON over the stdio of a child process:
//   engine -> runner  {"op":"prefill","tokens":[...]}   (no reply)
//                     {"op":"decode"}
//   runner -> engine  {"token":"...","eos":false}
// The runner owns its KV cache; the engine-side store is not touched.
class ExternalProcessBackend final : public GenerationBackend {
 public:
  ExternalProcessBackend(std::vector<std::string> argv, std::size_t context_limit);
  ~ExternalProcessBackend() override;
  ExternalProcessBackend(const ExternalProcessBackend&) = delete;
  ExternalProcessBackend& operator=(const ExternalProcessBackend&) = delete;

  std::string name() const override { return "external"; }
  std::size_t context_limit() const override { return context_limit_; }
  void start(const Prompt& prompt, std::uint64_t seed) override;
  void prefill(std::span<const std::string> block, KvStore& kv) override;
  DecodeStep decode_step(KvStore& kv) override;

 private:
  void spawn();
  void send(const std::string& line);
  std::string receive();

  std::vector<std::string> argv_;
  std::size_t context_limit_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// ---------------------------------------------------------------------------
// Generation

struct GenerationConfig {
  std::size_t block_size = 512;
  KvPrecision kv_precision = KvPrecision::int8;
  std::size_t kv_rows_per_token = 2;
  std::size_t kv_cols = 64;
  std::size_t max_new_tokens = std::numeric_limits<std::size_t>::max();
  std::uint64_t seed = 0;
  LatencyModel latency = LatencyModel::mobile_preset();
};

struct GenerationResult {
  std::string text;
  double ttft_ms = 0.0;  // wall clock, request start to first decoded piece
  double tokens_per_second = 0.0;
  std::size_t tokens_emitted = 0;
  bool truncated = false;
  std::string error;  // backend failure message when truncated by an error
  std::size_t prompt_tokens = 0;
  std::size_t t_max = 0;
  PressureState pressure;  // sampled once at request start
  std::uint64_t kv_bytes = 0;
  double simulated_prefill_ms = 0.0;
  double simulated_tps = 0.0;
};

using TokenConsumer = std::function<void(std::string_view)>;

// Prefills `prompt` block by block, then streams decoded pieces to `consumer`
// until EOS or T_max (sampled once from `guard` at start). The KV cache is
// registered with the guard as "kv.cache". Throws ContextOverflowError before
// any backend call when the prompt exceeds the backend context limit; backend
// failures yield a partial result with truncated = true.
GenerationResult generate(const Prompt& prompt, GenerationBackend& backend, MemoryGuard& guard,
                          const GenerationConfig& cfg, const TokenConsumer& consumer = {});

}  // namespace prag
