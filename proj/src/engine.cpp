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

#include "prag/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <random>
#include <unordered_set>

#include "prag/errors.hpp"
#include "prag/quant.hpp"

namespace prag {

PrefillPlan plan_prefill(std::size_t total_tokens, std::size_t block_size) {
  if (block_size == 0) throw ConfigError("engine.block_size must be >= 1");
  PrefillPlan plan;
  plan.total_tokens = total_tokens;
  plan.block_size = block_size;
  plan.blocks.reserve((total_tokens + block_size - 1) / block_size);
  for (std::size_t s = 0; s < total_tokens; s += block_size) {
    plan.blocks.push_back({s, std::min(block_size, total_tokens - s)});
  }
  return plan;
}

void LatencyModel::validate() const {
  if (!(t_fixed_ms >= 0.0) || !std::isfinite(t_fixed_ms)) throw ConfigError("latency t_fixed must be >= 0");
  if (!(t_per_token_ms > 0.0) || !std::isfinite(t_per_token_ms)) throw ConfigError("latency t_per_token must be > 0");
  if (!(decode_ms_per_token > 0.0)) throw ConfigError("latency decode cost must be > 0");
}

LatencyModel LatencyModel::calibrate(std::size_t context_tokens, double sequential_ms, double batched_ms,
                                     std::size_t block_size, double decode_ms_per_token) {
  // sequential: L * (a + b)      = S
  // batched:    n * a + L * b    = P,  n = ceil(L / B)
  const auto n = plan_prefill(context_tokens, block_size).blocks.size();
  const double L = static_cast<double>(context_tokens);
  if (context_tokens <= n) throw ConfigError("calibration needs block_size > 1 and context_tokens > 1");
  LatencyModel m;
  m.t_fixed_ms = (sequential_ms - batched_ms) / (L - static_cast<double>(n));
  m.t_per_token_ms = (batched_ms - static_cast<double>(n) * m.t_fixed_ms) / L;
  m.decode_ms_per_token = decode_ms_per_token;
  m.validate();
  return m;
}

LatencyModel LatencyModel::mobile_preset() {
  return calibrate(kPresetContextTokens, 14200.0, 4800.0, kPresetBlockSize, 1000.0 / 22.57);
}

double simulate_prefill(std::size_t total_tokens, std::size_t block_size, const LatencyModel& model) {
  double ms = 0.0;
  for (const auto& b : plan_prefill(total_tokens, block_size).blocks) ms += model.tau(b.len);
  return ms;
}

// ---------------------------------------------------------------------------

std::string_view to_string(KvPrecision p) { return p == KvPrecision::fp16 ? "fp16" : "int8"; }

KvPrecision parse_kv_precision(std::string_view s) {
  if (s == "fp16") return KvPrecision::fp16;
  if (s == "int8") return KvPrecision::int8;
  throw ConfigError("engine.kv_precision must be fp16|int8, got '" + std::string(s) + "'");
}

std::uint16_t float_to_half(float f) {
  std::uint32_t x;
  std::memcpy(&x, &f, sizeof x);
  const std::uint32_t sign = (x >> 16) & 0x8000u;
  const std::uint32_t exp = (x >> 23) & 0xFFu;
  std::uint32_t mant = x & 0x7FFFFFu;
  if (exp == 0xFF) return static_cast<std::uint16_t>(sign | 0x7C00u | (mant ? 0x200u : 0u));
  const int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 31) return static_cast<std::uint16_t>(sign | 0x7C00u);
  if (e <= 0) {
    if (e < -10) return static_cast<std::uint16_t>(sign);
    mant |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t h = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (h & 1u))) ++h;
    return static_cast<std::uint16_t>(sign | h);
  }
  std::uint32_t h = sign | (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1FFFu;
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;  // carry into the exponent is correct
  return static_cast<std::uint16_t>(h);
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1Fu;
  std::uint32_t mant = h & 0x3FFu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      bits = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | ((mant & 0x3FFu) << 13);
    }
  } else if (exp == 0x1F) {
    bits = sign | 0x7F800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

KvStore::KvStore(KvPrecision precision, std::size_t rows_per_token, std::size_t cols, std::uint64_t capacity_bytes)
    : precision_(precision), rows_(rows_per_token), cols_(cols), capacity_(capacity_bytes) {
  if (rows_ == 0 || cols_ == 0) throw ConfigError("kv store needs rows_per_token >= 1 and cols >= 1");
}

std::uint64_t KvStore::bytes_per_token() const {
  const std::uint64_t elems = static_cast<std::uint64_t>(rows_) * cols_;
  return precision_ == KvPrecision::fp16 ? 2 * elems : elems + 4ULL * rows_;
}

std::uint64_t KvStore::payload_bytes() const {
  const std::uint64_t elems = static_cast<std::uint64_t>(tokens_) * rows_ * cols_;
  return precision_ == KvPrecision::fp16 ? 2 * elems : elems;
}

std::uint64_t KvStore::scale_bytes() const {
  return precision_ == KvPrecision::int8 ? 4ULL * tokens_ * rows_ : 0;
}

void KvStore::append(std::span<const float> token_rows) {
  if (token_rows.size() != rows_ * cols_) throw ValueError("kv append: expected rows_per_token x cols values");
  for (float v : token_rows) {
    if (!std::isfinite(v)) throw ValueError("kv append: non-finite value");
  }
  if (bytes_used() + bytes_per_token() > capacity_) {
    throw CachePressureError("kv cache full: " + std::to_string(bytes_used()) + " B used, " +
                             std::to_string(capacity_) + " B granted");
  }
  if (precision_ == KvPrecision::fp16) {
    for (float v : token_rows) half_.push_back(float_to_half(v));
  } else {
    const auto base = q_.size();
    q_.resize(base + rows_ * cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      scales_.push_back(quantize_symmetric(token_rows.subspan(r * cols_, cols_),
                                           std::span<std::int8_t>(q_).subspan(base + r * cols_, cols_)));
    }
  }
  ++tokens_;
}

void KvStore::append_tokens(std::span<const float> rows, std::size_t n_tokens) {
  const auto per = rows_ * cols_;
  if (rows.size() != per * n_tokens) throw ValueError("kv append: size mismatch");
  for (std::size_t t = 0; t < n_tokens; ++t) append(rows.subspan(t * per, per));
}

std::vector<float> KvStore::row(std::size_t token, std::size_t r) const {
  if (token >= tokens_ || r >= rows_) throw LookupError("kv row out of range");
  std::vector<float> out(cols_);
  const auto off = (token * rows_ + r) * cols_;
  if (precision_ == KvPrecision::fp16) {
    for (std::size_t c = 0; c < cols_; ++c) out[c] = half_to_float(half_[off + c]);
  } else {
    dequantize_symmetric(std::span<const std::int8_t>(q_).subspan(off, cols_), scales_[token * rows_ + r], out);
  }
  return out;
}

float KvStore::row_scale(std::size_t token, std::size_t r) const {
  if (token >= tokens_ || r >= rows_) throw LookupError("kv row out of range");
  return precision_ == KvPrecision::int8 ? scales_[token * rows_ + r] : 0.0f;
}

// ---------------------------------------------------------------------------

Prompt build_prompt(std::string_view question, std::span<const std::string> options, const CompressedContext* context,
                    std::string_view preamble) {
  Prompt p;
  p.preamble = std::string(preamble);
  p.question = std::string(question);
  p.options.assign(options.begin(), options.end());
  p.context = context;

  p.text = p.preamble;
  if (context && !context->empty()) {
    p.text += "\n\nContext:\n";
    p.text += context->text();
  }
  p.text += "\n\nQuestion: ";
  p.text += p.question;
  for (std::size_t i = 0; i < p.options.size(); ++i) {
    p.text += '\n';
    p.text += static_cast<char>('A' + i);
    p.text += ". ";
    p.text += p.options[i];
  }
  p.text += "\nAnswer:";
  p.tokens = tokenize(p.text);
  return p;
}

namespace {

// Pieces that concatenate back to `text` (each carries its leading whitespace).
std::vector<std::string> stream_pieces(std::string_view text) {
  std::vector<std::string> out;
  std::size_t prev = 0;
  for (const auto& sp : default_tokenizer().spans(text)) {
    out.emplace_back(text.substr(prev, sp.end - prev));
    prev = sp.end;
  }
  return out;
}

std::unordered_set<std::string> word_set(std::string_view text) {
  std::unordered_set<std::string> out;
  for (auto& t : tokenize(to_lower(text))) {
    if (t.size() == 1 && is_ascii_punct(t[0])) continue;
    out.insert(std::move(t));
  }
  return out;
}

}  // namespace

int mcq_overlap_choice(std::span<const std::string> options, const CompressedContext& context) {
  std::vector<std::unordered_set<std::string>> sentences;
  std::vector<double> weights;
  for (const auto& s : context.kept_sentences) {
    sentences.push_back(word_set(s.text));
    weights.push_back(context.chunk_weight(s.source_chunk_id));
  }
  int best = -1;
  double best_frac = 0.0;
  double best_weight = 0.0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const auto opt = word_set(options[i]);
    if (opt.empty()) continue;
    double frac = 0.0;
    double weight = 0.0;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      std::size_t hit = 0;
      for (const auto& w : opt) hit += sentences[s].contains(w) ? 1 : 0;
      const double f = static_cast<double>(hit) / static_cast<double>(opt.size());
      if (f > frac) {
        frac = f;
        weight = weights[s];
      } else if (f == frac && f > 0.0) {
        weight = std::max(weight, weights[s]);
      }
    }
    if (frac > best_frac || (frac == best_frac && frac > 0.0 && weight > best_weight)) {
      best = static_cast<int>(i);
      best_frac = frac;
      best_weight = weight;
    }
  }
  return best;
}

MockBackend::MockBackend(Mode mode, std::size_t context_limit) : mode_(mode), context_limit_(context_limit) {}

void MockBackend::start(const Prompt& prompt, std::uint64_t seed) {
  pieces_.clear();
  next_ = 0;
  const bool has_context = prompt.context && !prompt.context->empty();

  if (mode_ == Mode::mcq_overlap && !prompt.options.empty()) {
    int choice = has_context ? mcq_overlap_choice(prompt.options, *prompt.context) : -1;
    if (choice < 0) {
      std::mt19937_64 rng(seed);
      choice = static_cast<int>(rng() % prompt.options.size());
    }
    pieces_ = stream_pieces(std::string("Answer: ") + static_cast<char>('A' + choice));
    return;
  }

  if (!has_context) return;
  const Sentence* best = nullptr;
  for (const auto& s : prompt.context->kept_sentences) {
    if (!best || s.score > best->score) best = &s;
  }
  pieces_ = stream_pieces(best->text);
}

void MockBackend::push_kv(std::string_view token, KvStore& kv) const {
  std::vector<float> rows(kv.rows_per_token() * kv.cols());
  std::uint64_t h = fnv1a64(token);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i % 8 == 0) h = fnv1a64(token, h);
    rows[i] = static_cast<float>((h >> ((i % 8) * 8)) & 0xFFu) / 127.5f - 1.0f;
  }
  kv.append(rows);
}

void MockBackend::prefill(std::span<const std::string> block, KvStore& kv) {
  for (const auto& t : block) push_kv(t, kv);
}

DecodeStep MockBackend::decode_step(KvStore& kv) {
  if (next_ >= fail_after_) throw std::runtime_error("mock backend failure (injected)");
  if (next_ >= pieces_.size()) return {"", true};
  auto piece = pieces_[next_++];
  push_kv(piece, kv);
  return {std::move(piece), false};
}

// ---------------------------------------------------------------------------

GenerationResult generate(const Prompt& prompt, GenerationBackend& backend, MemoryGuard& guard,
                          const GenerationConfig& cfg, const TokenConsumer& consumer) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t) {
    return std::chrono::duration<double, std::milli>(clock::now() - t).count();
  };

  GenerationResult res;
  res.prompt_tokens = prompt.tokens.size();
  if (res.prompt_tokens > backend.context_limit()) {
    throw ContextOverflowError("prompt has " + std::to_string(res.prompt_tokens) + " tokens, backend '" +
                               backend.name() + "' accepts " + std::to_string(backend.context_limit()));
  }

  // A new request starts with an empty cache; T_max is fixed for its duration.
  guard.remove("kv.cache");
  res.pressure = guard.snapshot();
  res.t_max = std::min(res.pressure.t_max, cfg.max_new_tokens);
  res.simulated_prefill_ms = simulate_prefill(res.prompt_tokens, cfg.block_size, cfg.latency);
  res.simulated_tps = 1000.0 / cfg.latency.decode_ms_per_token;

  KvStore kv(cfg.kv_precision, cfg.kv_rows_per_token, cfg.kv_cols, guard.available());
  const auto plan = plan_prefill(prompt.tokens.size(), cfg.block_size);
  const std::span<const std::string> tokens(prompt.tokens);

  const auto t0 = clock::now();
  clock::time_point first{};
  bool eos = false;
  try {
    backend.start(prompt, cfg.seed);
    for (const auto& b : plan.blocks) backend.prefill(tokens.subspan(b.start, b.len), kv);
    while (res.tokens_emitted < res.t_max) {
      auto step = backend.decode_step(kv);
      if (step.eos) {
        eos = true;
        break;
      }
      if (res.tokens_emitted == 0) {
        first = clock::now();
        res.ttft_ms = ms_since(t0);
      }
      res.text += step.token;
      ++res.tokens_emitted;
      if (consumer) consumer(step.token);
    }
    res.truncated = !eos;
  } catch (const std::exception& e) {
    res.truncated = true;
    res.error = e.what();
  }
  if (res.tokens_emitted == 0) {
    res.ttft_ms = ms_since(t0);
  } else if (res.tokens_emitted > 1) {
    const double decode_ms = ms_since(first);
    res.tokens_per_second = decode_ms > 0.0 ? static_cast<double>(res.tokens_emitted - 1) * 1000.0 / decode_ms : 0.0;
  }
  res.kv_bytes = kv.bytes_used();
  guard.update("kv.cache", res.kv_bytes);
  return res;
}

}  // namespace prag
