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

#include "prag/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "prag/binio.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace {

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

std::uint64_t to_u64(std::string_view key, std::string_view raw) {
  const auto v = unquote(raw);
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (v.empty() || r.ec != std::errc() || r.ptr != end) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view raw) {
  const auto v = unquote(raw);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(std::string_view key, std::string_view raw) {
  const auto v = to_lower(unquote(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + v + "'");
}

}  // namespace

const std::vector<std::string>& EngineConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "paths.corpus_dir",         "paths.index_dir",         "paths.lexicon",
      "paths.embeddings",         "chunking.window_size",    "chunking.overlap",
      "index.entry_cap",          "embedding.dim",           "retrieval.alpha",
      "retrieval.top_k",          "retrieval.candidate_cap", "retrieval.rerank",
      "compression.enabled",      "compression.target_min",  "compression.target_max",
      "compression.always_keep_first", "engine.block_size",  "engine.kv_precision",
      "engine.backend",           "engine.backend_command",  "engine.context_limit",
      "engine.max_new_tokens",    "latency.t_fixed_ms",      "latency.t_per_token_ms",
      "latency.decode_ms_per_token", "memory.budget_bytes",  "memory.mode",
      "memory.model_bytes",       "memory.runtime_bytes",    "seed"};
  return keys;
}

void EngineConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  if (k == "paths.corpus_dir") paths.corpus_dir = unquote(value);
  else if (k == "paths.index_dir") paths.index_dir = unquote(value);
  else if (k == "paths.lexicon") paths.lexicon = unquote(value);
  else if (k == "paths.embeddings") paths.embeddings = unquote(value);
  else if (k == "chunking.window_size") chunking.window_size = to_u64(k, value);
  else if (k == "chunking.overlap") chunking.overlap = to_u64(k, value);
  else if (k == "index.entry_cap") entry_cap = to_u64(k, value);
  else if (k == "embedding.dim") embedding_dim = to_u64(k, value);
  else if (k == "retrieval.alpha") retrieval.alpha = to_double(k, value);
  else if (k == "retrieval.top_k") retrieval.top_k = to_u64(k, value);
  else if (k == "retrieval.candidate_cap") retrieval.candidate_cap = to_u64(k, value);
  else if (k == "retrieval.rerank") retrieval.rerank_enabled = to_bool(k, value);
  else if (k == "compression.enabled") compression_enabled = to_bool(k, value);
  else if (k == "compression.target_min") compression.target_reduction_min = to_double(k, value);
  else if (k == "compression.target_max") compression.target_reduction_max = to_double(k, value);
  else if (k == "compression.always_keep_first") compression.always_keep_first = to_bool(k, value);
  else if (k == "engine.block_size") engine.block_size = to_u64(k, value);
  else if (k == "engine.kv_precision") engine.kv_precision = parse_kv_precision(unquote(value));
  else if (k == "engine.backend") engine.backend = unquote(value);
  else if (k == "engine.backend_command") engine.backend_command = unquote(value);
  else if (k == "engine.context_limit") engine.context_limit = to_u64(k, value);
  else if (k == "engine.max_new_tokens") engine.max_new_tokens = to_u64(k, value);
  else if (k == "latency.t_fixed_ms") latency.t_fixed_ms = to_double(k, value);
  else if (k == "latency.t_per_token_ms") latency.t_per_token_ms = to_double(k, value);
  else if (k == "latency.decode_ms_per_token") latency.decode_ms_per_token = to_double(k, value);
  else if (k == "memory.budget_bytes") memory.budget_bytes = to_u64(k, value);
  else if (k == "memory.mode") memory.mode = parse_memory_mode(unquote(value));
  else if (k == "memory.model_bytes") memory.model_bytes = to_u64(k, value);
  else if (k == "memory.runtime_bytes") memory.runtime_bytes = to_u64(k, value);
  else if (k == "seed") seed = to_u64(k, value);
  else throw ConfigError("unknown config key '" + k + "'");
}

void EngineConfig::validate() const {
  chunking.validate();
  if (entry_cap == 0) throw ConfigError("index.entry_cap must be >= 1");
  if (embedding_dim == 0 || embedding_dim > 0xFFFF) throw ConfigError("embedding.dim must be in [1, 65535]");
  retrieval.validate();
  compression.validate();
  if (engine.block_size == 0) throw ConfigError("engine.block_size must be >= 1");
  if (engine.backend != "mock" && engine.backend != "external") {
    throw ConfigError("engine.backend must be mock|external, got '" + engine.backend + "'");
  }
  if (engine.backend == "external" && trim(engine.backend_command).empty()) {
    throw ConfigError("engine.backend = external needs engine.backend_command");
  }
  if (engine.context_limit == 0) throw ConfigError("engine.context_limit must be >= 1");
  latency.validate();
  if (memory.budget_bytes == 0) throw ConfigError("memory.budget_bytes must be > 0");
}

EngineConfig EngineConfig::parse(std::string_view text) {
  EngineConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    // '#' starts a comment unless inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("malformed section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected key = value");
      const auto key = std::string(trim(line.substr(0, eq)));
      const auto value = trim(line.substr(eq + 1));
      cfg.set(section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
  return parse(binio::read_text_file(path.string()));
}

std::string EngineConfig::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "seed = " << seed << "\n\n[paths]\ncorpus_dir = \"" << paths.corpus_dir << "\"\nindex_dir = \""
     << paths.index_dir << "\"\nlexicon = \"" << paths.lexicon << "\"\nembeddings = \"" << paths.embeddings
     << "\"\n\n[chunking]\nwindow_size = " << chunking.window_size << "\noverlap = " << chunking.overlap
     << "\n\n[index]\nentry_cap = " << entry_cap << "\n\n[embedding]\ndim = " << embedding_dim
     << "\n\n[retrieval]\nalpha = " << retrieval.alpha << "\ntop_k = " << retrieval.top_k
     << "\ncandidate_cap = " << retrieval.candidate_cap << "\nrerank = " << (retrieval.rerank_enabled ? "true" : "false")
     << "\n\n[compression]\nenabled = " << (compression_enabled ? "true" : "false")
     << "\ntarget_min = " << compression.target_reduction_min << "\ntarget_max = " << compression.target_reduction_max
     << "\nalways_keep_first = " << (compression.always_keep_first ? "true" : "false")
     << "\n\n[engine]\nblock_size = " << engine.block_size << "\nkv_precision = \"" << to_string(engine.kv_precision)
     << "\"\nbackend = \"" << engine.backend << "\"\nbackend_command = \"" << engine.backend_command
     << "\"\ncontext_limit = " << engine.context_limit << "\nmax_new_tokens = " << engine.max_new_tokens
     << "\n\n[latency]\nt_fixed_ms = " << latency.t_fixed_ms << "\nt_per_token_ms = " << latency.t_per_token_ms
     << "\ndecode_ms_per_token = " << latency.decode_ms_per_token << "\n\n[memory]\nbudget_bytes = "
     << memory.budget_bytes << "\nmode = \"" << to_string(memory.mode) << "\"\nmodel_bytes = " << memory.model_bytes
     << "\nruntime_bytes = " << memory.runtime_bytes << "\n";
  return os.str();
}

}  // namespace prag
