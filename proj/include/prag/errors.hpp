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

#include <stdexcept>
#include <string>

namespace prag {

// Invalid configuration value or combination. Raised at load/validation time.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Unknown chunk id, phrase or component.
class LookupError : public std::out_of_range {
 public:
  explicit LookupError(const std::string& what) : std::out_of_range(what) {}
};

// Malformed on-disk artifact or input record.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric input rejected (NaN/Inf, dimension mismatch).
class ValueError : public std::invalid_argument {
 public:
  explicit ValueError(const std::string& what) : std::invalid_argument(what) {}
};

// A pipeline stage failed; `stage()` names it (e.g. "query-embedding").
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// KV cache append would exceed the bytes granted by the memory guard.
class CachePressureError : public std::runtime_error {
 public:
  explicit CachePressureError(const std::string& what) : std::runtime_error(what) {}
};

// Prompt does not fit the backend context window.
class ContextOverflowError : public std::length_error {
 public:
  explicit ContextOverflowError(const std::string& what) : std::length_error(what) {}
};

}  // namespace prag
