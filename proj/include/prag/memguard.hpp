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
#include <map>
#include <mutex>
#include <string>
#include <string_view>

namespace prag {

inline constexpr std::uint64_t kMiB = 1024ULL * 1024ULL;
inline constexpr std::uint64_t kGiB = 1024ULL * kMiB;

enum class MemoryCategory { model, index, kv, runtime };
enum class PressureTier { safe, moderate, critical };
enum class MemoryMode { accounting, measured };

std::string_view to_string(MemoryCategory c);
std::string_view to_string(PressureTier t);
std::string_view to_string(MemoryMode m);
MemoryMode parse_memory_mode(std::string_view s);

// Generation cap from memory pressure:
//   1024  if rho < 0.70
//    768  if 0.70 <= rho < 0.85
//    256  if rho >= 0.85
// Throws ValueError for negative or NaN rho.
std::size_t max_tokens(double rho);
PressureTier pressure_tier(double rho);

struct PressureState {
  double rho = 0.0;
  PressureTier tier = PressureTier::safe;
  std::size_t t_max = 1024;
  MemoryMode mode = MemoryMode::accounting;
  std::string warning;  // set when measured mode fell back to accounting

  bool operator==(const PressureState&) const = default;
  // "rho=0.5000,tier=safe,t_max=1024"
  std::string metrics_line() const;
};

struct Admission {
  bool admitted = true;
  std::string message;
  explicit operator bool() const { return admitted; }
};

struct MemoryLedger {
  std::uint64_t m_model = 0;
  std::uint64_t m_index = 0;
  std::uint64_t m_kv = 0;
  std::uint64_t m_runtime = 0;
  std::uint64_t budget = 0;
  std::map<std::string, std::uint64_t> components;

  std::uint64_t total() const { return m_model + m_index + m_kv + m_runtime; }
  std::string render() const;
};

// Registered-bytes accounting against a total budget:
//   M_total = M_model + M_index + M_KV + M_runtime <= budget
// Components are grouped by name prefix ("model", "index", "kv", "runtime",
// optionally followed by '.' and a suffix); anything else counts as runtime.
// All operations are serialized; snapshots observe a consistent total.
class MemoryGuard {
 public:
  static constexpr std::uint64_t kDefaultBudget = 2 * kGiB;

  // Throws ConfigError for a zero budget.
  explicit MemoryGuard(std::uint64_t budget_bytes = kDefaultBudget, MemoryMode mode = MemoryMode::accounting);

  MemoryGuard(const MemoryGuard&) = delete;
  MemoryGuard& operator=(const MemoryGuard&) = delete;

  void register_component(const std::string& name, std::uint64_t bytes);
  void update(const std::string& name, std::uint64_t bytes);
  void remove(const std::string& name);

  // Rejects iff total + proposed > budget. The rejection names the dominant
  // component.
  Admission check_admission(std::uint64_t proposed_bytes) const;

  PressureState snapshot() const;
  MemoryLedger ledger() const;

  std::uint64_t total() const;
  std::uint64_t budget() const { return budget_; }
  std::uint64_t available() const;
  MemoryMode mode() const { return mode_; }

  static MemoryCategory category_of(std::string_view name);

 private:
  std::uint64_t total_locked() const;

  const std::uint64_t budget_;
  const MemoryMode mode_;
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> components_;
};

// Resident set size of this process from /proc, or 0 when unavailable.
std::uint64_t measured_rss_bytes();

std::string format_bytes(std::uint64_t bytes);

}  // namespace prag
