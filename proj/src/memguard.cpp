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

#include "prag/memguard.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "prag/errors.hpp"

namespace prag {

std::string_view to_string(MemoryCategory c) {
  switch (c) {
    case MemoryCategory::model:
      return "model";
    case MemoryCategory::index:
      return "index";
    case MemoryCategory::kv:
      return "kv";
    case MemoryCategory::runtime:
      return "runtime";
  }
  return "runtime";
}

std::string_view to_string(PressureTier t) {
  switch (t) {
    case PressureTier::safe:
      return "safe";
    case PressureTier::moderate:
      return "moderate";
    case PressureTier::critical:
      return "critical";
  }
  return "safe";
}

std::string_view to_string(MemoryMode m) { return m == MemoryMode::measured ? "measured" : "accounting"; }

MemoryMode parse_memory_mode(std::string_view s) {
  if (s == "accounting") return MemoryMode::accounting;
  if (s == "measured") return MemoryMode::measured;
  throw ConfigError("memory.mode must be accounting|measured, got '" + std::string(s) + "'");
}

PressureTier pressure_tier(double rho) {
  if (std::isnan(rho) || rho < 0.0) throw ValueError("memory pressure ratio must be >= 0");
  if (rho < 0.70) return PressureTier::safe;
  if (rho < 0.85) return PressureTier::moderate;
  return PressureTier::critical;
}

std::size_t max_tokens(double rho) {
  switch (pressure_tier(rho)) {
    case PressureTier::safe:
      return 1024;
    case PressureTier::moderate:
      return 768;
    case PressureTier::critical:
      return 256;
  }
  return 256;
}

std::string PressureState::metrics_line() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "rho=%.4f,tier=%s,t_max=%zu", rho, std::string(to_string(tier)).c_str(), t_max);
  return buf;
}

std::string format_bytes(std::uint64_t bytes) {
  char buf[64];
  if (bytes >= kMiB) {
    std::snprintf(buf, sizeof buf, "%.1f MiB", static_cast<double>(bytes) / static_cast<double>(kMiB));
  } else if (bytes >= 1024) {
    std::snprintf(buf, sizeof buf, "%.1f KiB", static_cast<double>(bytes) / 1024.0);
  } else {
    std::snprintf(buf, sizeof buf, "%llu B", static_cast<unsigned long long>(bytes));
  }
  return buf;
}

std::string MemoryLedger::render() const {
  std::ostringstream os;
  auto row = [&](const char* label, std::uint64_t v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-10s %14llu B  (%s)\n", label, static_cast<unsigned long long>(v),
                  format_bytes(v).c_str());
    os << buf;
  };
  os << "memory ledger\n";
  row("M_model", m_model);
  row("M_index", m_index);
  row("M_KV", m_kv);
  row("M_runtime", m_runtime);
  row("M_total", total());
  row("budget", budget);
  os << "  within budget: " << (total() <= budget ? "yes" : "no") << "\n";
  for (const auto& [name, bytes] : components) {
    os << "    " << name << " [" << to_string(MemoryGuard::category_of(name)) << "] " << bytes << " B\n";
  }
  return os.str();
}

MemoryGuard::MemoryGuard(std::uint64_t budget_bytes, MemoryMode mode) : budget_(budget_bytes), mode_(mode) {
  if (budget_ == 0) throw ConfigError("memory.budget_bytes must be > 0");
}

MemoryCategory MemoryGuard::category_of(std::string_view name) {
  auto has_prefix = [&](std::string_view p) {
    return name.substr(0, p.size()) == p && (name.size() == p.size() || name[p.size()] == '.');
  };
  if (has_prefix("model")) return MemoryCategory::model;
  if (has_prefix("index")) return MemoryCategory::index;
  if (has_prefix("kv")) return MemoryCategory::kv;
  return MemoryCategory::runtime;
}

void MemoryGuard::register_component(const std::string& name, std::uint64_t bytes) {
  std::lock_guard lock(mu_);
  components_[name] = bytes;
}

void MemoryGuard::update(const std::string& name, std::uint64_t bytes) { register_component(name, bytes); }

void MemoryGuard::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  components_.erase(name);
}

std::uint64_t MemoryGuard::total_locked() const {
  std::uint64_t t = 0;
  for (const auto& [n, b] : components_) t += b;
  return t;
}

std::uint64_t MemoryGuard::total() const {
  std::lock_guard lock(mu_);
  return total_locked();
}

std::uint64_t MemoryGuard::available() const {
  const auto t = total();
  return t >= budget_ ? 0 : budget_ - t;
}

Admission MemoryGuard::check_admission(std::uint64_t proposed_bytes) const {
  std::lock_guard lock(mu_);
  const auto t = total_locked();
  if (t + proposed_bytes <= budget_) return {true, "admitted"};

  std::string dominant = "proposed allocation";
  std::uint64_t dominant_bytes = proposed_bytes;
  for (const auto& [n, b] : components_) {
    if (b > dominant_bytes) {
      dominant = n;
      dominant_bytes = b;
    }
  }
  std::ostringstream os;
  os << "rejected: M_total " << t << " B + proposed " << proposed_bytes << " B exceeds budget " << budget_
     << " B; dominant component: " << dominant << " (" << format_bytes(dominant_bytes) << ")";
  return {false, os.str()};
}

MemoryLedger MemoryGuard::ledger() const {
  std::lock_guard lock(mu_);
  MemoryLedger l;
  l.budget = budget_;
  l.components = components_;
  for (const auto& [n, b] : components_) {
    switch (category_of(n)) {
      case MemoryCategory::model:
        l.m_model += b;
        break;
      case MemoryCategory::index:
        l.m_index += b;
        break;
      case MemoryCategory::kv:
        l.m_kv += b;
        break;
      case MemoryCategory::runtime:
        l.m_runtime += b;
        break;
    }
  }
  return l;
}

PressureState MemoryGuard::snapshot() const {
  PressureState s;
  std::uint64_t used = 0;
  s.mode = MemoryMode::accounting;
  if (mode_ == MemoryMode::measured) {
    used = measured_rss_bytes();
    if (used > 0) {
      s.mode = MemoryMode::measured;
    } else {
      s.warning = "measured memory mode unavailable on this platform; using accounting mode";
    }
  }
  if (s.mode == MemoryMode::accounting) used = total();
  s.rho = static_cast<double>(used) / static_cast<double>(budget_);
  s.tier = pressure_tier(s.rho);
  s.t_max = max_tokens(s.rho);
  return s;
}

std::uint64_t measured_rss_bytes() {
  std::ifstream in("/proc/self/status");
  if (!in) return 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream is(line.substr(6));
      std::uint64_t kb = 0;
      is >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

}  // namespace prag
