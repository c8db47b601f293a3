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

#include "prag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <regex>
#include <set>
#include <sstream>

#include "prag/binio.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace {

using nlohmann::ordered_json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::set<std::string> word_tokens(std::string_view text) {
  std::set<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (t.size() == 1 && is_ascii_punct(t[0])) continue;
    out.insert(to_lower(t));
  }
  return out;
}

std::string letter(int idx) { return idx < 0 ? std::string() : std::string(1, static_cast<char>('A' + idx)); }

}  // namespace

std::vector<EvalQuestion> parse_mcq(std::string_view jsonl) {
  std::vector<EvalQuestion> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (auto line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw FormatError("malformed JSON" + where + ": " + e.what());
    }
    try {
      EvalQuestion q;
      q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      q.question = j.at("question").get<std::string>();
      const auto& opts = j.at("options");
      if (!opts.is_array() || opts.size() != kMcqOptions) throw FormatError("options must have length 4");
      for (const auto& o : opts) q.options.push_back(o.get<std::string>());
      const auto& ai = j.at("answer_index");
      if (!ai.is_number_integer()) throw FormatError("answer_index must be an integer");
      const auto idx = ai.get<long long>();
      if (idx < 0 || idx >= static_cast<long long>(kMcqOptions)) {
        throw FormatError("answer_index " + std::to_string(idx) + " out of range [0, 3]");
      }
      q.answer_index = static_cast<int>(idx);
      if (j.contains("domain_tag")) q.domain_tag = parse_domain_tag(j.at("domain_tag").get<std::string>());
      if (!ids.insert(q.id).second) throw FormatError("duplicate id '" + q.id + "'");
      out.push_back(std::move(q));
    } catch (const FormatError& e) {
      throw FormatError(e.what() + where);
    } catch (const std::exception& e) {
      throw FormatError("invalid record" + where + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalQuestion> load_mcq(const std::filesystem::path& path) {
  return parse_mcq(binio::read_text_file(path.string()));
}

std::string mcq_to_jsonl(std::span<const EvalQuestion> questions) {
  std::string out;
  for (const auto& q : questions) {
    ordered_json j;
    j["id"] = q.id;
    j["question"] = q.question;
    j["options"] = q.options;
    j["answer_index"] = q.answer_index;
    j["domain_tag"] = std::string(to_string(q.domain_tag));
    out += j.dump() + "\n";
  }
  return out;
}

std::optional<int> parse_answer(std::string_view output, std::span<const std::string> options) {
  if (trim(output).empty()) return std::nullopt;
  static const std::regex pattern(R"(\b(answer|option)?\s*[:\-]?\s*([ABCD])\b)",
                                  std::regex::ECMAScript | std::regex::icase);
  const std::string text(output);
  std::smatch m;
  if (std::regex_search(text, m, pattern)) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(m[2].str()[0])));
    const int idx = c - 'A';
    if (idx < static_cast<int>(options.size()) || options.empty()) return idx;
  }
  const auto out_words = word_tokens(output);
  int best = 0;
  std::size_t best_hits = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    std::size_t hits = 0;
    for (const auto& w : word_tokens(options[i])) hits += out_words.contains(w) ? 1 : 0;
    if (hits > best_hits) {
      best_hits = hits;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string EvalSettings::descriptor() const {
  std::string d(to_string(mode));
  if (mode != PipelineMode::vanilla) d += compress ? "+compress" : "+no-compress";
  return d;
}

double EvalReport::accuracy() const {
  if (n_questions == 0) return std::nan("");
  return 100.0 * static_cast<double>(n_correct) / static_cast<double>(n_questions);
}

std::string EvalReport::accuracy_text() const { return n_questions == 0 ? "n/a" : fixed(accuracy(), 2); }

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "id,answer,predicted,correct,failed,retrieved,prompt_tokens,ttft_ms,tps,reduction,regime,rho,tier,t_max,error\n";
  for (const auto& r : rows) {
    std::string retrieved;
    for (std::size_t i = 0; i < r.retrieved.size(); ++i) retrieved += (i ? ";" : "") + std::to_string(r.retrieved[i]);
    os << csv_field(r.id) << ',' << letter(r.answer_index) << ',' << letter(r.predicted) << ','
       << (r.correct ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ',' << retrieved << ',' << r.prompt_tokens << ','
       << fixed(r.ttft_ms, 3) << ',' << fixed(r.tps, 3) << ',' << fixed(r.reduction, 4) << ',' << r.regime << ','
       << fixed(r.pressure.rho, 4) << ',' << to_string(r.pressure.tier) << ',' << r.pressure.t_max << ','
       << csv_field(r.error) << '\n';
  }
  return os.str();
}

std::string EvalReport::summary_json() const {
  ordered_json j;
  j["config"] = config;
  j["seed"] = seed;
  j["n_questions"] = n_questions;
  j["n_correct"] = n_correct;
  j["n_failed"] = n_failed;
  j["accuracy"] = accuracy_text();
  j["mean_ttft_ms"] = fixed(mean_ttft_ms, 3);
  j["mean_tps"] = fixed(mean_tps, 3);
  j["mean_reduction"] = fixed(mean_reduction, 4);
  if (!rows.empty()) {
    const auto& p = rows.back().pressure;
    j["pressure"] = {{"rho", fixed(p.rho, 4)}, {"tier", std::string(to_string(p.tier))}, {"t_max", p.t_max}};
  }
  return j.dump(2) + "\n";
}

EvalReport run_eval(std::span<const EvalQuestion> questions, const KnowledgeBase* kb, const EvalSettings& settings,
                    GenerationBackend& backend, MemoryGuard& guard, const EngineConfig& cfg) {
  EvalReport rep;
  rep.config = settings.descriptor();
  rep.seed = settings.seed;
  rep.n_questions = questions.size();
  rep.rows.reserve(questions.size());

  for (const auto& q : questions) {
    EvalRow row;
    row.id = q.id;
    row.answer_index = q.answer_index;
    AnswerRequest req{q.question, q.options, settings.mode, settings.compress, settings.seed ^ fnv1a64(q.id)};
    try {
      const auto trace = answer(kb, req, backend, guard, cfg);
      for (const auto& c : trace.retrieval.candidates) row.retrieved.push_back(c.chunk_id);
      row.prompt_tokens = trace.generation.prompt_tokens;
      row.ttft_ms = trace.generation.simulated_prefill_ms;
      row.tps = trace.generation.simulated_tps;
      row.reduction = trace.context.reduction;
      row.regime = trace.retrieval_enabled ? std::string(to_string(trace.context.regime)) : "none";
      row.pressure = trace.generation.pressure;
      if (!trace.generation.error.empty()) {
        row.failed = true;
        row.error = trace.generation.error;
      } else {
        const auto pick = parse_answer(trace.generation.text, q.options);
        row.predicted = pick.value_or(-1);
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    row.correct = !row.failed && row.predicted == q.answer_index;
    rep.n_correct += row.correct ? 1 : 0;
    rep.n_failed += row.failed ? 1 : 0;
    rep.mean_ttft_ms += row.ttft_ms;
    rep.mean_tps += row.tps;
    rep.mean_reduction += row.reduction;
    rep.rows.push_back(std::move(row));
  }
  if (!rep.rows.empty()) {
    const auto n = static_cast<double>(rep.rows.size());
    rep.mean_ttft_ms /= n;
    rep.mean_tps /= n;
    rep.mean_reduction /= n;
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const EvalRow& a, const EvalRow& b) { return a.id < b.id; });
  return rep;
}

}  // namespace prag
