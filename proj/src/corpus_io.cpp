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

#include "prag/corpus_io.hpp"

#include <algorithm>
#include <json.hpp>

#include "prag/binio.hpp"
#include "prag/errors.hpp"

namespace prag {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

CorpusLoad load_corpus_dir(const fs::path& dir) {
  CorpusLoad out;
  if (!fs::is_directory(dir)) {
    out.errors.push_back(dir.string() + ": not a directory");
    return out;
  }

  nlohmann::json manifest = nlohmann::json::object();
  const auto manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    try {
      manifest = nlohmann::json::parse(binio::read_text_file(manifest_path.string()));
      if (!manifest.is_object()) throw FormatError("top level must be an object");
    } catch (const std::exception& e) {
      out.errors.push_back("manifest.json: " + std::string(e.what()));
      return out;
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".txt" || ext == ".md") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto& f : files) {
    const auto name = f.filename().string();
    try {
      RawDocument doc;
      doc.doc_id = name;
      doc.source_name = name;
      doc.body = binio::read_text_file(f.string());
      if (!is_valid_utf8(doc.body)) throw FormatError("invalid UTF-8");
      if (manifest.contains(name)) {
        const auto& m = manifest.at(name);
        if (m.contains("domain_tag")) doc.domain_tag = parse_domain_tag(m.at("domain_tag").get<std::string>());
        if (m.contains("source_name")) doc.source_name = m.at("source_name").get<std::string>();
      }
      out.documents.push_back(std::move(doc));
    } catch (const std::exception& e) {
      out.errors.push_back(name + ": " + e.what());
    }
  }
  return out;
}

std::string chunks_to_jsonl(std::span<const Chunk> chunks) {
  std::string out;
  for (const auto& c : chunks) {
    ojson j;
    j["chunk_id"] = c.chunk_id;
    j["text"] = c.text;
    j["section_title"] = c.section_title;
    j["page_id"] = c.page_id;
    j["domain_tag"] = std::string(to_string(c.domain_tag));
    j["token_count"] = c.token_count;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Chunk> chunks_from_jsonl(std::string_view jsonl, const Tokenizer& tokenizer) {
  std::vector<Chunk> chunks;
  std::size_t line_no = 0;
  for (auto line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Chunk c;
      c.chunk_id = j.at("chunk_id").get<std::uint32_t>();
      c.text = j.at("text").get<std::string>();
      c.section_title = j.value("section_title", std::string{});
      c.page_id = j.value("page_id", 0u);
      c.domain_tag = parse_domain_tag(j.value("domain_tag", std::string{"general"}));
      c.tokens = tokenizer.tokenize(c.text);
      c.token_count = c.tokens.size();
      if (c.chunk_id != chunks.size()) throw FormatError("chunk ids must be dense and ascending");
      chunks.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw FormatError("chunks.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return chunks;
}

std::vector<Chunk> load_chunks(const fs::path& path) {
  return chunks_from_jsonl(binio::read_text_file(path.string()));
}

}  // namespace prag
