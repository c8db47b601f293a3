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

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prag/binio.hpp"
#include "prag/config.hpp"
#include "prag/corpus_io.hpp"
#include "prag/errors.hpp"
#include "prag/eval.hpp"
#include "prag/pipeline.hpp"
#include "prag/synth.hpp"

namespace fs = std::filesystem;
using namespace prag;

namespace {

constexpr int kExitError = 1;
constexpr int kExitNoDocuments = 2;
constexpr int kExitRejected = 3;

struct Globals {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

EngineConfig load_config(const Globals& g) {
  std::string path = g.config_file;
  if (path.empty()) {
    if (const char* env = std::getenv("POCKETRAG_CONFIG")) path = env;
  }
  EngineConfig cfg = path.empty() ? EngineConfig{} : EngineConfig::load(path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const EngineConfig& cfg, const std::string& out_path) {
  const auto load = load_corpus_dir(cfg.paths.corpus_dir);
  for (const auto& e : load.errors) std::cerr << "unreadable: " << e << "\n";
  if (load.documents.empty()) {
    std::cout << "no documents found in " << cfg.paths.corpus_dir << "\n";
    return load.errors.empty() ? kExitNoDocuments : kExitError;
  }
  const auto chunks = build_corpus(load.documents, cfg.chunking);
  const fs::path out = out_path.empty() ? fs::path(cfg.paths.index_dir) / kChunksFile : fs::path(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  binio::write_text_file(out.string(), chunks_to_jsonl(chunks));

  std::size_t total = 0, lo = chunks.empty() ? 0 : chunks.front().token_count, hi = 0;
  for (const auto& c : chunks) {
    total += c.token_count;
    lo = std::min(lo, c.token_count);
    hi = std::max(hi, c.token_count);
  }
  std::cout << "documents: " << load.documents.size() << "\nchunks: " << chunks.size() << "\ntokens: " << total
            << " (min " << lo << ", mean "
            << fmt("%.1f", chunks.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(chunks.size()))
            << ", max " << hi << ")\nwrote " << out.string() << "\n";
  return load.errors.empty() ? 0 : kExitError;
}

int cmd_build_index(const EngineConfig& cfg, const std::string& chunks_path) {
  const fs::path in = chunks_path.empty() ? fs::path(cfg.paths.index_dir) / kChunksFile : fs::path(chunks_path);
  if (!fs::exists(in)) throw LookupError(in.string() + " not found; run `pocketrag ingest` first");
  auto chunks = load_chunks(in);
  auto guard = make_guard(cfg);
  auto outcome = build_knowledge_base(std::move(chunks), cfg, *guard);
  if (!outcome.admission) {
    auto ledger = guard->ledger();
    ledger.m_index += outcome.projected_index_bytes;
    ledger.components["index (projected)"] = outcome.projected_index_bytes;
    std::cout << "admission rejected: " << outcome.admission.message << "\n" << ledger.render();
    return kExitRejected;
  }
  save_knowledge_base(*outcome.kb, cfg.paths.index_dir);
  const auto& kb = *outcome.kb;
  std::cout << "chunks: " << kb.chunks.size() << "\nlexical entries: " << kb.lexical.entries().size()
            << " (postings " << kb.lexical.posting_count() << ", cap " << kb.lexical.entry_cap() << ")\n"
            << "vectors: " << kb.vectors.count() << " x " << kb.vectors.dim() << " int8 (" << kb.embedder->name()
            << ")\nwrote " << (fs::path(cfg.paths.index_dir) / kLexIndexFile).string() << ", "
            << (fs::path(cfg.paths.index_dir) / kVecIndexFile).string() << "\n"
            << guard->ledger().render();
  return 0;
}

struct AskOptions {
  std::string mode = "rag-rerank";
  bool no_compress = false;
  bool show_context = false;
};

void ask(const KnowledgeBase* kb, const std::string& question, const AskOptions& o, PipelineMode mode,
         GenerationBackend& backend, MemoryGuard& guard, const EngineConfig& cfg) {
  AnswerRequest req;
  req.question = question;
  req.mode = mode;
  req.compress = cfg.compression_enabled && !o.no_compress;
  req.seed = cfg.seed;
  std::cout << "answer: " << std::flush;
  const auto trace = answer(kb, req, backend, guard, cfg, [](std::string_view piece) { std::cout << piece << std::flush; });
  std::cout << "\n";
  if (o.show_context && !trace.context.empty()) std::cout << "context:\n" << trace.context.text() << "\n";
  if (trace.retrieval_enabled) {
    for (const auto& c : trace.retrieval.candidates) {
      const auto& ch = kb->chunks.at(c.chunk_id);
      std::cout << "  chunk " << c.chunk_id << " U=" << fmt("%.4f", c.hybrid) << " S_lex=" << fmt("%.3f", c.s_lex)
                << " cos=" << fmt("%.4f", c.cosine) << " page=" << ch.page_id << " section=\"" << ch.section_title
                << "\"\n";
    }
  }
  if (!trace.generation.error.empty()) std::cout << "backend error: " << trace.generation.error << "\n";
  std::cout << metrics_line(trace, mode) << "\n";
}

int cmd_query(const EngineConfig& cfg, const std::string& question, const AskOptions& o) {
  const auto mode = parse_pipeline_mode(o.mode);
  auto guard = make_guard(cfg);
  auto kb = mode == PipelineMode::vanilla ? nullptr : load_knowledge_base(cfg, guard.get());
  auto backend = make_backend(cfg);
  ask(kb.get(), question, o, mode, *backend, *guard, cfg);
  return 0;
}

int cmd_chat(const EngineConfig& cfg, const AskOptions& o) {
  const auto mode = parse_pipeline_mode(o.mode);
  auto guard = make_guard(cfg);
  auto kb = mode == PipelineMode::vanilla ? nullptr : load_knowledge_base(cfg, guard.get());
  auto backend = make_backend(cfg);
  std::cout << "pocketrag chat (" << to_string(mode) << "); empty line or 'quit' exits\n";
  for (std::string line;;) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    const auto q = trim(line);
    if (q.empty() || q == "quit" || q == "exit") break;
    try {
      ask(kb.get(), std::string(q), o, mode, *backend, *guard, cfg);
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

int cmd_eval(const EngineConfig& cfg, const std::string& dataset, const std::string& mode_name, bool no_compress,
             const std::string& out_dir) {
  EvalSettings s;
  s.mode = parse_pipeline_mode(mode_name);
  s.compress = cfg.compression_enabled && !no_compress;
  s.seed = cfg.seed;
  const auto questions = load_mcq(dataset);
  auto guard = make_guard(cfg);
  auto kb = s.mode == PipelineMode::vanilla ? nullptr : load_knowledge_base(cfg, guard.get());
  auto backend = make_backend(cfg, MockBackend::Mode::mcq_overlap);
  const auto report = run_eval(questions, kb.get(), s, *backend, *guard, cfg);

  fs::create_directories(out_dir);
  binio::write_text_file((fs::path(out_dir) / "report.csv").string(), report.to_csv());
  binio::write_text_file((fs::path(out_dir) / "summary.json").string(), report.summary_json());
  std::cout << "config: " << report.config << "\nquestions: " << report.n_questions << "\ncorrect: " << report.n_correct
            << "\nfailed: " << report.n_failed << "\naccuracy: " << report.accuracy_text()
            << (report.n_questions ? "%" : "") << "\nmean_ttft_ms: " << fmt("%.1f", report.mean_ttft_ms)
            << "\nmean_tps: " << fmt("%.2f", report.mean_tps)
            << "\nmean_reduction: " << fmt("%.1f%%", 100.0 * report.mean_reduction) << "\nwrote "
            << (fs::path(out_dir) / "report.csv").string() << ", " << (fs::path(out_dir) / "summary.json").string()
            << "\n";
  return 0;
}

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto t = std::string(trim(item));
    if (t.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(t, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != t.size() || v == 0) throw ConfigError(std::string(what) + ": expected positive integers, got '" + t + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

// Wall-clock prefill of `n` filler tokens through the configured backend.
double wall_prefill_ms(GenerationBackend& backend, std::size_t n, std::size_t block, const EngineConfig& cfg) {
  Prompt p;
  p.tokens.assign(n, "token");
  KvStore kv(cfg.engine.kv_precision, 2, 64);
  const auto t0 = std::chrono::steady_clock::now();
  backend.start(p, cfg.seed);
  for (const auto& b : plan_prefill(n, block).blocks) {
    backend.prefill(std::span<const std::string>(p.tokens).subspan(b.start, b.len), kv);
  }
  backend.decode_step(kv);
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_bench(EngineConfig cfg, const std::string& blocks_s, const std::string& lengths_s, double compression,
              const std::vector<double>& calibrate, const std::string& out_path) {
  if (compression < 0.0 || compression >= 1.0) throw ConfigError("--compression must be in [0, 1)");
  if (!calibrate.empty()) {
    if (calibrate.size() != 2) throw ConfigError("--calibrate expects SEQUENTIAL_MS,BATCHED_MS");
    cfg.latency = LatencyModel::calibrate(LatencyModel::kPresetContextTokens, calibrate[0], calibrate[1],
                                          LatencyModel::kPresetBlockSize, cfg.latency.decode_ms_per_token);
  }
  const auto& m = cfg.latency;
  const auto blocks = parse_list(blocks_s, "--blocks");
  const auto lengths = parse_list(lengths_s, "--context-lengths");
  std::unique_ptr<GenerationBackend> wall;
  if (cfg.engine.backend == "external") wall = make_backend(cfg);

  std::ostringstream csv;
  csv << "config,context_tokens,block_size,ttft_ms,tps,speedup,wall_prefill_ms\n";
  const double tps = 1000.0 / m.decode_ms_per_token;
  auto row = [&](const std::string& name, std::size_t L, std::size_t B, double base) {
    const double t = simulate_prefill(L, B, m);
    std::string wall_ms;
    if (wall) wall_ms = fmt("%.3f", wall_prefill_ms(*wall, L, B, cfg));
    csv << name << ',' << L << ',' << B << ',' << fmt("%.3f", t) << ',' << fmt("%.3f", tps) << ','
        << fmt("%.4f", base / t) << ',' << wall_ms << '\n';
  };

  // Sequential baseline, batched prefill, then batching plus compressed context.
  const std::size_t L0 = LatencyModel::kPresetContextTokens;
  const std::size_t B0 = cfg.engine.block_size;
  const double base0 = simulate_prefill(L0, 1, m);
  const auto Lc = static_cast<std::size_t>(std::lround(static_cast<double>(L0) * (1.0 - compression)));
  row("baseline", L0, 1, base0);
  row("batching", L0, B0, base0);
  row("final", Lc, B0, base0);
  for (auto L : lengths) {
    const double base = simulate_prefill(L, 1, m);
    for (auto B : blocks) row("grid", L, B, base);
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    binio::write_text_file(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
  }
  std::cout << "latency model: t_fixed_ms=" << fmt("%.6f", m.t_fixed_ms) << " t_per_token_ms=" << fmt("%.6f", m.t_per_token_ms)
            << " decode_ms_per_token=" << fmt("%.6f", m.decode_ms_per_token) << "\n";
  return 0;
}

std::string header_of(const fs::path& p) {
  const auto bytes = binio::read_file(p.string());
  binio::Reader r(bytes, p.filename().string());
  const auto magic = r.str(4);
  const auto version = r.u16();
  std::ostringstream os;
  os << "magic=" << magic << " version=" << version;
  if (magic == "PRVX") {
    const auto dim = r.u16();
    os << " dim=" << dim << " count=" << r.u32();
  } else {
    os << " entries=" << r.u32();
  }
  os << " bytes=" << bytes.size();
  return os.str();
}

int cmd_inspect(const EngineConfig& cfg) {
  const fs::path dir = cfg.paths.index_dir;
  auto guard = make_guard(cfg);
  auto kb = load_knowledge_base(cfg, guard.get());
  std::cout << "index dir: " << dir.string() << "\n"
            << kLexIndexFile << ": " << header_of(dir / kLexIndexFile) << " chunk_count=" << kb->lexical.chunk_count()
            << " entry_cap=" << kb->lexical.entry_cap() << " postings=" << kb->lexical.posting_count() << "\n"
            << kVecIndexFile << ": " << header_of(dir / kVecIndexFile) << "\n"
            << kChunksFile << ": chunks=" << kb->chunks.size() << "\n"
            << "embedder: " << kb->embedder->name() << " dim=" << kb->embedder->dim() << "\n"
            << guard->ledger().render() << "pressure: " << guard->snapshot().metrics_line() << "\n";
  return 0;
}

int cmd_synth(const EngineConfig& cfg, const std::string& corpus_dir, const std::string& dataset, std::size_t n) {
  SyntheticOptions o;
  o.n_questions = n;
  o.seed = cfg.seed;
  o.chunking = cfg.chunking;
  const auto data = make_synthetic(o, load_lexicon(cfg));
  write_synthetic_corpus(data, corpus_dir);
  const fs::path ds(dataset);
  if (ds.has_parent_path()) fs::create_directories(ds.parent_path());
  binio::write_text_file(dataset, mcq_to_jsonl(data.questions));
  std::cout << "documents: " << data.documents.size() << " -> " << corpus_dir << "\nquestions: " << data.questions.size()
            << " -> " << dataset << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pocketrag: offline retrieval-augmented QA engine"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config-file", g.config_file, "Engine config file (fallback: $POCKETRAG_CONFIG)");
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set retrieval.alpha=0.5");
  app.add_option("--seed", g.seed, "Seed for all stochastic behavior");
  std::string corpus_dir, index_dir;
  app.add_option("--corpus", corpus_dir, "Corpus directory (paths.corpus_dir)");
  app.add_option("--index-dir", index_dir, "Index directory (paths.index_dir)");

  std::string out_path;
  auto* ingest = app.add_subcommand("ingest", "Normalize and chunk a corpus directory into chunks.jsonl");
  ingest->add_option("--out", out_path, "Output file (default: <index_dir>/chunks.jsonl)");

  std::string chunks_path;
  std::uint64_t budget = 0;
  auto* build = app.add_subcommand("build-index", "Build the lexical and INT8 vector indices");
  build->add_option("--chunks", chunks_path, "chunks.jsonl (default: <index_dir>/chunks.jsonl)");
  build->add_option("--budget", budget, "Memory budget in bytes (memory.budget_bytes)");

  AskOptions ask_opts;
  std::string question;
  auto* query = app.add_subcommand("query", "Answer one question");
  query->add_option("question", question, "Question text")->required();
  auto* chat = app.add_subcommand("chat", "Interactive question answering on stdin");
  for (auto* sc : {query, chat}) {
    sc->add_option("--config", ask_opts.mode, "Pipeline: vanilla|rag|rag-rerank");
    sc->add_flag("--no-compress", ask_opts.no_compress, "Disable context compression");
    sc->add_flag("--show-context", ask_opts.show_context, "Print the compressed context");
  }

  std::string dataset, eval_mode = "rag-rerank", eval_out = "eval_out";
  bool eval_no_compress = false;
  auto* eval = app.add_subcommand("eval", "Run an MCQ dataset through the pipeline");
  eval->add_option("--dataset", dataset, "MCQ JSONL file")->required();
  eval->add_option("--config", eval_mode, "Pipeline: vanilla|rag|rag-rerank");
  eval->add_flag("--no-compress", eval_no_compress, "Disable context compression");
  eval->add_option("--out-dir", eval_out, "Directory for report.csv and summary.json");

  std::string blocks = "1,64,128,256,512", lengths = "512,1024,2048,4096", bench_out;
  double compression = 0.30;
  std::vector<double> calibrate;
  auto* bench = app.add_subcommand("bench", "Prefill latency model sweep as CSV");
  bench->add_option("--blocks", blocks, "Comma-separated block sizes");
  bench->add_option("--context-lengths", lengths, "Comma-separated context lengths");
  bench->add_option("--compression", compression, "Context reduction applied in the 'final' row");
  bench->add_option("--calibrate", calibrate, "SEQUENTIAL_MS,BATCHED_MS at 2048 tokens, B=512")->delimiter(',');
  bench->add_option("--out", bench_out, "CSV output file (default: stdout)");

  app.add_subcommand("inspect", "Dump index headers and the memory ledger");

  std::string synth_corpus = "synthetic/corpus", synth_dataset = "synthetic/mcq.jsonl";
  std::size_t synth_n = 400;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus and MCQ dataset");
  synth->add_option("--out-corpus", synth_corpus, "Corpus directory to write");
  synth->add_option("--out-dataset", synth_dataset, "MCQ JSONL file to write");
  synth->add_option("--questions", synth_n, "Number of questions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    std::cout << "STATUS: " << (rc == 0 ? "ok" : "error") << std::endl;
    return rc;
  }

  int rc = 0;
  try {
    auto cfg = load_config(g);
    if (!corpus_dir.empty()) cfg.paths.corpus_dir = corpus_dir;
    if (!index_dir.empty()) cfg.paths.index_dir = index_dir;
    if (budget > 0) cfg.memory.budget_bytes = budget;

    if (*ingest) rc = cmd_ingest(cfg, out_path);
    else if (*build) rc = cmd_build_index(cfg, chunks_path);
    else if (*query) rc = cmd_query(cfg, question, ask_opts);
    else if (*chat) rc = cmd_chat(cfg, ask_opts);
    else if (*eval) rc = cmd_eval(cfg, dataset, eval_mode, eval_no_compress, eval_out);
    else if (*bench) rc = cmd_bench(cfg, blocks, lengths, compression, calibrate, bench_out);
    else if (*synth) rc = cmd_synth(cfg, synth_corpus, synth_dataset, synth_n);
    else rc = cmd_inspect(cfg);
  } catch (const std::exception& e) {
    std::cout << std::flush;
    std::cerr << "error: " << e.what() << "\n";
    rc = kExitError;
  }
  std::cout << "STATUS: " << (rc == 0 ? "ok" : "error") << std::endl;
  return rc;
}
