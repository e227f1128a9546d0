#include "ragmat/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ragmat/config.hpp"
#include "ragmat/corpus.hpp"
#include "ragmat/embedder.hpp"
#include "ragmat/error.hpp"
#include "ragmat/pipeline.hpp"
#include "ragmat/ratings.hpp"
#include "ragmat/report.hpp"
#include "ragmat/review_service.hpp"
#include "ragmat/stats.hpp"
#include "ragmat/textmetrics.hpp"
#include "ragmat/util.hpp"
#include "ragmat/vectorstore.hpp"

namespace ragmat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags that mirror AppConfig keys. Only flags actually given on the command
// line override the file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_file;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  config::AppConfig config;
  std::string command;
  std::string started_at;
};

template <typename T>
std::string to_text(const T& v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

config::AppConfig resolve(const Overrides& o) {
  config::AppConfig c;
  if (!o.config_file.empty()) c = config::load(o.config_file);
  c = config::apply(std::move(c), o.values);
  config::validate(c);
  return c;
}

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string config_hash(const config::AppConfig& c) { return sha256_hex(config::to_json(c).dump()); }

void manifest(const Context& ctx, const fs::path& output, const std::string& run_id,
              const fs::path& input) {
  config::write_manifest(output, {run_id, ctx.command, config_hash(ctx.config),
                                  config::hash_inputs(input), ctx.started_at, utc_timestamp(),
                                  config::version()});
}

std::string embedding_model_id(const config::AppConfig& c) {
  constexpr std::string_view kMock = "mock://";
  if (c.embedding_base_url.rfind(kMock, 0) == 0) {
    const auto rest = c.embedding_base_url.substr(kMock.size());
    return embedder::mock_model_id(rest.empty() ? embedder::kDefaultMockDim : std::stoul(rest));
  }
  return c.embedding_model;
}

std::unique_ptr<embedder::Embedder> make_embedder(const config::AppConfig& c,
                                                  std::shared_ptr<RequestBudget> budget) {
  auto endpoint = config::embedding_endpoint(c);
  std::shared_ptr<embedder::EmbeddingCache> cache =
      c.cache_dir.empty() ? std::make_shared<embedder::EmbeddingCache>()
                          : std::make_shared<embedder::EmbeddingCache>(fs::path(c.cache_dir) / "embeddings");
  return std::make_unique<embedder::Embedder>(embedder::make_backend(endpoint, std::move(budget)),
                                              embedding_model_id(c), std::move(cache));
}

json hit_json(const vectorstore::SectionHit& h) {
  return {{"doc_id", h.section.doc_id},
          {"section_id", h.section.section_id},
          {"title", h.section.title},
          {"heading", h.section.heading},
          {"url", h.section.url ? json(*h.section.url) : json(nullptr)},
          {"source_kind", std::string(corpus::to_string(h.section.source_kind))},
          {"distance", h.distance},
          {"best_chunk_id", h.best_chunk_id},
          {"body", h.section.body}};
}

// --- subcommands -------------------------------------------------------------

struct IngestArgs {
  std::string corpus;
  std::string out;
};

int cmd_ingest(Context& ctx, const IngestArgs& a) {
  const fs::path corpus_dir = a.corpus.empty() ? fs::path(ctx.config.corpus_path) : fs::path(a.corpus);
  const auto sections = corpus::parse_corpus(corpus_dir);
  const auto chunks = corpus::chunk_corpus(sections, ctx.config.chunk_size);
  std::map<corpus::SectionKey, const corpus::DocumentSection*> parents;
  for (const auto& s : sections) parents[{s.doc_id, s.section_id}] = &s;
  std::string body;
  for (const auto& c : chunks) {
    body += corpus::chunk_record(c, *parents.at(c.parent)).dump() + "\n";
  }
  write_file_atomic(a.out, body);
  manifest(ctx, a.out, "", corpus_dir);
  const auto st = corpus::corpus_stats(sections, chunks);
  ctx.out << json{{"files", st.file_count}, {"sections", st.section_count}, {"chunks", st.chunk_count},
                  {"out", a.out}}
                 .dump()
          << "\n";
  return kExitOk;
}

struct IndexArgs {
  std::string chunks;
  std::string out;
};

int cmd_index(Context& ctx, const IndexArgs& a) {
  const fs::path out = a.out.empty() ? fs::path(ctx.config.index_path) : fs::path(a.out);
  std::vector<corpus::ChunkRecord> records;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(a.chunks)) {
    ++line_no;
    try {
      records.push_back(corpus::parse_chunk_record(json::parse(line)));
    } catch (const json::exception& e) {
      throw IndexFormatError("chunks line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  auto sections = corpus::reassemble_sections(records);
  auto budget = std::make_shared<RequestBudget>(static_cast<std::ptrdiff_t>(ctx.config.max_in_flight));
  auto emb = make_embedder(ctx.config, budget);
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.chunk.text);
  auto vectors = emb->embed(texts);
  std::vector<vectorstore::EmbeddedChunk> items;
  for (std::size_t i = 0; i < records.size(); ++i) items.push_back({records[i].chunk, std::move(vectors[i])});
  const auto index = vectorstore::build_index(std::move(sections), std::move(items), out);
  manifest(ctx, out / "index.json", "", a.chunks);
  ctx.out << json{{"chunks", index.size()}, {"dim", index.dim()}, {"model_id", index.model_id()},
                  {"out", out.string()}}
                 .dump()
          << "\n";
  return kExitOk;
}

struct QueryArgs {
  std::string index;
  std::string text;
};

int cmd_query(Context& ctx, const QueryArgs& a) {
  const fs::path dir = a.index.empty() ? fs::path(ctx.config.index_path) : fs::path(a.index);
  const auto index = vectorstore::Index::load(dir);
  auto emb = make_embedder(ctx.config, std::make_shared<RequestBudget>(
                                           static_cast<std::ptrdiff_t>(ctx.config.max_in_flight)));
  const auto q = emb->embed_one(a.text);
  for (const auto& h : index.search(q, ctx.config.k, ctx.config.max_distance)) {
    ctx.out << hit_json(h).dump() << "\n";
  }
  return kExitOk;
}

struct RunArgs {
  std::string profiles;
  std::string configs;
  std::string index;
  std::string out;
  std::string run_id;
};


int cmd_run(Context& ctx, const RunArgs& a) {
  const auto profiles = pipeline::load_profiles(a.profiles);
  auto configs = pipeline::load_configs(a.configs);
  // Config-file defaults apply to configs that omit the knob.
  const auto raw = json::parse(read_file(a.configs));
  for (std::size_t i = 0; i < configs.size() && i < raw.size(); ++i) {
    if (!raw[i].contains("k")) configs[i].k = ctx.config.k;
    if (!raw[i].contains("max_distance")) configs[i].max_distance = ctx.config.max_distance;
    if (!raw[i].contains("temperature")) configs[i].temperature = ctx.config.temperature;
  }
  const bool needs_index = std::any_of(configs.begin(), configs.end(), [](const auto& c) {
    return c.mode != pipeline::Mode::NRAG;
  });

  auto budget = std::make_shared<RequestBudget>(static_cast<std::ptrdiff_t>(ctx.config.max_in_flight));
  std::optional<vectorstore::Index> index;
  std::unique_ptr<embedder::Embedder> emb;
  if (needs_index) {
    const fs::path dir = a.index.empty() ? fs::path(ctx.config.index_path) : fs::path(a.index);
    index = vectorstore::Index::load(dir);
    emb = make_embedder(ctx.config, budget);
  }
  auto chat = pipeline::make_chat_backend(config::chat_endpoint(ctx.config), budget);

  pipeline::RunOptions options;
  if (!a.run_id.empty()) options.run_id = a.run_id;
  options.parallelism = ctx.config.max_in_flight;
  if (!ctx.config.system_prompt_file.empty()) {
    options.system_prompt = trim(read_file(ctx.config.system_prompt_file));
  }
  const fs::path out = a.out.empty() ? fs::path(ctx.config.runs_path) / "run.jsonl" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  const auto result = pipeline::run_experiment(profiles, configs, index ? &*index : nullptr, emb.get(),
                                               *chat, out, options);
  manifest(ctx, out, result.run_id, a.profiles);
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"profile_id", f.profile_id}, {"config_label", f.config_label}, {"error", f.error}});
  }
  ctx.out << json{{"run_id", result.run_id},     {"out", out.string()},
                  {"generated", result.generated}, {"skipped", result.skipped},
                  {"records", result.records.size()}, {"failures", failures}}
                 .dump()
          << "\n";
  return kExitOk;
}

struct ReadabilityArgs {
  std::string in;
  std::string out;
};

int cmd_readability(Context& ctx, const ReadabilityArgs& a) {
  std::vector<textmetrics::ReadabilityRow> rows;
  json skipped = json::array();
  for (const auto& m : pipeline::load_run(a.in)) {
    try {
      const auto r = textmetrics::analyze(m.text);
      rows.push_back({m.config_label, m.profile_id, r.fres, r.grade_label, r.counts});
    } catch (const DegenerateText& e) {
      skipped.push_back({{"profile_id", m.profile_id}, {"config_label", m.config_label}, {"error", e.what()}});
    }
  }
  write_file_atomic(a.out, textmetrics::to_csv(rows));
  manifest(ctx, a.out, "", a.in);
  ctx.out << json{{"rows", rows.size()}, {"skipped", skipped}, {"out", a.out}}.dump() << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string run;
  std::string include;
  std::string bind = "127.0.0.1:8080";
  std::string store;
  std::string ui_dir;
};

int cmd_serve(Context& ctx, const ServeArgs& a) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind expects host:port");
  const std::string host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--bind expects host:port");
  }
  const fs::path store_path = a.store.empty() ? fs::path(ctx.config.scores_path) : fs::path(a.store);
  if (store_path.has_parent_path()) fs::create_directories(store_path.parent_path());
  auto store = std::make_shared<ratings::ScoreStore>(store_path);
  ratings::ReviewService service(pipeline::load_run(a.run), split_labels(a.include), store);
  ctx.err << json{{"event", "listening"}, {"host", host}, {"port", port}, {"run_hash", service.run_hash()}}
                 .dump()
          << "\n";
  std::optional<fs::path> ui;
  if (!a.ui_dir.empty()) ui = a.ui_dir;
  ratings::serve_review(host, port, service, ui);
  return kExitOk;
}

struct ExportArgs {
  std::string out;
  std::string store;
};

int cmd_scores_export(Context& ctx, const ExportArgs& a) {
  const fs::path store_path = a.store.empty() ? fs::path(ctx.config.scores_path) : fs::path(a.store);
  if (!fs::exists(store_path)) throw std::runtime_error("score store not found: " + store_path.string());
  ratings::ScoreStore store(store_path);
  ratings::export_scores(store, a.out);
  manifest(ctx, a.out, "", store_path);
  ctx.out << json{{"records", store.size()}, {"out", a.out}}.dump() << "\n";
  return kExitOk;
}

struct StatsArgs {
  std::string scores;
  std::string readability;
  std::string include;
  std::string out;
};

struct Analysis {
  report::Reports reports;
  json ttests;
};

Analysis analyze_inputs(const StatsArgs& a) {
  auto records = ratings::import_scores(a.scores);
  std::vector<textmetrics::ReadabilityRow> rows;
  if (!a.readability.empty()) rows = textmetrics::parse_readability_csv(read_file(a.readability));

  const auto include = split_labels(a.include);
  if (!include.empty()) {
    const std::set<std::string> keep(include.begin(), include.end());
    std::set<std::string> present;
    for (const auto& r : records) present.insert(r.config_label);
    for (const auto& l : include) {
      if (!present.count(l)) throw UnknownConfigLabel("no scores for config label " + l);
    }
    std::erase_if(records, [&](const auto& r) { return !keep.count(r.config_label); });
    std::erase_if(rows, [&](const auto& r) { return !keep.count(r.config_label); });
  }

  const auto summaries = stats::summarize(records);
  std::map<stats::Category, stats::AnovaResult> anovas;
  std::optional<std::string> anova_notice;
  try {
    anovas = stats::anova_by_category(records);
  } catch (const InsufficientData& e) {
    anova_notice = std::string("ANOVA not computable: ") + e.what();
  }
  Analysis out{report::render_reports(summaries, rows, anovas, stats::icc_by_category(records)),
               json::array()};
  if (anova_notice) {
    out.reports.notices.push_back(*anova_notice);
    out.reports.markdown += "- " + *anova_notice + "\n";
  }
  for (const auto& c : report::compare_ragfs_nrag(rows)) {
    out.ttests.push_back({{"model", c.model},
                          {"a", c.label_a},
                          {"b", c.label_b},
                          {"t", c.result.t},
                          {"df", c.result.df},
                          {"p_value", c.result.p}});
  }
  return out;
}

int cmd_stats(Context& ctx, const StatsArgs& a) {
  const auto analysis = analyze_inputs(a);
  const auto& r = analysis.reports;
  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, std::string>> files = {
      {dir / "table2.csv", r.table2_csv},
      {dir / "anova.json", r.anova.dump(2) + "\n"},
      {dir / "icc.json", r.icc.dump(2) + "\n"},
      {dir / "radar.json", r.radar.dump(2) + "\n"},
      {dir / "ttests.json", analysis.ttests.dump(2) + "\n"},
      {dir / "report.md", r.markdown},
  };
  if (r.table3_csv) files.emplace_back(dir / "table3.csv", *r.table3_csv);
  for (const auto& [path, body] : files) {
    write_file_atomic(path, body);
    manifest(ctx, path, "", a.scores);
  }
  json written = json::array();
  for (const auto& f : files) written.push_back(f.first.filename().string());
  ctx.out << json{{"out", dir.string()}, {"files", written}, {"notices", r.notices}}.dump() << "\n";
  return kExitOk;
}

int cmd_report(Context& ctx, const StatsArgs& a) {
  const auto analysis = analyze_inputs(a);
  if (a.out.empty()) {
    ctx.out << analysis.reports.markdown;
  } else {
    write_file_atomic(a.out, analysis.reports.markdown);
    manifest(ctx, a.out, "", a.scores);
  }
  return kExitOk;
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ragmat: retrieval-augmented patient education pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", config::version());

  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config_file, "INI-style configuration file")->check(CLI::ExistingFile);
  };
  // Options that override AppConfig keys when present.
  auto add_override = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                          const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.values[key] = v; }, help);
  };

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse and chunk an XML corpus");
  add_common(ingest);
  ingest->add_option("--corpus", ingest_args.corpus, "Corpus directory")->check(CLI::ExistingDirectory);
  add_override(ingest, "--chunk-size", "chunk_size", "Chunk size in characters");
  ingest->add_option("--out", ingest_args.out, "Output chunks.jsonl")->required();

  IndexArgs index_args;
  auto* index = app.add_subcommand("index", "Embed chunks and build a vector index");
  add_common(index);
  index->add_option("--chunks", index_args.chunks, "chunks.jsonl from ingest")->required()->check(CLI::ExistingFile);
  index->add_option("--out", index_args.out, "Index directory");

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "Search an index");
  add_common(query);
  query->add_option("--index", query_args.index, "Index directory")->check(CLI::ExistingDirectory);
  query->add_option("--text", query_args.text, "Query text")->required();
  add_override(query, "--k", "k", "Maximum sections returned");
  add_override(query, "--max-distance", "max_distance", "Cosine distance cutoff");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Generate materials for profiles x configs");
  add_common(run);
  run->add_option("--profiles", run_args.profiles, "Profiles JSON array")->required()->check(CLI::ExistingFile);
  run->add_option("--configs", run_args.configs, "Generation configs JSON array")->required()->check(CLI::ExistingFile);
  run->add_option("--index", run_args.index, "Index directory");
  run->add_option("--out", run_args.out, "Output run.jsonl");
  run->add_option("--run-id", run_args.run_id, "Run identifier for a fresh run");

  ReadabilityArgs read_args;
  auto* readability = app.add_subcommand("readability", "Score generated materials");
  add_common(readability);
  readability->add_option("--in", read_args.in, "run.jsonl")->required()->check(CLI::ExistingFile);
  readability->add_option("--out", read_args.out, "Output readability.csv")->required();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve-review", "Serve the blinded review API");
  add_common(serve);
  serve->add_option("--run", serve_args.run, "run.jsonl")->required()->check(CLI::ExistingFile);
  serve->add_option("--include", serve_args.include, "Comma-separated config labels")->required();
  serve->add_option("--bind", serve_args.bind, "host:port")->capture_default_str();
  serve->add_option("--store", serve_args.store, "Score journal (JSONL)");
  serve->add_option("--ui-dir", serve_args.ui_dir, "Static UI bundle directory");

  ExportArgs export_args;
  auto* scores = app.add_subcommand("scores", "Score store operations");
  scores->require_subcommand(1);
  auto* scores_export = scores->add_subcommand("export", "Export scores as CSV");
  add_common(scores_export);
  scores_export->add_option("--out", export_args.out, "Output CSV")->required();
  scores_export->add_option("--store", export_args.store, "Score journal (JSONL)");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Descriptive and inferential statistics");
  add_common(stats_cmd);
  stats_cmd->add_option("--scores", stats_args.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--readability", stats_args.readability, "Readability CSV")->check(CLI::ExistingFile);
  stats_cmd->add_option("--include", stats_args.include, "Comma-separated config labels");
  stats_cmd->add_option("--out", stats_args.out, "Output directory")->required();

  StatsArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Render the markdown report");
  add_common(report_cmd);
  report_cmd->add_option("--scores", report_args.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--readability", report_args.readability, "Readability CSV")->check(CLI::ExistingFile);
  report_cmd->add_option("--include", report_args.include, "Comma-separated config labels");
  report_cmd->add_option("--out", report_args.out, "Output markdown file (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? config::version() + "\n"
                                                           : app.help());
      return kExitOk;
    }
    err << error_json("UsageError", e.what()).dump() << "\n";
    return kExitUsage;
  }

  try {
    Context ctx{out, err, resolve(ov), "", utc_timestamp()};
    ctx.command = app.get_subcommands().front()->get_name();
    if (ingest->parsed()) return cmd_ingest(ctx, ingest_args);
    if (index->parsed()) return cmd_index(ctx, index_args);
    if (query->parsed()) return cmd_query(ctx, query_args);
    if (run->parsed()) return cmd_run(ctx, run_args);
    if (readability->parsed()) return cmd_readability(ctx, read_args);
    if (serve->parsed()) return cmd_serve(ctx, serve_args);
    if (scores_export->parsed()) {
      ctx.command = "scores export";
      return cmd_scores_export(ctx, export_args);
    }
    if (stats_cmd->parsed()) return cmd_stats(ctx, stats_args);
    if (report_cmd->parsed()) return cmd_report(ctx, report_args);
    err << error_json("UsageError", "no subcommand").dump() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << json{{"error", "ConfigError"}, {"message", e.what()}, {"fields", e.fields()}}.dump() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    err << error_json("UsageError", e.what()).dump() << "\n";
    return kExitUsage;
  } catch (const EndpointError& e) {
    err << json{{"error", "EndpointError"}, {"message", e.what()}, {"status", e.status()},
                {"attempts", e.attempts()}}
                   .dump()
            << "\n";
    return kExitRuntime;
  } catch (const Error& e) {
    err << error_json(e.kind(), e.what()).dump() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << error_json("RuntimeError", e.what()).dump() << "\n";
    return kExitRuntime;
  }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace ragmat::cli
