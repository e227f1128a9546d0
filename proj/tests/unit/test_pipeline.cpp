#include <catch_amalgamated.hpp>

#include <atomic>
#include <fstream>

#include "fixtures.hpp"
#include "mock_http.hpp"
#include "ragmat/corpus.hpp"
#include "ragmat/error.hpp"
#include "ragmat/pipeline.hpp"
#include "ragmat/util.hpp"

using namespace ragmat;
using namespace ragmat::pipeline;
using namespace std::chrono_literals;

namespace {

const std::string kInstructionText =
    "please create patient education materials written at a 6th-grade level Flesch-Kincaid Grade Level";

PatientProfile profile() { return load_profiles(testing::fixture_path("profiles.json")).front(); }

PatientProfile profile(const std::string& id) {
  return {id, "Nurse", "High", "Yoga",
          {{"exercise", "a"}, {"desk_posture", "b"}, {"lifting_technique", "c"}, {"physical_therapists", "d"},
           {"injections", "e"}, {"imaging", "f"}, {"bed_rest", "g"}}};
}

std::vector<vectorstore::SectionHit> hits(std::size_t n) {
  std::vector<vectorstore::SectionHit> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({{"doc", corpus::SourceKind::medlineplus, "Back pain", std::nullopt, "s" + std::to_string(i),
                    "Heading " + std::to_string(i), "Body number " + std::to_string(i) + "."},
                   0.1 * static_cast<double>(i),
                   "doc#s" + std::to_string(i) + "#0"});
  }
  return out;
}

std::vector<FewShotExample> table1_fixture() {
  const auto j = nlohmann::json::parse(read_file(testing::fixture_path("table1_examples.json")));
  std::vector<FewShotExample> out;
  for (const auto& e : j) out.push_back({e.at("prompt"), e.at("output")});
  return out;
}

std::size_t count_role(const nlohmann::json& request, const std::string& role) {
  std::size_t n = 0;
  for (const auto& m : request.at("messages")) n += m.at("role") == role;
  return n;
}

class CountingEcho final : public ChatBackend {
 public:
  ChatCompletion complete(const nlohmann::json& request) override {
    ++calls;
    return echo.complete(request);
  }
  EchoChatBackend echo;
  std::atomic<int> calls{0};
};

class FailingFor final : public ChatBackend {
 public:
  explicit FailingFor(std::string needle) : needle_(std::move(needle)) {}
  ChatCompletion complete(const nlohmann::json& request) override {
    if (request.at("model").get<std::string>() == needle_) throw EmptyCompletion("no content");
    return EchoChatBackend().complete(request);
  }

 private:
  std::string needle_;
};

}  // namespace

TEST_CASE("modes and labels") {
  CHECK(parse_mode("RAGFS") == Mode::RAGFS);
  CHECK(parse_mode("NRAG") == Mode::NRAG);
  CHECK_FALSE(parse_mode("rag").has_value());
  CHECK(default_label("gpt-4o", Mode::RAGFS) == "GPT-4O_RAGFS");
  CHECK(default_label("gpt-3.5-turbo", Mode::RAGNFS) == "GPT-3.5-TURBO_RAGNFS");
}

TEST_CASE("profiles require every belief key and unique ids") {
  auto j = to_json(profile("x"));
  CHECK(profile_from_json(j).profile_id == "x");
  j["beliefs"].erase("imaging");
  CHECK_THROWS_AS(profile_from_json(j), std::invalid_argument);

  testing::TempDir dir;
  const auto p = to_json(profile("dup"));
  write_file_atomic(dir / "p.json", nlohmann::json::array({p, p}).dump());
  CHECK_THROWS_AS(load_profiles(dir / "p.json"), std::invalid_argument);
  CHECK(load_profiles(testing::fixture_path("profiles.json")).size() == 3);
}

TEST_CASE("configs parse with defaults and reject duplicate labels") {
  const auto c = config_from_json({{"model_id", "gpt-4"}, {"mode", "NRAG"}});
  CHECK(c.label == "GPT-4_NRAG");
  CHECK(c.k == 7);
  CHECK(c.max_distance == 0.40);
  CHECK(c.temperature == 0.0);
  CHECK_THROWS_AS(config_from_json({{"model_id", "gpt-4"}, {"mode", "FS"}}), std::invalid_argument);

  testing::TempDir dir;
  write_file_atomic(dir / "c.json", R"([{"model_id":"a","mode":"NRAG"},{"model_id":"a","mode":"NRAG"}])");
  CHECK_THROWS_AS(load_configs(dir / "c.json"), std::invalid_argument);
}

TEST_CASE("stored few-shot examples match the fixture byte for byte") {
  const auto& stored = default_few_shot_examples();
  const auto fixture = table1_fixture();
  REQUIRE(stored.size() == 2);
  CHECK(stored == fixture);
  CHECK(stored[0].output.rfind("**Safe Lifting Tips:**", 0) == 0);
  CHECK(stored[1].output.rfind("**Ergonomic Desk Setup Tips:**", 0) == 0);
}

TEST_CASE("assemble_prompt per mode") {
  const auto p = profile();
  SECTION("RAGFS with 7 hits") {
    const auto b = assemble_prompt(p, hits(7), Mode::RAGFS);
    CHECK(b.few_shot_examples == table1_fixture());
    REQUIRE(b.retrieved_context.size() == 7);
    CHECK(b.retrieved_context[0].body == "Body number 0.");
    CHECK(b.retrieved_context[6].source == "Back pain: Heading 6");
  }
  SECTION("RAGNFS with 3 hits") {
    const auto b = assemble_prompt(p, hits(3), Mode::RAGNFS);
    CHECK(b.few_shot_examples.empty());
    CHECK(b.retrieved_context.size() == 3);
  }
  SECTION("NRAG") {
    const auto b = assemble_prompt(p, {}, Mode::NRAG);
    CHECK(b.few_shot_examples.empty());
    CHECK(b.retrieved_context.empty());
  }
  SECTION("contradictions") {
    CHECK_THROWS_AS(assemble_prompt(p, hits(1), Mode::NRAG), ModeContextMismatch);
    CHECK_THROWS_AS(assemble_prompt(p, {}, Mode::RAGFS), ModeContextMismatch);
    CHECK_THROWS_AS(assemble_prompt(p, {}, Mode::RAGNFS), ModeContextMismatch);
  }
  SECTION("user query embeds the profile and the instruction") {
    const auto b = assemble_prompt(p, {}, Mode::NRAG);
    CHECK(b.user_query.find(kInstructionText) != std::string::npos);
    CHECK(b.user_query.find(p.work_status) != std::string::npos);
    for (const auto& [key, value] : p.beliefs) CHECK(b.user_query.find(value) != std::string::npos);
  }
}

TEST_CASE("bundle hash is a pure function of content") {
  const auto a = assemble_prompt(profile(), hits(2), Mode::RAGFS);
  const auto b = assemble_prompt(profile(), hits(2), Mode::RAGFS);
  CHECK(bundle_hash(a) == bundle_hash(b));
  auto c = b;
  c.retrieved_context[1].body += " ";
  CHECK(bundle_hash(a) != bundle_hash(c));
  CHECK(bundle_hash(a) != bundle_hash(assemble_prompt(profile(), hits(2), Mode::RAGNFS)));
}

TEST_CASE("serialized requests follow mode discipline") {
  const GenerationConfig cfg{"gpt-4o", Mode::RAGFS, 0.0, 7, 0.4, "GPT-4O_RAGFS"};
  SECTION("RAGFS: context plus two few-shot pairs before the final user turn") {
    const auto req = chat_request(assemble_prompt(profile(), hits(7), Mode::RAGFS), cfg);
    const auto& m = req.at("messages");
    REQUIRE(m.size() == 6);
    CHECK(m[0].at("role") == "system");
    CHECK(m[0].at("content").get<std::string>().find("<CONTEXT>") != std::string::npos);
    CHECK(m[1].at("role") == "user");
    CHECK(m[2].at("role") == "assistant");
    CHECK(m[3].at("role") == "user");
    CHECK(m[4].at("role") == "assistant");
    CHECK(m[5].at("role") == "user");
    CHECK(count_role(req, "assistant") == 2);
    CHECK(m[2].at("content") == table1_fixture()[0].output);
    CHECK(m[4].at("content") == table1_fixture()[1].output);
    CHECK(m[5].at("content").get<std::string>().find(kInstructionText) != std::string::npos);
    CHECK(req.at("model") == "gpt-4o");
    CHECK(req.at("temperature") == 0.0);
  }
  SECTION("RAGNFS: context, no few-shot turns") {
    const auto req = chat_request(assemble_prompt(profile(), hits(3), Mode::RAGNFS), cfg);
    CHECK(req.at("messages").size() == 2);
    const auto system = req.at("messages")[0].at("content").get<std::string>();
    CHECK(system.find("<CONTEXT>") != std::string::npos);
    CHECK(system.find("</CONTEXT>") != std::string::npos);
    CHECK(system.find("[3] Back pain: Heading 2\nBody number 2.") != std::string::npos);
  }
  SECTION("NRAG: neither") {
    const auto req = chat_request(assemble_prompt(profile(), {}, Mode::NRAG), cfg);
    CHECK(req.at("messages").size() == 2);
    CHECK(req.dump().find("<CONTEXT>") == std::string::npos);
    CHECK(count_role(req, "assistant") == 0);
  }
}

TEST_CASE("generate through an echoing endpoint returns the user query") {
  testing::MockServer server;
  server.post("/v1/chat/completions", testing::echo_chat);
  server.start();
  EndpointConfig e;
  e.base_url = server.url();
  const GenerationConfig cfg{"gpt-4o", Mode::NRAG, 0.0, 7, 0.4, "GPT-4O_NRAG"};
  const auto bundle = assemble_prompt(profile(), {}, Mode::NRAG);
  const auto m = generate(bundle, cfg, e);
  CHECK(m.text.find(bundle.user_query) != std::string::npos);
  CHECK(m.config_label == "GPT-4O_NRAG");
  CHECK(m.bundle_hash == bundle_hash(bundle));
  CHECK(m.endpoint_metadata.at("attempts") == 1);
  CHECK(m.endpoint_metadata.contains("usage"));
  CHECK(m.endpoint_metadata.contains("latency_ms"));
  CHECK_FALSE(m.created_at.empty());
  REQUIRE(server.captured().size() == 1);
  CHECK(server.captured()[0] == chat_request(bundle, cfg));
}

TEST_CASE("empty completions and timeouts are errors") {
  testing::MockServer server;
  server.post("/v1/chat/completions", [](const nlohmann::json&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":""}}]})", "application/json");
  });
  server.post("/slow/v1/chat/completions", [](const nlohmann::json&, httplib::Response&) {});
  server.start();
  EndpointConfig e;
  e.base_url = server.url();
  const GenerationConfig cfg{"m", Mode::NRAG, 0.0, 7, 0.4, "M_NRAG"};
  const auto bundle = assemble_prompt(profile(), {}, Mode::NRAG);
  CHECK_THROWS_AS(generate(bundle, cfg, e), EmptyCompletion);

  testing::MockServer slow;
  slow.post("/v1/chat/completions", [](const nlohmann::json&, httplib::Response& res) {
    std::this_thread::sleep_for(300ms);
    res.set_content("{}", "application/json");
  });
  slow.start();
  e.base_url = slow.url();
  e.timeout = 50ms;
  e.initial_backoff = 1ms;
  try {
    generate(bundle, cfg, e);
    FAIL("expected EndpointError");
  } catch (const EndpointError& err) {
    CHECK(err.body() == "timeout");
    CHECK(err.attempts() == 3);
  }
  CHECK(slow.calls() == 3);
}

TEST_CASE("materials round-trip through JSON lines") {
  GeneratedMaterial m{"run-1", "p1", "GPT-4_NRAG", "abc", "text\nwith \"quotes\"", "2024-01-01T00:00:00.000Z",
                      {{"k", 1}}, "summary"};
  CHECK(to_json(material_from_json(to_json(m))) == to_json(m));
}

TEST_CASE("one NRAG pair needs no index and makes no retrieval") {
  testing::TempDir dir;
  CountingEcho chat;
  const auto art = run_experiment({profile()}, {config_from_json({{"model_id", "m"}, {"mode", "NRAG"}})},
                                  nullptr, nullptr, chat, dir / "run.jsonl");
  CHECK(art.records.size() == 1);
  CHECK(art.generated == 1);
  CHECK(art.retrievals == 0);
  CHECK(chat.calls == 1);
  CHECK(load_run(dir / "run.jsonl").size() == 1);
}

TEST_CASE("RAG configs without an index are rejected up front") {
  testing::TempDir dir;
  CountingEcho chat;
  CHECK_THROWS_AS(run_experiment({profile()}, {config_from_json({{"model_id", "m"}, {"mode", "RAGFS"}})}, nullptr,
                                 nullptr, chat, dir / "run.jsonl"),
                  std::invalid_argument);
}

namespace {

struct SmallWorld {
  std::vector<PatientProfile> profiles = load_profiles(testing::fixture_path("profiles.json"));
  std::vector<GenerationConfig> configs = load_configs(testing::fixture_path("configs.json"));
  vectorstore::Index index;
  embedder::Embedder embedder{std::make_shared<embedder::MockEmbeddingBackend>(16), embedder::mock_model_id(16)};

  SmallWorld() {
    const auto sections = corpus::parse_corpus(testing::fixture_path("corpus_small"));
    const auto chunks = corpus::chunk_corpus(sections, 200);
    std::vector<std::string> texts;
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = embedder.embed(texts);
    std::vector<vectorstore::EmbeddedChunk> items;
    for (std::size_t i = 0; i < chunks.size(); ++i) items.push_back({chunks[i], vectors[i]});
    index = vectorstore::Index(sections, items);
  }
};

}  // namespace

TEST_CASE("run_experiment covers every pair, then resumes after deletions") {
  testing::TempDir dir;
  SmallWorld w;
  CountingEcho chat;
  const auto out = dir / "run.jsonl";
  const auto first = run_experiment(w.profiles, w.configs, &w.index, &w.embedder, chat, out);
  CHECK(first.records.size() == 9);
  CHECK(first.failures.empty());
  CHECK(first.retrievals == 6);
  CHECK(chat.calls == 9);

  auto lines = read_lines(out);
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& m : load_run(out)) {
    keys.emplace(m.run_id, m.profile_id, m.config_label);
    CHECK(m.run_id == first.run_id);
    CHECK(m.text.find(kInstructionText) != std::string::npos);
    CHECK_FALSE(m.profile_summary.empty());
  }
  CHECK(keys.size() == 9);

  // Delete five records and leave a torn tail.
  std::string kept;
  for (std::size_t i = 5; i < lines.size(); ++i) kept += lines[i] + "\n";
  kept += R"({"run_id":"torn)";
  write_file_atomic(out, kept);

  chat.calls = 0;
  const auto second = run_experiment(w.profiles, w.configs, &w.index, &w.embedder, chat, out);
  CHECK(chat.calls == 5);
  CHECK(second.generated == 5);
  CHECK(second.skipped == 4);
  CHECK(second.run_id == first.run_id);
  CHECK(second.records.size() == 9);

  chat.calls = 0;
  const auto third = run_experiment(w.profiles, w.configs, &w.index, &w.embedder, chat, out);
  CHECK(chat.calls == 0);
  CHECK(third.skipped == 9);
}

TEST_CASE("partial failures are reported; total failure raises") {
  testing::TempDir dir;
  SmallWorld w;
  std::vector<GenerationConfig> configs = {config_from_json({{"model_id", "good"}, {"mode", "NRAG"}}),
                                           config_from_json({{"model_id", "bad"}, {"mode", "NRAG"}})};
  FailingFor chat("bad");
  const auto art = run_experiment(w.profiles, configs, nullptr, nullptr, chat, dir / "a.jsonl");
  CHECK(art.generated == 3);
  REQUIRE(art.failures.size() == 3);
  CHECK(art.failures[0].config_label == "BAD_NRAG");

  FailingFor all("good");
  CHECK_THROWS_AS(run_experiment(w.profiles, {configs[0]}, nullptr, nullptr, all, dir / "b.jsonl"),
                  ExperimentFailed);
}

TEST_CASE("a RAG pair with no qualifying sections fails alone") {
  testing::TempDir dir;
  SmallWorld w;
  auto strict = config_from_json({{"model_id", "m"}, {"mode", "RAGNFS"}, {"max_distance", 0.0}});
  auto nrag = config_from_json({{"model_id", "m"}, {"mode", "NRAG"}});
  CountingEcho chat;
  const auto art = run_experiment({w.profiles[0]}, {strict, nrag}, &w.index, &w.embedder, chat, dir / "r.jsonl");
  CHECK(art.generated == 1);
  REQUIRE(art.failures.size() == 1);
  CHECK(art.failures[0].error.find("RAGNFS") != std::string::npos);
}
