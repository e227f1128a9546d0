#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "mock_http.hpp"
#include "ragmat/embedder.hpp"
#include "ragmat/error.hpp"

using namespace ragmat;
using namespace ragmat::embedder;
using namespace std::chrono_literals;

namespace {

double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

class CountingBackend final : public EmbeddingBackend {
 public:
  explicit CountingBackend(std::size_t dim) : dim_(dim) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string&) override {
    ++calls;
    inputs += texts.size();
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) out.push_back(mock_embed(t, dim_).values);
    if (ragged && out.size() > 1) out.back().push_back(0.5);
    return out;
  }
  std::size_t dim_;
  int calls = 0;
  std::size_t inputs = 0;
  bool ragged = false;
};

}  // namespace

TEST_CASE("mock_embed is deterministic and unit-norm") {
  CHECK(mock_embed("x", 8) == mock_embed("x", 8));
  CHECK(mock_embed("x", 8).dim() == 8);
  CHECK(mock_embed("x", 8).model_id == mock_model_id(8));
  for (const char* t : {"", "a", "lifting", "desk posture", "\xC3\xA9t\xC3\xA9"}) {
    CHECK(std::fabs(norm(mock_embed(t, 64)) - 1.0) <= 1e-9);
    CHECK(std::fabs(norm(mock_embed(t, 2)) - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(mock_embed("x", 1), std::invalid_argument);
}

TEST_CASE("mock_embed separates a 100-text fixture") {
  std::vector<std::string> texts = {"lift", "desk"};
  for (int i = 0; texts.size() < 100; ++i) texts.push_back("profile text " + std::to_string(i));
  std::set<std::vector<double>> seen;
  for (const auto& t : texts) seen.insert(mock_embed(t, 64).values);
  CHECK(seen.size() == 100);
}

TEST_CASE("embed_texts against the mock endpoint returns one vector per input") {
  EndpointConfig e;
  e.base_url = "mock://8";
  const auto out = embed_texts({"a", "b"}, "mock-embed-8", e);
  REQUIRE(out.size() == 2);
  CHECK(out[0].dim() == 8);
  CHECK(out[1].dim() == 8);
  CHECK(out[0].values == mock_embed("a", 8).values);
  CHECK_THROWS_AS(embed_texts({}, "m", e), std::invalid_argument);
}

TEST_CASE("second embedding of the same text is served from the cache") {
  auto backend = std::make_shared<CountingBackend>(16);
  Embedder emb(backend, "m");
  const auto first = emb.embed({"hello world"});
  const auto second = emb.embed({"  hello \n world "});
  CHECK(backend->calls == 1);
  CHECK(emb.cache_hits() == 1);
  CHECK(first[0] == second[0]);
}

TEST_CASE("duplicates inside one batch are embedded once, order preserved") {
  auto backend = std::make_shared<CountingBackend>(4);
  Embedder emb(backend, "m", std::make_shared<EmbeddingCache>(), 2);
  const std::vector<std::string> texts = {"c", "a", "c", "b", "a", "d"};
  const auto out = emb.embed(texts);
  REQUIRE(out.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) CHECK(out[i].values == mock_embed(texts[i], 4).values);
  CHECK(backend->inputs == 4);
  CHECK(backend->calls == 2);
  CHECK_THROWS_AS(emb.embed({"ok", "   "}), std::invalid_argument);
}

TEST_CASE("inconsistent dims from the backend raise DimMismatch") {
  auto backend = std::make_shared<CountingBackend>(4);
  backend->ragged = true;
  Embedder emb(backend, "m");
  CHECK_THROWS_AS(emb.embed({"a", "b"}), DimMismatch);
}

TEST_CASE("a warm disk cache needs no network") {
  testing::TempDir dir;
  testing::MockServer server;
  server.post("/v1/embeddings", testing::mock_embeddings(12));
  server.start();
  EndpointConfig e;
  e.base_url = server.url();
  e.initial_backoff = 1ms;

  const std::vector<std::string> texts = {"bend your knees", "keep it close"};
  const auto cold = embed_texts(texts, "text-embedding-x", e, std::make_shared<EmbeddingCache>(dir.path()));
  CHECK(server.calls() == 1);
  CHECK(server.captured().at(0).at("model") == "text-embedding-x");

  e.base_url = "http://127.0.0.1:1";  // unreachable
  const auto warm = embed_texts(texts, "text-embedding-x", e, std::make_shared<EmbeddingCache>(dir.path()));
  CHECK(warm == cold);
  CHECK(server.calls() == 1);
}

TEST_CASE("the remote client surfaces EndpointError after retries") {
  testing::MockServer server;
  server.post("/v1/embeddings", [](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  server.start();
  EndpointConfig e;
  e.base_url = server.url();
  e.initial_backoff = 1ms;
  CHECK_THROWS_AS(embed_texts({"a"}, "m", e), EndpointError);
  CHECK(server.calls() == 3);
}

TEST_CASE("the remote client restores input order from indices") {
  testing::MockServer server;
  server.post("/v1/embeddings", [](const nlohmann::json& req, httplib::Response& res) {
    nlohmann::json data = nlohmann::json::array();
    const auto& input = req.at("input");
    for (std::size_t i = input.size(); i-- > 0;) {
      data.push_back({{"index", i}, {"embedding", mock_embed(input[i].get<std::string>(), 3).values}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  server.start();
  EndpointConfig e;
  e.base_url = server.url();
  const auto out = embed_texts({"x", "y", "z"}, "m", e);
  CHECK(out[0].values == mock_embed("x", 3).values);
  CHECK(out[2].values == mock_embed("z", 3).values);
  CHECK(out[0].model_id == "m");
}
