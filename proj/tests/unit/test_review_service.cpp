#include <catch_amalgamated.hpp>

#include <thread>

#include "fixtures.hpp"
#include "ragmat/ratings.hpp"
#include "ragmat/review_service.hpp"

using namespace ragmat;
using namespace ragmat::ratings;
using nlohmann::json;

namespace {

class RunningService {
 public:
  RunningService(std::vector<pipeline::GeneratedMaterial> run, std::vector<std::string> include,
                 std::optional<std::filesystem::path> ui = {})
      : service_(std::move(run), std::move(include), std::make_shared<ScoreStore>()),
        server_(make_review_server(service_, std::move(ui))) {
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    while (!server_->is_running()) std::this_thread::yield();
  }
  ~RunningService() {
    server_->stop();
    thread_.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  ReviewService& service() { return service_; }

 private:
  ReviewService service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_CASE("create, score every item, then exhaustion and export") {
  RunningService rs(testing::synthetic_run(30, testing::published_labels()), testing::published_labels());
  auto cli = rs.client();

  auto created = cli.Post("/sessions", json{{"rater_id", "r1"}, {"seed", 5}}.dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto session = json::parse(created->body);
  CHECK(session.at("total") == 300);
  const std::string id = session.at("session_id");

  for (int i = 0; i < 300; ++i) {
    auto next = cli.Get("/sessions/" + id + "/next");
    REQUIRE(next);
    REQUIRE(next->status == 200);
    const auto item = json::parse(next->body);
    CHECK_FALSE(item.contains("config_label"));
    CHECK(item.at("position") == i + 1);
    CHECK(item.at("total") == 300);
    auto scored = cli.Post("/sessions/" + id + "/scores",
                           json{{"item_token", item.at("item_token")}, {"redundancy", 1 + i % 5},
                                {"accuracy", 3}, {"completeness", 2}}
                               .dump(),
                           "application/json");
    REQUIRE(scored);
    REQUIRE(scored->status == 200);
    CHECK(json::parse(scored->body).at("progress") == i + 1);
  }
  auto done = cli.Get("/sessions/" + id + "/next");
  REQUIRE(done);
  CHECK(done->status == 204);

  auto csv = cli.Get("/export.csv");
  REQUIRE(csv);
  CHECK(csv->status == 200);
  CHECK(parse_scores_csv(csv->body).size() == 300);
}

TEST_CASE("contract violations map to 4xx") {
  RunningService rs(testing::synthetic_run(3, {"A_RAGFS", "A_NRAG"}), {});
  auto cli = rs.client();
  auto bad_json = cli.Post("/sessions", "{not json", "application/json");
  REQUIRE(bad_json);
  CHECK(bad_json->status == 400);

  auto no_rater = cli.Post("/sessions", json{{"seed", 1}}.dump(), "application/json");
  REQUIRE(no_rater);
  CHECK(no_rater->status == 400);

  auto unknown_label = cli.Post("/sessions", json{{"rater_id", "r"}, {"include", {"B_RAGFS"}}}.dump(),
                                "application/json");
  REQUIRE(unknown_label);
  CHECK(unknown_label->status == 422);

  auto missing = cli.Get("/sessions/s-nope/next");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  const auto id = json::parse(cli.Post("/sessions", json{{"rater_id", "r"}}.dump(), "application/json")->body)
                      .at("session_id")
                      .get<std::string>();
  const auto token = json::parse(cli.Get("/sessions/" + id + "/next")->body).at("item_token");
  auto out_of_range = cli.Post("/sessions/" + id + "/scores",
                               json{{"item_token", token}, {"redundancy", 6}, {"accuracy", 3}, {"completeness", 2}}.dump(),
                               "application/json");
  REQUIRE(out_of_range);
  CHECK(out_of_range->status == 400);
  auto unknown_token = cli.Post("/sessions/" + id + "/scores",
                                json{{"item_token", "t-x"}, {"redundancy", 3}, {"accuracy", 3}, {"completeness", 2}}.dump(),
                                "application/json");
  REQUIRE(unknown_token);
  CHECK(unknown_token->status == 404);
  auto incomplete = cli.Post("/sessions/" + id + "/scores", json{{"item_token", token}, {"redundancy", 3}}.dump(),
                             "application/json");
  REQUIRE(incomplete);
  CHECK(incomplete->status == 400);
  CHECK(rs.service().store().size() == 0);
}

TEST_CASE("root serves the UI bundle or a placeholder") {
  {
    RunningService rs(testing::synthetic_run(1, {"A_NRAG"}), {});
    auto res = rs.client().Get("/");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("<html") != std::string::npos);
  }
  testing::TempDir ui;
  std::ofstream(ui / "index.html") << "<html>bundle</html>";
  RunningService rs(testing::synthetic_run(1, {"A_NRAG"}), {}, ui.path());
  auto res = rs.client().Get("/index.html");
  REQUIRE(res);
  CHECK(res->body == "<html>bundle</html>");
}
