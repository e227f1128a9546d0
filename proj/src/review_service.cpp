#include "ragmat/review_service.hpp"

#include "ragmat/error.hpp"

namespace ragmat::ratings {

namespace {

constexpr const char* kJson = "application/json";

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>Review</title></head>"
    "<body><p>The review UI bundle is not installed. Start the server with --ui-dir "
    "pointing at the built frontend.</p></body></html>";

void send_error(httplib::Response& res, int status, const std::string& kind,
                const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", kind}, {"message", message}}.dump(), kJson);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const UnknownSession& e) {
    send_error(res, 404, e.kind(), e.what());
  } catch (const UnknownItemToken& e) {
    send_error(res, 404, e.kind(), e.what());
  } catch (const UnknownConfigLabel& e) {
    send_error(res, 422, e.kind(), e.what());
  } catch (const ScoreOutOfRange& e) {
    send_error(res, 400, e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "BadRequest", e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "InternalError", e.what());
  }
}

nlohmann::json session_summary(const ReviewSession& s) {
  return {{"session_id", s.session_id},
          {"rater_id", s.rater_id},
          {"seed", s.seed},
          {"total", s.items.size()},
          {"progress", s.progress}};
}

}  // namespace

std::unique_ptr<httplib::Server> make_review_server(ReviewService& service,
                                                    std::optional<std::filesystem::path> ui_dir) {
  auto server = std::make_unique<httplib::Server>();

  server->Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      const auto rater = body.at("rater_id").get<std::string>();
      const auto seed = body.value("seed", std::int64_t{0});
      auto include = body.value("include", std::vector<std::string>{});
      const auto session = service.build_session(rater, seed, std::move(include));
      res.status = 201;
      res.set_content(session_summary(session).dump(), kJson);
    });
  });

  server->Get(R"(/sessions/([^/]+)/next)", [&service](const httplib::Request& req,
                                                       httplib::Response& res) {
    guarded(res, [&] {
      const auto id = req.matches[1].str();
      const auto total = service.session(id).items.size();
      auto next = service.next_item(id);
      if (!next) {
        res.status = 204;
        return;
      }
      auto j = to_client_json(next->first, next->second, total);
      j["progress"] = service.session(id).progress;
      res.set_content(j.dump(), kJson);
    });
  });

  server->Post(R"(/sessions/([^/]+)/scores)", [&service](const httplib::Request& req,
                                                          httplib::Response& res) {
    guarded(res, [&] {
      const auto id = req.matches[1].str();
      const auto body = nlohmann::json::parse(req.body);
      const Scores scores{body.at("redundancy").get<int>(), body.at("accuracy").get<int>(),
                          body.at("completeness").get<int>()};
      const auto progress =
          service.record_score(id, body.at("item_token").get<std::string>(), scores);
      const auto total = service.session(id).items.size();
      res.set_content(nlohmann::json{{"ok", true}, {"progress", progress}, {"total", total}}.dump(),
                      kJson);
    });
  });

  server->Get("/export.csv", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { res.set_content(to_csv(service.store().records()), "text/csv"); });
  });

  if (ui_dir && std::filesystem::is_directory(*ui_dir)) {
    server->set_mount_point("/", ui_dir->string());
  } else {
    server->Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
  return server;
}

void serve_review(const std::string& host, int port, ReviewService& service,
                  std::optional<std::filesystem::path> ui_dir) {
  auto server = make_review_server(service, std::move(ui_dir));
  if (!server->listen(host, port)) {
    throw std::runtime_error("cannot bind review service to " + host + ":" + std::to_string(port));
  }
}

}  // namespace ragmat::ratings
