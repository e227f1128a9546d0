#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>

#include "ragmat/ratings.hpp"

namespace ragmat::ratings {

/// Routes:
///   POST /sessions               {rater_id, seed, include?} -> 201 session summary
///   GET  /sessions/{id}/next     -> 200 item | 204 when exhausted
///   POST /sessions/{id}/scores   {item_token, redundancy, accuracy, completeness}
///   GET  /export.csv             -> current scores as CSV
///   GET  /                       -> static UI bundle (ui_dir) or a placeholder page
/// Contract violations map to 400 (bad body, score range), 404 (unknown
/// session/token) and 422 (unknown config label).
std::unique_ptr<httplib::Server> make_review_server(ReviewService& service,
                                                    std::optional<std::filesystem::path> ui_dir = {});

/// Blocking: bind to host:port and serve until the process is stopped.
void serve_review(const std::string& host, int port, ReviewService& service,
                  std::optional<std::filesystem::path> ui_dir = {});

}  // namespace ragmat::ratings
