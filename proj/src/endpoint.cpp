#include "ragmat/endpoint.hpp"

#include <optional>
#include <thread>

#include <httplib.h>

#include "ragmat/error.hpp"

namespace ragmat {

bool EndpointConfig::is_remote() const {
  return base_url.rfind("http://", 0) == 0 || base_url.rfind("https://", 0) == 0;
}

RequestBudget::RequestBudget(std::ptrdiff_t limit)
    : limit_(std::clamp<std::ptrdiff_t>(limit, 1, kMaxLimit)), slots_(limit_) {}

namespace {

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

JsonResponse post_json(const EndpointConfig& endpoint, const std::string& path,
                       const nlohmann::json& body, RequestBudget* budget) {
  if (!endpoint.is_remote()) {
    throw EndpointError(0, "not an http(s) endpoint: " + endpoint.base_url, 0);
  }
  httplib::Client client(endpoint.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!endpoint.api_key.empty()) client.set_bearer_token_auth(endpoint.api_key);

  const std::string payload = body.dump();
  const int attempts = std::max(1, endpoint.max_attempts);
  auto backoff = endpoint.initial_backoff;
  int last_status = 0;
  std::string last_body;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    httplib::Result res;
    {
      std::optional<RequestBudget::Permit> permit;
      if (budget != nullptr) permit.emplace(*budget);
      res = client.Post(path, payload, "application/json");
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!res) {
      last_status = 0;
      const auto err = res.error();
      last_body = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? "timeout"
                      : httplib::to_string(err);
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return {nlohmann::json::parse(res->body), attempt, elapsed};
      } catch (const nlohmann::json::parse_error& e) {
        throw EndpointError(res->status, std::string("invalid JSON response: ") + e.what(),
                            attempt);
      }
    } else {
      last_status = res->status;
      last_body = res->body;
      if (!retryable(res->status)) throw EndpointError(last_status, last_body, attempt);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw EndpointError(last_status, last_body, attempts);
}

}  // namespace ragmat
