#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

namespace ragmat {

/// Connection settings for an OpenAI-compatible endpoint.
///
/// base_url is "http://host:port" or "https://host" (no trailing path). Two
/// pseudo-schemes select in-process backends: "mock://" for the deterministic
/// embedding mock and "echo://" for a chat backend that echoes its request.
struct EndpointConfig {
  std::string base_url;
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{30'000};

  bool is_remote() const;
};

/// Shared cap on in-flight remote requests (embedder and chat draw from the
/// same budget when handed the same instance).
class RequestBudget {
 public:
  static constexpr std::ptrdiff_t kMaxLimit = 256;

  explicit RequestBudget(std::ptrdiff_t limit = 4);

  std::ptrdiff_t limit() const noexcept { return limit_; }

  class Permit {
   public:
    explicit Permit(RequestBudget& budget) : budget_(&budget) { budget_->slots_.acquire(); }
    ~Permit() { budget_->slots_.release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    RequestBudget* budget_;
  };

 private:
  std::ptrdiff_t limit_;
  std::counting_semaphore<kMaxLimit> slots_;
};

struct JsonResponse {
  nlohmann::json body;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
};

/// POST JSON with bounded retries and exponential backoff. Retries transport
/// failures, 429 and 5xx; other 4xx fail immediately. Throws EndpointError.
JsonResponse post_json(const EndpointConfig& endpoint, const std::string& path,
                       const nlohmann::json& body, RequestBudget* budget = nullptr);

}  // namespace ragmat
