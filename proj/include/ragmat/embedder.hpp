#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragmat/endpoint.hpp"

namespace ragmat::embedder {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  std::size_t dim() const noexcept { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline constexpr std::size_t kDefaultMockDim = 64;

/// Deterministic unit-norm vector seeded from SHA-256(text). dim must be >= 2.
EmbeddingVector mock_embed(std::string_view text, std::size_t dim);

std::string mock_model_id(std::size_t dim);

/// Source of raw embedding values; one row per input, in order.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                 const std::string& model_id) = 0;
};

class MockEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit MockEmbeddingBackend(std::size_t dim = kDefaultMockDim);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override;

 private:
  std::size_t dim_;
};

/// POST /v1/embeddings on an OpenAI-compatible server.
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(EndpointConfig endpoint, std::shared_ptr<RequestBudget> budget);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override;

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<RequestBudget> budget_;
};

/// "mock://" or "mock://<dim>" yields the mock; http(s) URLs the remote client.
std::unique_ptr<EmbeddingBackend> make_backend(const EndpointConfig& endpoint,
                                               std::shared_ptr<RequestBudget> budget = nullptr);

/// Content-addressed cache: key = SHA-256(model_id, normalized text). With a
/// directory, each entry is persisted as <dir>/<key>.json.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path directory);

  static std::string key(std::string_view model_id, std::string_view normalized_text);

  std::optional<EmbeddingVector> get(const std::string& key);
  void put(const std::string& key, const EmbeddingVector& vector);

 private:
  std::optional<std::filesystem::path> directory_;
  std::mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> memory_;
};

class Embedder {
 public:
  Embedder(std::shared_ptr<EmbeddingBackend> backend, std::string model_id,
           std::shared_ptr<EmbeddingCache> cache = std::make_shared<EmbeddingCache>(),
           std::size_t batch_size = 64);

  /// One vector per input, in input order. Texts must be non-blank.
  /// Throws EndpointError, DimMismatch.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
  EmbeddingVector embed_one(const std::string& text);

  const std::string& model_id() const noexcept { return model_id_; }
  std::size_t backend_calls() const noexcept { return backend_calls_; }
  std::size_t cache_hits() const noexcept { return cache_hits_; }

 private:
  std::shared_ptr<EmbeddingBackend> backend_;
  std::string model_id_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::size_t batch_size_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Convenience wrapper: build a backend for `endpoint` and embed in one go.
std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts,
                                         const std::string& model_id,
                                         const EndpointConfig& endpoint,
                                         std::shared_ptr<EmbeddingCache> cache = nullptr);

}  // namespace ragmat::embedder
