#include "ragmat/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::embedder {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t seed_from(std::string_view text) {
  const auto hex = sha256_hex(text);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

EmbeddingVector mock_embed(std::string_view text, std::size_t dim) {
  if (dim < 2) throw std::invalid_argument("mock_embed: dim must be >= 2");
  std::uint64_t state = seed_from(text);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double norm = std::sqrt(norm2);
  for (auto& x : v) x /= norm;
  return {std::move(v), mock_model_id(dim)};
}

std::string mock_model_id(std::size_t dim) { return "mock-embed-" + std::to_string(dim); }

MockEmbeddingBackend::MockEmbeddingBackend(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) throw std::invalid_argument("mock embedding dim must be >= 2");
}

std::vector<std::vector<double>> MockEmbeddingBackend::embed(const std::vector<std::string>& texts,
                                                             const std::string&) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(mock_embed(t, dim_).values);
  return out;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(EndpointConfig endpoint,
                                           std::shared_ptr<RequestBudget> budget)
    : endpoint_(std::move(endpoint)), budget_(std::move(budget)) {}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed(const std::vector<std::string>& texts,
                                                             const std::string& model_id) {
  const nlohmann::json request = {{"model", model_id}, {"input", texts}};
  auto response = post_json(endpoint_, "/v1/embeddings", request, budget_.get());
  const auto& data = response.body.at("data");
  if (!data.is_array() || data.size() != texts.size()) {
    throw EndpointError(200, "embedding response has " + std::to_string(data.size()) +
                                 " rows for " + std::to_string(texts.size()) + " inputs",
                        response.attempts);
  }
  std::vector<std::vector<double>> out(texts.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t idx = data[i].value("index", i);
    if (idx >= out.size()) throw EndpointError(200, "embedding index out of range", response.attempts);
    out[idx] = data[i].at("embedding").get<std::vector<double>>();
  }
  return out;
}

std::unique_ptr<EmbeddingBackend> make_backend(const EndpointConfig& endpoint,
                                               std::shared_ptr<RequestBudget> budget) {
  constexpr std::string_view kMock = "mock://";
  if (endpoint.base_url.rfind(kMock, 0) == 0) {
    const auto rest = endpoint.base_url.substr(kMock.size());
    std::size_t dim = kDefaultMockDim;
    if (!rest.empty()) dim = std::stoul(rest);
    return std::make_unique<MockEmbeddingBackend>(dim);
  }
  if (!endpoint.is_remote()) {
    throw std::invalid_argument("unsupported embedding endpoint: " + endpoint.base_url);
  }
  return std::make_unique<HttpEmbeddingBackend>(endpoint, std::move(budget));
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::string EmbeddingCache::key(std::string_view model_id, std::string_view normalized_text) {
  std::string material;
  material.reserve(model_id.size() + normalized_text.size() + 1);
  material.append(model_id);
  material.push_back('\0');
  material.append(normalized_text);
  return sha256_hex(material);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!directory_) return std::nullopt;
  const auto path = *directory_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    EmbeddingVector v{j.at("values").get<std::vector<double>>(), j.at("model_id").get<std::string>()};
    memory_.emplace(key, v);
    return v;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entry: treat as a miss and overwrite later
  }
}

void EmbeddingCache::put(const std::string& key, const EmbeddingVector& vector) {
  std::lock_guard lock(mutex_);
  memory_[key] = vector;
  if (directory_) {
    const nlohmann::json j = {
        {"model_id", vector.model_id}, {"dim", vector.dim()}, {"values", vector.values}};
    write_file_atomic(*directory_ / (key + ".json"), j.dump());
  }
}

Embedder::Embedder(std::shared_ptr<EmbeddingBackend> backend, std::string model_id,
                   std::shared_ptr<EmbeddingCache> cache, std::size_t batch_size)
    : backend_(std::move(backend)),
      model_id_(std::move(model_id)),
      cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()),
      batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<EmbeddingVector> Embedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  std::vector<std::string> keys(texts.size());
  // normalized text -> positions still waiting for a vector
  std::map<std::string, std::vector<std::size_t>> pending;
  std::vector<std::string> order;

  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto normalized = normalize_whitespace(texts[i]);
    if (normalized.empty()) throw std::invalid_argument("cannot embed blank text");
    keys[i] = EmbeddingCache::key(model_id_, normalized);
    if (auto hit = cache_->get(keys[i])) {
      slots[i] = std::move(*hit);
      ++cache_hits_;
      continue;
    }
    auto [it, inserted] = pending.try_emplace(normalized);
    if (inserted) order.push_back(normalized);
    it->second.push_back(i);
  }

  std::optional<std::size_t> dim;
  for (const auto& s : slots) {
    if (!s) continue;
    if (dim && *dim != s->dim()) throw DimMismatch("cached vectors have inconsistent dims");
    dim = s->dim();
  }

  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t end = std::min(order.size(), start + batch_size_);
    std::vector<std::string> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    ++backend_calls_;
    auto rows = backend_->embed(batch, model_id_);
    if (rows.size() != batch.size()) {
      throw DimMismatch("backend returned " + std::to_string(rows.size()) + " rows for " +
                        std::to_string(batch.size()) + " inputs");
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& values = rows[b];
      if (values.empty()) throw DimMismatch("backend returned an empty embedding");
      if (dim && *dim != values.size()) {
        throw DimMismatch("expected dim " + std::to_string(*dim) + ", got " +
                          std::to_string(values.size()));
      }
      dim = values.size();
      for (double x : values) {
        if (!std::isfinite(x)) throw DimMismatch("backend returned a non-finite component");
      }
      EmbeddingVector v{std::move(values), model_id_};
      const auto& positions = pending.at(batch[b]);
      cache_->put(keys[positions.front()], v);
      for (auto pos : positions) slots[pos] = v;
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) { return embed({text}).front(); }

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts,
                                         const std::string& model_id,
                                         const EndpointConfig& endpoint,
                                         std::shared_ptr<EmbeddingCache> cache) {
  if (texts.empty()) throw std::invalid_argument("embed_texts: no input texts");
  Embedder embedder(make_backend(endpoint), model_id, std::move(cache));
  return embedder.embed(texts);
}

}  // namespace ragmat::embedder
