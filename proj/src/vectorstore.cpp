#include "ragmat/vectorstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::vectorstore {

namespace {

constexpr int kFormatVersion = 1;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimMismatch("cosine_distance: dims " + std::to_string(a.size()) + " and " +
                      std::to_string(b.size()));
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw ZeroNorm("cosine_distance: zero-norm vector");
  const double d = 1.0 - dot(a, b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

Index::Index(std::vector<DocumentSection> sections, std::vector<EmbeddedChunk> items)
    : sections_(std::move(sections)) {
  std::map<corpus::SectionKey, std::size_t> by_key;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    by_key.emplace(corpus::SectionKey{sections_[i].doc_id, sections_[i].section_id}, i);
  }
  if (!items.empty()) {
    dim_ = items.front().vector.dim();
    model_id_ = items.front().vector.model_id;
  }
  std::set<std::string> ids;
  chunks_.reserve(items.size());
  values_.reserve(items.size() * dim_);
  for (auto& item : items) {
    if (item.vector.dim() != dim_ || item.vector.model_id != model_id_) {
      throw DimMismatch("chunk " + item.chunk.chunk_id + " has dim " +
                        std::to_string(item.vector.dim()) + "/" + item.vector.model_id +
                        ", index expects " + std::to_string(dim_) + "/" + model_id_);
    }
    if (!ids.insert(item.chunk.chunk_id).second) throw DuplicateChunkId(item.chunk.chunk_id);
    auto it = by_key.find(item.chunk.parent);
    if (it == by_key.end()) {
      throw IndexFormatError("chunk " + item.chunk.chunk_id + " has no parent section");
    }
    chunk_section_.push_back(it->second);
    values_.insert(values_.end(), item.vector.values.begin(), item.vector.values.end());
    chunks_.push_back(std::move(item.chunk));
  }
}

std::vector<SectionHit> Index::search(const EmbeddingVector& query, std::size_t k,
                                      double max_distance) const {
  if (chunks_.empty()) return {};
  if (query.dim() != dim_) {
    throw DimMismatch("query dim " + std::to_string(query.dim()) + ", index dim " +
                      std::to_string(dim_));
  }
  if (query.model_id != model_id_) {
    throw DimMismatch("query model " + query.model_id + ", index model " + model_id_);
  }
  constexpr double kUnset = std::numeric_limits<double>::infinity();
  std::vector<double> best(sections_.size(), kUnset);
  std::vector<std::size_t> best_chunk(sections_.size(), 0);
  const std::span<const double> q(query.values);
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    const double d = cosine_distance(q, vector(i));
    const std::size_t s = chunk_section_[i];
    if (d < best[s]) {
      best[s] = d;
      best_chunk[s] = i;
    }
  }

  std::vector<std::size_t> qualifying;
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    if (best[s] != kUnset && best[s] <= max_distance) qualifying.push_back(s);
  }
  std::sort(qualifying.begin(), qualifying.end(), [&](std::size_t a, std::size_t b) {
    if (best[a] != best[b]) return best[a] < best[b];
    if (sections_[a].doc_id != sections_[b].doc_id) return sections_[a].doc_id < sections_[b].doc_id;
    return sections_[a].section_id < sections_[b].section_id;
  });
  if (qualifying.size() > k) qualifying.resize(k);

  std::vector<SectionHit> hits;
  hits.reserve(qualifying.size());
  for (auto s : qualifying) hits.push_back({sections_[s], best[s], chunks_[best_chunk[s]].chunk_id});
  return hits;
}

void Index::save(const std::filesystem::path& directory) const {
  std::filesystem::create_directories(directory);

  std::string chunks_jsonl;
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    chunks_jsonl += corpus::chunk_record(chunks_[i], sections_[chunk_section_[i]]).dump();
    chunks_jsonl += '\n';
  }

  // Little-endian IEEE-754 doubles, row-major.
  std::string packed(values_.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < values_.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values_[i]);
    for (int b = 0; b < 8; ++b) {
      packed[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }

  const nlohmann::json meta = {{"format_version", kFormatVersion},
                               {"model_id", model_id_},
                               {"dim", dim_},
                               {"count", chunks_.size()},
                               {"vectors_sha256", sha256_hex(packed)}};
  write_file_atomic(directory / "chunks.jsonl", chunks_jsonl);
  write_file_atomic(directory / "vectors.bin", packed);
  write_file_atomic(directory / "index.json", meta.dump(2));
}

Index Index::load(const std::filesystem::path& directory) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(directory / "index.json"));
  } catch (const std::exception& e) {
    throw IndexFormatError(directory.string() + ": " + e.what());
  }
  if (meta.value("format_version", 0) != kFormatVersion) {
    throw IndexFormatError(directory.string() + ": unsupported index format");
  }
  const auto dim = meta.at("dim").get<std::size_t>();
  const auto count = meta.at("count").get<std::size_t>();
  const auto model_id = meta.at("model_id").get<std::string>();

  std::vector<corpus::ChunkRecord> records;
  for (const auto& line : read_lines(directory / "chunks.jsonl")) {
    records.push_back(corpus::parse_chunk_record(nlohmann::json::parse(line)));
  }
  const std::string packed = read_file(directory / "vectors.bin");
  if (records.size() != count || packed.size() != count * dim * sizeof(double)) {
    throw IndexFormatError(directory.string() + ": chunk/vector counts disagree with index.json");
  }
  if (meta.contains("vectors_sha256") && meta["vectors_sha256"] != sha256_hex(packed)) {
    throw IndexFormatError(directory.string() + ": vectors.bin checksum mismatch");
  }

  auto sections = corpus::reassemble_sections(records);
  std::vector<EmbeddedChunk> items;
  items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      std::uint64_t bits = 0;
      const std::size_t off = (i * dim + d) * 8;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(packed[off + b])) << (8 * b);
      }
      v[d] = std::bit_cast<double>(bits);
    }
    items.push_back({std::move(records[i].chunk), {std::move(v), model_id}});
  }
  Index index(std::move(sections), std::move(items));
  index.dim_ = dim;
  index.model_id_ = model_id;
  return index;
}

Index build_index(std::vector<DocumentSection> sections, std::vector<EmbeddedChunk> items,
                  const std::filesystem::path& store_path) {
  Index index(std::move(sections), std::move(items));
  index.save(store_path);
  return index;
}

}  // namespace ragmat::vectorstore
