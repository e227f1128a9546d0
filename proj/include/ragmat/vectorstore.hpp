#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ragmat/corpus.hpp"
#include "ragmat/embedder.hpp"

namespace ragmat::vectorstore {

using corpus::Chunk;
using corpus::DocumentSection;
using embedder::EmbeddingVector;

struct EmbeddedChunk {
  Chunk chunk;
  EmbeddingVector vector;
};

struct SectionHit {
  DocumentSection section;  // full parent section, body included
  double distance = 0.0;    // min cosine distance over the section's chunks
  std::string best_chunk_id;

  friend bool operator==(const SectionHit&, const SectionHit&) = default;
};

inline constexpr std::size_t kDefaultTopK = 7;
inline constexpr double kDefaultMaxDistance = 0.40;

/// 1 - cos(a, b), clamped to [0, 2]. Throws DimMismatch, ZeroNorm.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

/// Immutable exact (brute-force) cosine index over chunk vectors that answers
/// with whole parent sections.
class Index {
 public:
  Index() = default;

  /// sections must contain the parent of every chunk. Throws DimMismatch,
  /// DuplicateChunkId.
  Index(std::vector<DocumentSection> sections, std::vector<EmbeddedChunk> items);

  /// Rank sections by their best chunk, keep those with distance <=
  /// max_distance, order by (distance, doc_id, section_id), cut at k. The
  /// query must share the index dim and model_id (DimMismatch otherwise).
  std::vector<SectionHit> search(const EmbeddingVector& query, std::size_t k = kDefaultTopK,
                                 double max_distance = kDefaultMaxDistance) const;

  /// Writes index.json, vectors.bin and chunks.jsonl under `directory`.
  void save(const std::filesystem::path& directory) const;
  static Index load(const std::filesystem::path& directory);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& model_id() const noexcept { return model_id_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  const std::vector<DocumentSection>& sections() const noexcept { return sections_; }
  std::span<const double> vector(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

 private:
  std::size_t dim_ = 0;
  std::string model_id_;
  std::vector<DocumentSection> sections_;
  std::vector<Chunk> chunks_;
  std::vector<std::size_t> chunk_section_;  // chunk index -> sections_ index
  std::vector<double> values_;              // row-major, chunks_.size() x dim_
};

/// Build and persist in one step.
Index build_index(std::vector<DocumentSection> sections, std::vector<EmbeddedChunk> items,
                  const std::filesystem::path& store_path);

}  // namespace ragmat::vectorstore
