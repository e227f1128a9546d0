#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragmat::corpus {

enum class SourceKind { medlineplus, guideline, journal_article };

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> parse_source_kind(std::string_view text);

/// One <section> of a knowledge-base document. body is never blank.
struct DocumentSection {
  std::string doc_id;
  SourceKind source_kind = SourceKind::medlineplus;
  std::string title;
  std::optional<std::string> url;
  std::string section_id;
  std::string heading;
  std::string body;

  friend bool operator==(const DocumentSection&, const DocumentSection&) = default;
};

struct SectionKey {
  std::string doc_id;
  std::string section_id;

  friend auto operator<=>(const SectionKey&, const SectionKey&) = default;
};

/// A fixed-width slice of a section body. Offsets count Unicode scalar
/// values, text holds the corresponding UTF-8 bytes.
struct Chunk {
  std::string chunk_id;
  SectionKey parent;
  std::size_t ordinal = 0;
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct CorpusStats {
  std::size_t file_count = 0;
  std::size_t section_count = 0;
  std::size_t chunk_count = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

inline constexpr std::size_t kDefaultChunkSize = 1000;

/// Parse every *.xml file below `directory` (lexicographic by relative path,
/// then document order). Throws MalformedXml or DuplicateSectionId.
std::vector<DocumentSection> parse_corpus(const std::filesystem::path& directory);

/// Parse a single document. `origin` is only used in error messages.
std::vector<DocumentSection> parse_document(std::string_view xml, const std::string& origin);

std::string make_chunk_id(const SectionKey& parent, std::size_t ordinal);

/// Split on raw scalar offsets; every chunk but the last has exactly
/// chunk_size scalars. chunk_size must be >= 1.
std::vector<Chunk> chunk_section(const DocumentSection& section, std::size_t chunk_size);

std::vector<Chunk> chunk_corpus(const std::vector<DocumentSection>& sections,
                                std::size_t chunk_size);

/// file_count counts distinct documents (one document per file).
CorpusStats corpus_stats(const std::vector<DocumentSection>& sections,
                         const std::vector<Chunk>& chunks);

// Chunk records as written by `ingest` (chunk fields plus parent metadata).
nlohmann::json chunk_record(const Chunk& chunk, const DocumentSection& parent);

struct ChunkRecord {
  Chunk chunk;
  DocumentSection parent;  // body is empty; rebuild with reassemble_sections
};

ChunkRecord parse_chunk_record(const nlohmann::json& j);

/// Rebuild whole sections from chunk records by concatenating chunk texts in
/// ordinal order. Spans must be contiguous starting at 0.
std::vector<DocumentSection> reassemble_sections(const std::vector<ChunkRecord>& records);

}  // namespace ragmat::corpus
