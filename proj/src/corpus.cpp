#include "ragmat/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::corpus {

namespace pt = boost::property_tree;

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::medlineplus: return "medlineplus";
    case SourceKind::guideline: return "guideline";
    case SourceKind::journal_article: return "journal_article";
  }
  return "medlineplus";
}

std::optional<SourceKind> parse_source_kind(std::string_view text) {
  if (text == "medlineplus") return SourceKind::medlineplus;
  if (text == "guideline") return SourceKind::guideline;
  if (text == "journal_article") return SourceKind::journal_article;
  return std::nullopt;
}

namespace {

std::optional<std::string> attribute(const pt::ptree& node, const std::string& name) {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    if (auto v = attrs->get_optional<std::string>(name)) return *v;
  }
  return std::nullopt;
}

std::string required_attribute(const pt::ptree& node, const std::string& name,
                               const std::string& element, const std::string& origin) {
  auto v = attribute(node, name);
  if (!v || trim(*v).empty()) {
    throw MalformedXml(origin + ": <" + element + "> is missing attribute '" + name + "'");
  }
  return *v;
}

}  // namespace

std::vector<DocumentSection> parse_document(std::string_view xml, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw MalformedXml(origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }

  const pt::ptree* doc = nullptr;
  for (const auto& [name, child] : tree) {
    if (name == "<xmlcomment>") continue;
    if (name != "document" || doc != nullptr) {
      throw MalformedXml(origin + ": expected a single <document> root, found <" + name + ">");
    }
    doc = &child;
  }
  if (doc == nullptr) throw MalformedXml(origin + ": no <document> root element");

  DocumentSection base;
  base.doc_id = required_attribute(*doc, "doc_id", "document", origin);
  const auto kind_text = required_attribute(*doc, "source_kind", "document", origin);
  const auto kind = parse_source_kind(kind_text);
  if (!kind) throw MalformedXml(origin + ": unknown source_kind '" + kind_text + "'");
  base.source_kind = *kind;
  base.title = required_attribute(*doc, "title", "document", origin);
  base.url = attribute(*doc, "url");
  if (base.url && trim(*base.url).empty()) base.url.reset();

  std::vector<DocumentSection> out;
  std::set<std::string> seen;
  for (const auto& [name, child] : *doc) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (name != "section") {
      if (trim(child.data()).empty() && child.empty() && name == "<xmltext>") continue;
      throw MalformedXml(origin + ": unexpected element <" + name + "> inside <document>");
    }
    for (const auto& [inner, _] : child) {
      if (inner != "<xmlattr>" && inner != "<xmlcomment>") {
        throw MalformedXml(origin + ": <section> must contain plain text only, found <" + inner +
                           ">");
      }
    }
    DocumentSection s = base;
    s.section_id = required_attribute(child, "section_id", "section", origin);
    s.heading = attribute(child, "heading").value_or("");
    s.body = trim(child.data());
    if (s.body.empty()) {
      throw MalformedXml(origin + ": section '" + s.section_id + "' has an empty body");
    }
    if (!seen.insert(s.section_id).second) {
      throw DuplicateSectionId(base.doc_id + "/" + s.section_id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DocumentSection> parse_corpus(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw MalformedXml(directory.string() + ": not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return fs::relative(a, directory).generic_string() < fs::relative(b, directory).generic_string();
  });

  std::vector<DocumentSection> out;
  std::set<SectionKey> keys;
  for (const auto& file : files) {
    auto sections = parse_document(read_file(file), file.string());
    for (auto& s : sections) {
      if (!keys.insert({s.doc_id, s.section_id}).second) {
        throw DuplicateSectionId(s.doc_id + "/" + s.section_id + " (" + file.string() + ")");
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string make_chunk_id(const SectionKey& parent, std::size_t ordinal) {
  return parent.doc_id + "#" + parent.section_id + "#" + std::to_string(ordinal);
}

std::vector<Chunk> chunk_section(const DocumentSection& section, std::size_t chunk_size) {
  if (chunk_size == 0) throw std::invalid_argument("chunk_size must be >= 1");
  const auto bounds = utf8::boundaries(section.body);
  const std::size_t scalars = bounds.size() - 1;
  const SectionKey parent{section.doc_id, section.section_id};

  std::vector<Chunk> out;
  out.reserve((scalars + chunk_size - 1) / chunk_size);
  for (std::size_t start = 0, ordinal = 0; start < scalars; start += chunk_size, ++ordinal) {
    const std::size_t end = std::min(start + chunk_size, scalars);
    Chunk c;
    c.chunk_id = make_chunk_id(parent, ordinal);
    c.parent = parent;
    c.ordinal = ordinal;
    c.char_start = start;
    c.char_end = end;
    c.text = section.body.substr(bounds[start], bounds[end] - bounds[start]);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Chunk> chunk_corpus(const std::vector<DocumentSection>& sections,
                                std::size_t chunk_size) {
  std::vector<Chunk> out;
  for (const auto& s : sections) {
    auto chunks = chunk_section(s, chunk_size);
    std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<DocumentSection>& sections,
                         const std::vector<Chunk>& chunks) {
  std::set<std::string> docs;
  for (const auto& s : sections) docs.insert(s.doc_id);
  return {docs.size(), sections.size(), chunks.size()};
}

nlohmann::json chunk_record(const Chunk& chunk, const DocumentSection& parent) {
  nlohmann::json j;
  j["chunk_id"] = chunk.chunk_id;
  j["doc_id"] = chunk.parent.doc_id;
  j["section_id"] = chunk.parent.section_id;
  j["ordinal"] = chunk.ordinal;
  j["char_start"] = chunk.char_start;
  j["char_end"] = chunk.char_end;
  j["text"] = chunk.text;
  j["source_kind"] = to_string(parent.source_kind);
  j["title"] = parent.title;
  j["url"] = parent.url ? nlohmann::json(*parent.url) : nlohmann::json(nullptr);
  j["heading"] = parent.heading;
  return j;
}

ChunkRecord parse_chunk_record(const nlohmann::json& j) {
  ChunkRecord r;
  try {
    r.chunk.chunk_id = j.at("chunk_id").get<std::string>();
    r.chunk.parent = {j.at("doc_id").get<std::string>(), j.at("section_id").get<std::string>()};
    r.chunk.ordinal = j.at("ordinal").get<std::size_t>();
    r.chunk.char_start = j.at("char_start").get<std::size_t>();
    r.chunk.char_end = j.at("char_end").get<std::size_t>();
    r.chunk.text = j.at("text").get<std::string>();

    r.parent.doc_id = r.chunk.parent.doc_id;
    r.parent.section_id = r.chunk.parent.section_id;
    const auto kind_text = j.at("source_kind").get<std::string>();
    const auto kind = parse_source_kind(kind_text);
    if (!kind) throw IndexFormatError("unknown source_kind '" + kind_text + "'");
    r.parent.source_kind = *kind;
    r.parent.title = j.at("title").get<std::string>();
    if (j.contains("url") && !j["url"].is_null()) r.parent.url = j["url"].get<std::string>();
    r.parent.heading = j.value("heading", "");
  } catch (const nlohmann::json::exception& e) {
    throw IndexFormatError(std::string("bad chunk record: ") + e.what());
  }
  return r;
}

std::vector<DocumentSection> reassemble_sections(const std::vector<ChunkRecord>& records) {
  // Keep first-appearance order of sections.
  std::map<SectionKey, std::size_t> slot;
  std::vector<DocumentSection> sections;
  std::vector<std::vector<const Chunk*>> parts;
  for (const auto& r : records) {
    auto [it, inserted] = slot.try_emplace(r.chunk.parent, sections.size());
    if (inserted) {
      sections.push_back(r.parent);
      sections.back().body.clear();
      parts.emplace_back();
    }
    parts[it->second].push_back(&r.chunk);
  }
  for (std::size_t i = 0; i < sections.size(); ++i) {
    auto& ps = parts[i];
    std::sort(ps.begin(), ps.end(),
              [](const Chunk* a, const Chunk* b) { return a->ordinal < b->ordinal; });
    std::size_t expected = 0;
    for (std::size_t o = 0; o < ps.size(); ++o) {
      if (ps[o]->ordinal != o || ps[o]->char_start != expected) {
        throw IndexFormatError("chunks of " + sections[i].doc_id + "/" + sections[i].section_id +
                               " are not contiguous");
      }
      expected = ps[o]->char_end;
      sections[i].body += ps[o]->text;
    }
  }
  return sections;
}

}  // namespace ragmat::corpus
