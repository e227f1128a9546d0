#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "ragmat/corpus.hpp"
#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

using namespace ragmat;
using namespace ragmat::corpus;

namespace {

DocumentSection section_with(std::string body) {
  return {"doc", SourceKind::guideline, "Title", std::nullopt, "s1", "Heading", std::move(body)};
}

std::string join_chunks(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) out += c.text;
  return out;
}

}  // namespace

TEST_CASE("one file with two sections parses in document order") {
  const auto sections = parse_document(R"(<document doc_id="d" source_kind="medlineplus" title="T">
      <section section_id="b" heading="Second">  first body </section>
      <section section_id="a" heading="First">second body</section>
    </document>)",
                                       "mem.xml");
  REQUIRE(sections.size() == 2);
  CHECK(sections[0].section_id == "b");
  CHECK(sections[0].body == "first body");
  CHECK(sections[1].section_id == "a");
  CHECK_FALSE(sections[0].url.has_value());
  CHECK(sections[0].source_kind == SourceKind::medlineplus);
}

TEST_CASE("schema violations are MalformedXml") {
  const char* cases[] = {
      R"(<document doc_id="d" source_kind="medlineplus" title="T"><section section_id="s" heading="h">   </section></document>)",
      R"(<document doc_id="d" source_kind="blog" title="T"><section section_id="s" heading="h">x</section></document>)",
      R"(<document source_kind="guideline" title="T"><section section_id="s" heading="h">x</section></document>)",
      R"(<document doc_id="d" source_kind="guideline" title="T"><section heading="h">x</section></document>)",
      R"(<document doc_id="d" source_kind="guideline" title="T"><para>x</para></document>)",
      R"(<document doc_id="d" source_kind="guideline" title="T"><section section_id="s" heading="h">x<b>y</b></section></document>)",
      R"(<document doc_id="d" source_kind="guideline" title="T"><section section_id="s" heading="h">x</section>)",
      R"(<root/>)",
  };
  for (const char* xml : cases) {
    INFO(xml);
    CHECK_THROWS_AS(parse_document(xml, "bad.xml"), MalformedXml);
  }
}

TEST_CASE("duplicate section ids are rejected") {
  CHECK_THROWS_AS(parse_document(R"(<document doc_id="d" source_kind="guideline" title="T">
      <section section_id="s" heading="h">x</section><section section_id="s" heading="h">y</section>
    </document>)",
                                 "dup.xml"),
                  DuplicateSectionId);

  testing::TempDir dir;
  const std::string doc =
      R"(<document doc_id="same" source_kind="guideline" title="T"><section section_id="s" heading="h">x</section></document>)";
  write_file_atomic(dir / "a.xml", doc);
  write_file_atomic(dir / "b.xml", doc);
  CHECK_THROWS_AS(parse_corpus(dir.path()), DuplicateSectionId);
}

TEST_CASE("a malformed file in a corpus is reported, not skipped") {
  testing::TempDir dir;
  write_file_atomic(dir / "ok.xml",
                    R"(<document doc_id="a" source_kind="guideline" title="T"><section section_id="s" heading="h">x</section></document>)");
  write_file_atomic(dir / "empty.xml",
                    R"(<document doc_id="b" source_kind="guideline" title="T"><section section_id="s" heading="h"></section></document>)");
  try {
    parse_corpus(dir.path());
    FAIL("expected MalformedXml");
  } catch (const MalformedXml& e) {
    CHECK(std::string(e.what()).find("empty.xml") != std::string::npos);
  }
}

TEST_CASE("entities and CDATA decode into the body") {
  const auto s = parse_document(R"(<document doc_id="d" source_kind="journal_article" title="A &amp; B" url="https://x">
      <section section_id="s" heading="h">Knees &lt; hips <![CDATA[& more]]></section></document>)",
                                "e.xml");
  REQUIRE(s.size() == 1);
  CHECK(s[0].title == "A & B");
  CHECK(s[0].url == "https://x");
  CHECK(s[0].body == "Knees < hips & more");
}

TEST_CASE("fixture corpus counts") {
  const auto sections = parse_corpus(testing::fixture_path("corpus_small"));
  const auto chunks = chunk_corpus(sections, 200);
  CHECK(corpus_stats(sections, chunks) == CorpusStats{3, 10, 14});

  // lexicographic by relative path: a_lifting.xml, b_desk.xml, sub/c_article.xml
  CHECK(sections.front().doc_id == "medline-lift");
  CHECK(sections.back().doc_id == "journal-activity");
  CHECK(sections[3].doc_id == "guideline-desk");
  CHECK(sections[3].section_id == "d1");
}

TEST_CASE("parsing is deterministic") {
  const auto a = parse_corpus(testing::fixture_path("corpus_small"));
  const auto b = parse_corpus(testing::fixture_path("corpus_small"));
  CHECK(a == b);
}

TEST_CASE("empty directory and empty inputs") {
  testing::TempDir dir;
  CHECK(parse_corpus(dir.path()).empty());
  CHECK(corpus_stats({}, {}) == CorpusStats{0, 0, 0});
}

TEST_CASE("two sections from one file with large chunks") {
  const auto sections = parse_document(R"(<document doc_id="d" source_kind="guideline" title="T">
      <section section_id="a" heading="h">alpha</section><section section_id="b" heading="h">beta</section>
    </document>)",
                                       "two.xml");
  CHECK(corpus_stats(sections, chunk_corpus(sections, 1000)) == CorpusStats{1, 2, 2});
}

TEST_CASE("chunk_section slicing examples") {
  SECTION("2500 chars at 1000") {
    const auto chunks = chunk_section(section_with(std::string(2500, 'x')), 1000);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].text.size() == 1000);
    CHECK(chunks[1].text.size() == 1000);
    CHECK(chunks[2].text.size() == 500);
  }
  SECTION("exact fit is the identity") {
    const std::string body(1000, 'y');
    const auto chunks = chunk_section(section_with(body), 1000);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].text == body);
  }
  SECTION("abcdef at 4") {
    const auto chunks = chunk_section(section_with("abcdef"), 4);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "abcd");
    CHECK(chunks[1].text == "ef");
    CHECK(chunks[0].char_start == 0);
    CHECK(chunks[0].char_end == 4);
    CHECK(chunks[1].char_start == 4);
    CHECK(chunks[1].char_end == 6);
    CHECK(chunks[1].ordinal == 1);
    CHECK(chunks[1].chunk_id == make_chunk_id({"doc", "s1"}, 1));
  }
  SECTION("zero size is rejected") {
    CHECK_THROWS_AS(chunk_section(section_with("abc"), 0), std::invalid_argument);
  }
}

TEST_CASE("chunks count unicode scalars, not bytes") {
  const std::string body = "\xC3\xA9\xC3\xA9\xC3\xA9\xE2\x82\xAC";  // e-acute x3, euro sign
  const auto chunks = chunk_section(section_with(body), 2);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].text == "\xC3\xA9\xC3\xA9");
  CHECK(chunks[1].text == "\xC3\xA9\xE2\x82\xAC");
  CHECK(chunks[1].char_start == 2);
  CHECK(chunks[1].char_end == 4);
}

TEST_CASE("round-trip and uniform size over random bodies") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> alphabet = {"a", " ", "\n", "\xC3\xA9", "\xE2\x80\x94", "\xF0\x9F\x92\xAA", "Z", "."};
  for (int trial = 0; trial < 300; ++trial) {
    std::string body = "x";
    const auto len = std::uniform_int_distribution<int>(0, 400)(rng);
    for (int i = 0; i < len; ++i) body += alphabet[rng() % alphabet.size()];
    body += "y";
    for (std::size_t size : {1u, 3u, 7u, 64u, 1000u}) {
      const auto chunks = chunk_section(section_with(body), size);
      const auto n = utf8::length(body);
      REQUIRE(chunks.size() == (n + size - 1) / size);
      CHECK(join_chunks(chunks) == body);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto len_i = utf8::length(chunks[i].text);
        if (i + 1 < chunks.size()) {
          CHECK(len_i == size);
        } else {
          CHECK(len_i >= 1);
          CHECK(len_i <= size);
        }
        CHECK(chunks[i].char_end - chunks[i].char_start == len_i);
        if (i > 0) CHECK(chunks[i].char_start == chunks[i - 1].char_end);
      }
    }
  }
}

TEST_CASE("chunk records round-trip through JSON and reassemble sections") {
  const auto sections = parse_corpus(testing::fixture_path("corpus_small"));
  const auto chunks = chunk_corpus(sections, 50);
  std::map<SectionKey, const DocumentSection*> parents;
  for (const auto& s : sections) parents[{s.doc_id, s.section_id}] = &s;
  std::vector<ChunkRecord> records;
  for (const auto& c : chunks) {
    const auto j = chunk_record(c, *parents.at(c.parent));
    for (const char* field : {"chunk_id", "doc_id", "section_id", "ordinal", "char_start", "char_end", "text",
                              "source_kind", "title", "url", "heading"}) {
      CHECK(j.contains(field));
    }
    records.push_back(parse_chunk_record(nlohmann::json::parse(j.dump())));
    CHECK(records.back().chunk == c);
  }
  CHECK(reassemble_sections(records) == sections);

  records.erase(records.begin() + 1);
  CHECK_THROWS_AS(reassemble_sections(records), IndexFormatError);
}
