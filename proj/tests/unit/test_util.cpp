#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "ragmat/util.hpp"

using namespace ragmat;

TEST_CASE("utf8 boundaries count scalar values") {
  CHECK(utf8::length("") == 0);
  CHECK(utf8::length("abc") == 3);
  CHECK(utf8::length("caf\xC3\xA9") == 4);
  CHECK(utf8::length("\xF0\x9F\x98\x80x") == 2);
  const auto b = utf8::boundaries("a\xC3\xA9z");
  CHECK(b == std::vector<std::size_t>{0, 1, 3, 4});
}

TEST_CASE("invalid utf8 advances one byte per scalar") {
  CHECK(utf8::length("\xC3") == 1);
  CHECK(utf8::length("\xFF\xFE") == 2);
}

TEST_CASE("whitespace helpers") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(trim("") == "");
  CHECK(normalize_whitespace("  a \t\n b   c ") == "a b c");
  CHECK(to_upper_ascii("gpt-4o") == "GPT-4O");
  CHECK(to_lower_ascii("Dr.") == "dr.");
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("sha256 matches the standard test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("timestamps are ISO-8601 UTC with milliseconds") {
  const auto ts = utc_timestamp();
  REQUIRE(ts.size() == 24);
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
}

TEST_CASE("atomic writes replace the file and leave no temp behind") {
  testing::TempDir dir;
  const auto p = dir / "out.txt";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two\nthree\n\n");
  CHECK(read_file(p) == "two\nthree\n\n");
  CHECK(read_lines(p) == std::vector<std::string>{"two", "three"});
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
}

TEST_CASE("csv escaping round-trips through the parser") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", "", "multi\nline"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv::escape(fields[i]);
  }
  CHECK(csv::parse_line(line) == fields);
  CHECK(csv::escape("plain") == "plain");
}
