#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ragmat {

namespace utf8 {

// Byte offset of every code point start, plus a final entry == text.size().
// Invalid sequences are treated one byte per scalar so offsets never stall.
std::vector<std::size_t> boundaries(std::string_view text);

std::size_t length(std::string_view text);

}  // namespace utf8

std::string trim(std::string_view s);

// Trim, then collapse internal runs of whitespace into single spaces.
std::string normalize_whitespace(std::string_view s);

std::string to_upper_ascii(std::string_view s);
std::string to_lower_ascii(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string sha256_hex(std::string_view data);

// Current UTC time, e.g. "2026-01-31T12:00:00.123Z".
std::string utc_timestamp();

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Non-empty lines of a text file; missing file yields an empty list.
std::vector<std::string> read_lines(const std::filesystem::path& path);

namespace csv {

std::string escape(std::string_view field);

// RFC 4180 record parsing for a single physical line (no embedded newlines).
std::vector<std::string> parse_line(std::string_view line);

}  // namespace csv

}  // namespace ragmat
