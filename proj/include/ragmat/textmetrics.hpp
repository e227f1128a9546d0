#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ragmat::textmetrics {

struct TextCounts {
  std::size_t num_words = 0;
  std::size_t num_syllables = 0;
  std::size_t num_sentences = 0;

  friend bool operator==(const TextCounts&, const TextCounts&) = default;
};

struct ReadabilityReport {
  TextCounts counts;
  double fres = 0.0;
  std::string grade_label;
};

struct Tokens {
  std::vector<std::string> words;
  std::vector<std::string> sentences;
};

/// Drop markdown emphasis, heading and list markers; join lines with spaces,
/// terminating any non-final line that lacks . ! or ? with a period.
std::string strip_markup(std::string_view text);

/// Sentences end at . ! ? followed by whitespace or end of text, except after
/// a known abbreviation. Words are runs of letters, digits, apostrophes and
/// internal hyphens.
Tokens tokenize(std::string_view text);

/// Vowel-group heuristic with silent-e handling; never below 1.
std::size_t count_syllables(std::string_view word);

TextCounts count_text(std::string_view plain_text);

/// 206.835 - 1.015 (W/S) - 84.6 (Sy/W), unclamped. Throws DegenerateText.
double fres(const TextCounts& counts);

/// Flesch reading-ease band label ("5th Grade" ... "College Graduate").
std::string grade_label(double fres);

/// strip_markup -> tokenize -> counts -> fres -> label.
ReadabilityReport analyze(std::string_view raw_text);

/// One row of readability.csv.
struct ReadabilityRow {
  std::string config_label;
  std::string profile_id;
  double fres = 0.0;
  std::string grade_label;
  TextCounts counts;
};

inline constexpr std::string_view kReadabilityCsvHeader =
    "config_label,profile_id,fres,grade_label,num_words,num_syllables,num_sentences";

std::string to_csv(const std::vector<ReadabilityRow>& rows);

/// Throws std::invalid_argument naming the offending line.
std::vector<ReadabilityRow> parse_readability_csv(std::string_view text);

}  // namespace ragmat::textmetrics
