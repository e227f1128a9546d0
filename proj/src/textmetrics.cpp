#include "ragmat/textmetrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

#include "ragmat/error.hpp"
#include "ragmat/util.hpp"

namespace ragmat::textmetrics {

namespace {

constexpr std::string_view kRightSingleQuote = "\xE2\x80\x99";

bool is_ascii_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_non_ascii(char c) { return static_cast<unsigned char>(c) >= 0x80; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Word characters: ASCII letters/digits plus any non-ASCII byte (accented
// letters). Curly apostrophes are handled separately.
bool is_word_char(char c) { return is_ascii_alnum(c) || is_non_ascii(c); }

std::string strip_line_markers(std::string line) {
  std::size_t i = 0;
  // headings
  while (i < line.size() && line[i] == '#') ++i;
  if (i > 0 && (i == line.size() || is_space(line[i]))) {
    line.erase(0, i);
  } else {
    i = 0;
  }
  line = trim(line);
  // bullets: "- ", "* ", "+ "
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') && is_space(line[1])) {
    line = trim(std::string_view(line).substr(2));
  }
  // ordered list: "12. " or "3) "
  std::size_t d = 0;
  while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
  if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') && is_space(line[d + 1])) {
    line = trim(std::string_view(line).substr(d + 1));
  }
  return line;
}

std::string strip_emphasis(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '*') continue;
    if (c == '_') {
      const bool inner = i > 0 && i + 1 < s.size() && is_word_char(s[i - 1]) && is_word_char(s[i + 1]);
      if (!inner) continue;
    }
    out.push_back(c);
  }
  return out;
}

bool ends_sentence(std::string_view line) {
  std::size_t e = line.size();
  while (e > 0 && (line[e - 1] == '"' || line[e - 1] == '\'' || line[e - 1] == ')')) --e;
  return e > 0 && is_terminal(line[e - 1]);
}

constexpr std::array<std::string_view, 16> kAbbreviations = {
    "dr", "mr", "mrs", "ms", "prof", "sr", "jr", "st", "vs", "e.g", "i.e", "approx", "fig",
    "dept", "mt", "no"};

bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && (is_ascii_alnum(text[b - 1]) || text[b - 1] == '.')) --b;
  const auto token = to_lower_ascii(text.substr(b, dot - b));
  if (token.empty()) return false;
  if (token == "no") {
    // "No." only abbreviates "number" before a digit.
    std::size_t n = dot + 1;
    while (n < text.size() && is_space(text[n])) ++n;
    return n < text.size() && std::isdigit(static_cast<unsigned char>(text[n]));
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end();
}

// Length of a U+2000..U+206F punctuation sequence (curly quotes, dashes) at i.
std::size_t general_punctuation(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      (static_cast<unsigned char>(s[i + 1]) == 0x80 || static_cast<unsigned char>(s[i + 1]) == 0x81)) {
    return 3;
  }
  return 0;
}

bool word_char_at(std::string_view s, std::size_t i) {
  return i < s.size() && is_word_char(s[i]) && general_punctuation(s, i) == 0;
}

void split_words(std::string_view s, std::vector<std::string>& words) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!word_char_at(s, i)) {
      i += std::max<std::size_t>(1, general_punctuation(s, i));
      continue;
    }
    std::string word;
    while (i < s.size()) {
      if (word_char_at(s, i)) {
        word.push_back(s[i++]);
      } else if ((s[i] == '\'' || s[i] == '-') && word_char_at(s, i + 1)) {
        word.push_back(s[i++]);
      } else if (s.substr(i, kRightSingleQuote.size()) == kRightSingleQuote &&
                 word_char_at(s, i + kRightSingleQuote.size())) {
        word.push_back('\'');
        i += kRightSingleQuote.size();
      } else {
        break;
      }
    }
    words.push_back(std::move(word));
  }
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
  }
}

}  // namespace

std::string strip_markup(std::string_view text) {
  std::string unescaped;
  unescaped.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == 'n') {
      unescaped.push_back('\n');
      ++i;
    } else {
      unescaped.push_back(text[i]);
    }
  }

  std::vector<std::string> lines;
  for (auto& raw : split(unescaped, '\n')) {
    auto line = trim(strip_emphasis(strip_line_markers(trim(raw))));
    line = normalize_whitespace(line);
    if (!line.empty()) lines.push_back(std::move(line));
  }

  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += lines[i];
    if (i + 1 < lines.size() && !ends_sentence(lines[i])) out.push_back('.');
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  Tokens t;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto sentence = trim(text.substr(start, end - start));
    std::vector<std::string> words;
    split_words(sentence, words);
    if (!words.empty()) {
      t.sentences.push_back(std::move(sentence));
      std::move(words.begin(), words.end(), std::back_inserter(t.words));
    }
    start = end;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t j = i;
    while (j + 1 < text.size() && is_terminal(text[j + 1])) ++j;
    std::size_t after = j + 1;
    while (after < text.size() && (text[after] == '"' || text[after] == '\'' || text[after] == ')')) {
      ++after;
    }
    const bool boundary = after == text.size() || is_space(text[after]);
    if (boundary && !(i == j && text[i] == '.' && is_abbreviation(text, i))) {
      flush(after);
    }
    i = j;
  }
  flush(text.size());
  return t;
}

std::size_t count_syllables(std::string_view word) {
  std::string w;
  for (char c : to_lower_ascii(word)) {
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(c);
  }
  if (w.empty()) return 1;

  std::size_t groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (w.size() >= 2 && w.back() == 'e') {
    const bool consonant_le = w.size() >= 3 && w[w.size() - 2] == 'l' && !is_vowel(w[w.size() - 3]);
    if (!consonant_le && groups > 0) --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

TextCounts count_text(std::string_view plain_text) {
  const auto tokens = tokenize(plain_text);
  TextCounts c;
  c.num_words = tokens.words.size();
  c.num_sentences = tokens.sentences.size();
  for (const auto& w : tokens.words) c.num_syllables += count_syllables(w);
  return c;
}

double fres(const TextCounts& counts) {
  if (counts.num_words == 0 || counts.num_sentences == 0) {
    throw DegenerateText("reading ease needs at least one word and one sentence");
  }
  const double words = static_cast<double>(counts.num_words);
  return 206.835 - 1.015 * (words / static_cast<double>(counts.num_sentences)) -
         84.6 * (static_cast<double>(counts.num_syllables) / words);
}

std::string grade_label(double score) {
  if (score >= 90.0) return "5th Grade";
  if (score >= 80.0) return "6th Grade";
  if (score >= 70.0) return "7th Grade";
  if (score >= 60.0) return "9th Grade";
  if (score >= 50.0) return "10th-12th Grade";
  if (score >= 30.0) return "College";
  return "College Graduate";
}

ReadabilityReport analyze(std::string_view raw_text) {
  ReadabilityReport r;
  r.counts = count_text(strip_markup(raw_text));
  r.fres = fres(r.counts);
  r.grade_label = grade_label(r.fres);
  return r;
}

std::string to_csv(const std::vector<ReadabilityRow>& rows) {
  std::string out(kReadabilityCsvHeader);
  out += '\n';
  char num[64];
  for (const auto& r : rows) {
    std::snprintf(num, sizeof num, "%.17g", r.fres);
    out += csv::escape(r.config_label) + ',' + csv::escape(r.profile_id) + ',' + num + ',' +
           csv::escape(r.grade_label) + ',' + std::to_string(r.counts.num_words) + ',' +
           std::to_string(r.counts.num_syllables) + ',' + std::to_string(r.counts.num_sentences) +
           '\n';
  }
  return out;
}

std::vector<ReadabilityRow> parse_readability_csv(std::string_view text) {
  std::vector<ReadabilityRow> rows;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!header_seen) {
      if (trim(line) != kReadabilityCsvHeader) {
        throw std::invalid_argument("readability csv line " + std::to_string(line_no) +
                                    ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    const auto f = csv::parse_line(line);
    if (f.size() != 7) {
      throw std::invalid_argument("readability csv line " + std::to_string(line_no) +
                                  ": expected 7 fields");
    }
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), f[3],
                      {std::stoul(f[4]), std::stoul(f[5]), std::stoul(f[6])}});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("readability csv line " + std::to_string(line_no) +
                                  ": bad number");
    }
  }
  return rows;
}

}  // namespace ragmat::textmetrics
