#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace prosign {

// A whitespace-delimited word of a transcription. `surface` keeps any
// punctuation; `norm` is case-folded with leading/trailing punctuation
// stripped. Offsets are bytes into the source text, [begin, end).
struct TextWord {
  std::string surface;
  std::string norm;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Case-fold (ASCII) and strip leading/trailing ASCII punctuation.
std::string normalize_word(std::string_view word);

// Splits on ASCII whitespace. Tokens that normalize to the empty string
// (bare punctuation such as "--") are not words and are skipped, so the
// returned index is the word_index used throughout the toolkit.
std::vector<TextWord> split_words(std::string_view text);

std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Shortest representation that parses back to the identical double.
std::string format_exact(double v);
// Fixed 6 significant digits, used for human-facing reports.
std::string format_report(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace prosign
