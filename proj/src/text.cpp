#include "prosign/text.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "prosign/error.hpp"

namespace prosign {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_word(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && (is_punct(word[b]) || is_space(word[b]))) ++b;
  while (e > b && (is_punct(word[e - 1]) || is_space(word[e - 1]))) --e;
  return to_lower(word.substr(b, e - b));
}

std::vector<TextWord> split_words(std::string_view text) {
  std::vector<TextWord> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    auto surface = text.substr(i, j - i);
    auto norm = normalize_word(surface);
    if (!norm.empty()) words.push_back({std::string(surface), std::move(norm), i, j});
    i = j;
  }
  return words;
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string format_exact(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_report(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  int n = std::snprintf(buf.data(), buf.size(), "%.6g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not an integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace prosign
