#include "prosign/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTimeEps = 1e-9;

std::string describe(const WordAlignment& w, std::size_t i) {
  return "#" + std::to_string(i) + " '" + w.word + "' [" + format_exact(w.start_s) + ", " +
         format_exact(w.end_s) + "]";
}

}  // namespace

std::string chapter_of(std::string_view id) {
  auto dash = id.rfind('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == id.size()) return std::string(id);
  for (auto c : id.substr(dash + 1))
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::string(id);
  return std::string(id.substr(0, dash));
}

CorpusManifest::CorpusManifest(std::vector<Segment> segments,
                               std::unordered_set<std::string> stopwords)
    : segments_(std::move(segments)), stopwords_(std::move(stopwords)) {
  std::sort(segments_.begin(), segments_.end(),
            [](const Segment& a, const Segment& b) { return a.id < b.id; });
  std::map<std::string, int> next_index;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto& s = segments_[i];
    if (i > 0 && segments_[i - 1].id == s.id) throw ValidationError("duplicate segment id " + s.id);
    if (trim(s.text).empty()) throw ValidationError("segment " + s.id + " has empty text");
    s.chapter_id = chapter_of(s.id);
    s.order_index = next_index[s.chapter_id]++;
    index_.emplace(s.id, i);
  }
}

std::size_t CorpusManifest::position(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw LookupError("unknown segment id " + std::string(id));
  return it->second;
}

bool CorpusManifest::contains(std::string_view id) const {
  return index_.count(std::string(id)) != 0;
}

bool CorpusManifest::is_stopword(std::string_view normalized_word) const {
  return stopwords_.count(std::string(normalized_word)) != 0;
}

CorpusManifest parse_manifest(std::string_view metadata_text, const CorpusLayout& layout) {
  std::vector<Segment> segments;
  std::size_t line_no = 0;
  for (auto line : split(metadata_text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '|');
    if (fields.size() != 3)
      throw ParseError("expected 3 '|'-separated fields, got " + std::to_string(fields.size()),
                       line_no);
    Segment s;
    s.id = std::string(trim(fields[0]));
    if (s.id.empty()) throw ParseError("empty segment id", line_no);
    s.text = layout.text_field == TextField::normalized ? fields[2] : fields[1];
    if (trim(s.text).empty()) throw ParseError("empty transcription for " + s.id, line_no);
    if (layout.audio_dir) s.audio_path = *layout.audio_dir / (s.id + ".wav");
    if (layout.alignment_dir) s.alignment_path = *layout.alignment_dir / (s.id + ".json");
    segments.push_back(std::move(s));
  }
  return CorpusManifest(std::move(segments));
}

CorpusManifest load_manifest(const fs::path& metadata_path, const CorpusLayout& layout) {
  auto text = read_file(metadata_path);
  try {
    return parse_manifest(text, layout);
  } catch (const ParseError& e) {
    throw ParseError(metadata_path.string() + ": " + e.what(), e.line());
  }
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json segs = json::array();
  for (const auto& s : manifest.segments()) {
    json j = {{"id", s.id}, {"chapter_id", s.chapter_id}, {"order_index", s.order_index},
              {"text", s.text}};
    j["audio_path"] = s.audio_path ? json(s.audio_path->string()) : json(nullptr);
    j["alignment_path"] = s.alignment_path ? json(s.alignment_path->string()) : json(nullptr);
    segs.push_back(std::move(j));
  }
  std::vector<std::string> stop(manifest.stopwords().begin(), manifest.stopwords().end());
  std::sort(stop.begin(), stop.end());
  json doc = {{"segments", segs}, {"stopwords", stop}};
  return doc.dump(1) + "\n";
}

CorpusManifest manifest_from_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest json: ") + e.what());
  }
  std::vector<Segment> segments;
  for (const auto& j : doc.at("segments")) {
    Segment s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    if (j.contains("audio_path") && !j["audio_path"].is_null())
      s.audio_path = j["audio_path"].get<std::string>();
    if (j.contains("alignment_path") && !j["alignment_path"].is_null())
      s.alignment_path = j["alignment_path"].get<std::string>();
    segments.push_back(std::move(s));
  }
  std::unordered_set<std::string> stop;
  for (const auto& w : doc.value("stopwords", json::array())) stop.insert(w.get<std::string>());
  CorpusManifest m(std::move(segments), std::move(stop));
  for (const auto& j : doc.at("segments")) {
    const auto& s = m.at(j.at("id").get<std::string>());
    if (j.contains("chapter_id") && j["chapter_id"].get<std::string>() != s.chapter_id)
      throw ValidationError("segment " + s.id + ": stored chapter_id disagrees with id");
    if (j.contains("order_index") && j["order_index"].get<int>() != s.order_index)
      throw ValidationError("segment " + s.id + ": stored order_index disagrees with id order");
  }
  return m;
}

std::unordered_set<std::string> parse_stopwords(std::string_view text) {
  std::unordered_set<std::string> out;
  for (const auto& raw : split(text, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    out.insert(to_lower(line));
  }
  return out;
}

std::unordered_set<std::string> load_stopwords(const fs::path& path) {
  return parse_stopwords(read_file(path));
}

bool is_silence_label(std::string_view label) {
  auto n = normalize_word(label);
  return n.empty() || n == "sil" || n == "sp" || n == "spn" || n == "eps";
}

std::vector<WordAlignment> parse_alignment(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("alignment json: ") + e.what());
  }
  std::vector<WordAlignment> words;
  try {
    for (const auto& jw : doc.at("words")) {
      WordAlignment w;
      w.word = jw.at("word").get<std::string>();
      w.start_s = jw.at("start").get<double>();
      w.end_s = jw.at("end").get<double>();
      for (const auto& jp : jw.value("phones", json::array()))
        w.phones.push_back(
            {jp.at("label").get<std::string>(), jp.at("start").get<double>(), jp.at("end").get<double>()});
      words.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("alignment schema: ") + e.what());
  }

  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (!std::isfinite(w.start_s) || !std::isfinite(w.end_s) || w.start_s < 0.0 ||
        !(w.start_s < w.end_s))
      throw ValidationError("word " + describe(w, i) + " needs 0 <= start < end");
    double cursor = w.start_s;
    for (const auto& p : w.phones) {
      if (!(p.start_s < p.end_s))
        throw ValidationError("phone '" + p.label + "' in word " + describe(w, i) +
                              " needs start < end");
      if (p.start_s < cursor - kTimeEps || p.end_s > w.end_s + kTimeEps)
        throw ValidationError("phone '" + p.label + "' [" + format_exact(p.start_s) + ", " +
                              format_exact(p.end_s) + "] overlaps a neighbour or leaves word " +
                              describe(w, i));
      cursor = p.end_s;
    }
  }
  std::stable_sort(words.begin(), words.end(), [](const WordAlignment& a, const WordAlignment& b) {
    return a.start_s < b.start_s;
  });
  for (std::size_t i = 1; i < words.size(); ++i)
    if (words[i].start_s < words[i - 1].end_s - kTimeEps)
      throw ValidationError("overlapping words " + describe(words[i - 1], i - 1) + " and " +
                            describe(words[i], i));
  return words;
}

std::vector<WordAlignment> load_alignment(const fs::path& path) {
  auto text = read_file(path);
  try {
    return parse_alignment(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string alignment_to_json(const std::vector<WordAlignment>& words) {
  json jw = json::array();
  for (const auto& w : words) {
    json phones = json::array();
    for (const auto& p : w.phones)
      phones.push_back({{"label", p.label}, {"start", p.start_s}, {"end", p.end_s}});
    jw.push_back({{"word", w.word}, {"start", w.start_s}, {"end", w.end_s}, {"phones", phones}});
  }
  return json{{"words", jw}}.dump() + "\n";
}

MatchResult match_words(std::string_view segment_text, const std::vector<WordAlignment>& alignments) {
  MatchResult result;
  auto words = split_words(segment_text);
  std::vector<std::string> aligned(alignments.size());
  std::vector<bool> silence(alignments.size());
  for (std::size_t k = 0; k < alignments.size(); ++k) {
    silence[k] = is_silence_label(alignments[k].word);
    aligned[k] = normalize_word(alignments[k].word);
  }

  std::size_t cursor = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::size_t k = cursor;
    while (k < alignments.size() && (silence[k] || aligned[k] != words[i].norm)) ++k;
    if (k == alignments.size()) {
      result.unmatched_text.push_back(i);
      continue;
    }
    for (std::size_t s = cursor; s < k; ++s)
      if (!silence[s]) result.unmatched_alignment.push_back(s);
    result.pairs.push_back({i, k});
    cursor = k + 1;
  }
  for (std::size_t s = cursor; s < alignments.size(); ++s)
    if (!silence[s]) result.unmatched_alignment.push_back(s);
  return result;
}

}  // namespace prosign
