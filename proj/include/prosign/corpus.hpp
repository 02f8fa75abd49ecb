#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace prosign {

// One utterance of the running text.
struct Segment {
  std::string id;
  std::string chapter_id;
  int order_index = 0;
  std::string text;
  std::optional<std::filesystem::path> audio_path;
  std::optional<std::filesystem::path> alignment_path;

  bool operator==(const Segment&) const = default;
};

struct Phone {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const Phone&) const = default;
};

struct WordAlignment {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<Phone> phones;

  bool operator==(const WordAlignment&) const = default;
};

enum class TextField { normalized, raw };

struct CorpusLayout {
  TextField text_field = TextField::normalized;
  // When set, segments get `<dir>/<id>.wav` / `<dir>/<id>.json` references.
  std::optional<std::filesystem::path> audio_dir;
  std::optional<std::filesystem::path> alignment_dir;
};

class CorpusManifest {
 public:
  CorpusManifest() = default;
  // Sorts by id, derives chapters and order indices, validates uniqueness.
  explicit CorpusManifest(std::vector<Segment> segments,
                          std::unordered_set<std::string> stopwords = {});

  const std::vector<Segment>& segments() const { return segments_; }
  const std::unordered_set<std::string>& stopwords() const { return stopwords_; }
  void set_stopwords(std::unordered_set<std::string> words) { stopwords_ = std::move(words); }

  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }

  // Throws LookupError for unknown ids.
  std::size_t position(std::string_view id) const;
  const Segment& at(std::string_view id) const { return segments_[position(id)]; }
  bool contains(std::string_view id) const;

  bool is_stopword(std::string_view normalized_word) const;

  bool operator==(const CorpusManifest& o) const {
    return segments_ == o.segments_ && stopwords_ == o.stopwords_;
  }

 private:
  std::vector<Segment> segments_;
  std::unordered_set<std::string> stopwords_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "LJ001-0007" -> "LJ001". Ids without a trailing "-<digits>" are their own chapter.
std::string chapter_of(std::string_view id);

CorpusManifest load_manifest(const std::filesystem::path& metadata_path,
                             const CorpusLayout& layout = {});
CorpusManifest parse_manifest(std::string_view metadata_text, const CorpusLayout& layout = {});

// Full-fidelity JSON persistence of a manifest (all Segment fields and the
// stop-word lexicon).
std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(std::string_view json_text);

std::unordered_set<std::string> parse_stopwords(std::string_view text);
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

std::vector<WordAlignment> parse_alignment(std::string_view json_text);
std::vector<WordAlignment> load_alignment(const std::filesystem::path& path);
std::string alignment_to_json(const std::vector<WordAlignment>& words);

// Silence markers emitted by aligners ("sil", "sp", "<sil>", empty).
bool is_silence_label(std::string_view label);

struct WordMatch {
  std::size_t text_index;
  std::size_t alignment_index;
  bool operator==(const WordMatch&) const = default;
};

struct MatchResult {
  std::vector<WordMatch> pairs;
  std::vector<std::size_t> unmatched_text;
  // Non-silence alignment entries that were skipped.
  std::vector<std::size_t> unmatched_alignment;
};

// Greedy in-order matching of split_words(segment_text) against the
// alignment. Each text word takes the first equal alignment word at or after
// the cursor; when none exists the word is reported and the cursor stays.
MatchResult match_words(std::string_view segment_text, const std::vector<WordAlignment>& alignments);

}  // namespace prosign
