#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosign/corpus.hpp"

namespace prosign {

// (segment_id, word_index) identifies a word occurrence everywhere.
struct WordKey {
  std::string segment_id;
  int word_index = 0;

  auto operator<=>(const WordKey&) const = default;
  bool operator==(const WordKey&) const = default;
};

struct GivennessRecord {
  std::string segment_id;
  int word_index = 0;
  // Case-folded, punctuation-stripped form used for identity.
  std::string word;
  // Segments since the previous occurrence; 0 within the same segment.
  // Empty means novel: no occurrence within the lookback window.
  std::optional<int> distance;
  bool is_content = true;

  WordKey key() const { return {segment_id, word_index}; }
  bool operator==(const GivennessRecord&) const = default;
};

struct GivennessOptions {
  int lookback_sentences = 10;
  bool reset_at_chapter = true;
};

// One record per word of every segment, in running-text order. Distances are
// computed for every word; `is_content` marks non-stop-words.
std::vector<GivennessRecord> assign_distances(const CorpusManifest& manifest,
                                              const GivennessOptions& options = {});

// z-scores every value against the mean and population standard deviation
// of the values whose record is novel. Records without a value are skipped.
// Throws ValidationError with fewer than two finite novel values or a zero
// novel standard deviation.
std::map<WordKey, double> novelty_normalize(const std::map<WordKey, double>& values,
                                            std::span<const GivennessRecord> records);

struct ProfileBucket {
  // 0..max_distance, or empty for the novel bucket (emitted last).
  std::optional<int> distance;
  std::size_t count = 0;
  // Empty when no record in the bucket has a value.
  std::optional<double> mean;
};

// Buckets the given records by distance; `count` is the number of records in
// the bucket, `mean` averages the values present.
std::vector<ProfileBucket> givenness_profile(const std::map<WordKey, double>& values,
                                             std::span<const GivennessRecord> records,
                                             int max_distance = 10);

// segment_id,word_index,word,distance,is_content (distance "novel" when empty)
std::string givenness_to_csv(std::span<const GivennessRecord> records);
std::vector<GivennessRecord> givenness_from_csv(std::string_view text);

// distance,mean_prom,mean_sup0,mean_sup5,count for three aligned profiles.
std::string profile_to_csv(std::span<const ProfileBucket> prominence,
                           std::span<const ProfileBucket> sup0, std::span<const ProfileBucket> sup5);

}  // namespace prosign
