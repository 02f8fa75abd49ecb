#include "prosign/givenness.hpp"

#include <cmath>
#include <unordered_map>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/text.hpp"

namespace prosign {

std::vector<GivennessRecord> assign_distances(const CorpusManifest& manifest,
                                              const GivennessOptions& options) {
  std::vector<GivennessRecord> out;
  std::unordered_map<std::string, long> last_seen;
  std::string chapter;
  long position = 0;
  for (const auto& seg : manifest.segments()) {
    if (options.reset_at_chapter && seg.chapter_id != chapter) last_seen.clear();
    chapter = seg.chapter_id;
    const auto words = split_words(seg.text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      GivennessRecord r;
      r.segment_id = seg.id;
      r.word_index = static_cast<int>(i);
      r.word = words[i].norm;
      r.is_content = !manifest.is_stopword(r.word);
      auto it = last_seen.find(r.word);
      if (it != last_seen.end() && position - it->second <= options.lookback_sentences)
        r.distance = static_cast<int>(position - it->second);
      last_seen[r.word] = position;
      out.push_back(std::move(r));
    }
    ++position;
  }
  return out;
}

std::map<WordKey, double> novelty_normalize(const std::map<WordKey, double>& values,
                                            std::span<const GivennessRecord> records) {
  std::vector<double> novel;
  for (const auto& r : records) {
    if (r.distance) continue;
    auto it = values.find(r.key());
    if (it != values.end() && std::isfinite(it->second)) novel.push_back(it->second);
  }
  if (novel.size() < 2)
    throw ValidationError("novelty normalization needs at least two novel values, got " +
                          std::to_string(novel.size()));
  double mean = 0.0;
  for (double v : novel) mean += v;
  mean /= static_cast<double>(novel.size());
  double var = 0.0;
  for (double v : novel) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(novel.size()));
  if (!(sd > 0.0)) throw ValidationError("novel values have zero standard deviation");

  std::map<WordKey, double> out;
  for (const auto& r : records) {
    auto it = values.find(r.key());
    if (it != values.end()) out.emplace(r.key(), (it->second - mean) / sd);
  }
  return out;
}

std::vector<ProfileBucket> givenness_profile(const std::map<WordKey, double>& values,
                                             std::span<const GivennessRecord> records,
                                             int max_distance) {
  const auto n_buckets = static_cast<std::size_t>(max_distance) + 2;
  std::vector<ProfileBucket> buckets(n_buckets);
  std::vector<double> sums(n_buckets, 0.0);
  std::vector<std::size_t> with_value(n_buckets, 0);
  for (int d = 0; d <= max_distance; ++d) buckets[static_cast<std::size_t>(d)].distance = d;
  for (const auto& r : records) {
    std::size_t b = n_buckets - 1;
    if (r.distance) {
      if (*r.distance > max_distance) continue;
      b = static_cast<std::size_t>(*r.distance);
    }
    ++buckets[b].count;
    auto it = values.find(r.key());
    if (it != values.end()) {
      sums[b] += it->second;
      ++with_value[b];
    }
  }
  for (std::size_t b = 0; b < n_buckets; ++b)
    if (with_value[b]) buckets[b].mean = sums[b] / static_cast<double>(with_value[b]);
  return buckets;
}

std::string givenness_to_csv(std::span<const GivennessRecord> records) {
  CsvWriter csv({"segment_id", "word_index", "word", "distance", "is_content"});
  for (const auto& r : records)
    csv.row({r.segment_id, std::to_string(r.word_index), r.word,
             r.distance ? std::to_string(*r.distance) : "novel", r.is_content ? "1" : "0"});
  return csv.str();
}

std::vector<GivennessRecord> givenness_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  auto c_seg = t.column("segment_id"), c_idx = t.column("word_index"), c_word = t.column("word"),
       c_dist = t.column("distance"), c_content = t.column("is_content");
  std::vector<GivennessRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      GivennessRecord r;
      r.segment_id = f[c_seg];
      r.word_index = static_cast<int>(parse_int(f[c_idx]));
      r.word = f[c_word];
      if (f[c_dist] != "novel") r.distance = static_cast<int>(parse_int(f[c_dist]));
      r.is_content = f[c_content] == "1";
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return out;
}

std::string profile_to_csv(std::span<const ProfileBucket> prom, std::span<const ProfileBucket> sup0,
                           std::span<const ProfileBucket> sup5) {
  if (prom.size() != sup0.size() || prom.size() != sup5.size())
    throw ValidationError("profiles have different bucket counts");
  auto cell = [](const std::optional<double>& m) { return m ? format_report(*m) : std::string(); };
  CsvWriter csv({"distance", "mean_prom", "mean_sup0", "mean_sup5", "count"});
  for (std::size_t b = 0; b < prom.size(); ++b)
    csv.row({prom[b].distance ? std::to_string(*prom[b].distance) : "novel", cell(prom[b].mean),
             cell(sup0[b].mean), cell(sup5[b].mean), std::to_string(prom[b].count)});
  return csv.str();
}

}  // namespace prosign
