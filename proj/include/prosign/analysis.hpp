#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosign/corpus.hpp"
#include "prosign/givenness.hpp"
#include "prosign/prominence.hpp"
#include "prosign/surprisal.hpp"

namespace prosign {

struct WordRecord {
  std::string segment_id;
  int word_index = 0;
  std::string word;
  bool is_stopword = false;
  // Keyed by variant ("unigram", "sup_0", ...); qualified as
  // "<model_id>:<variant>" when the table holds several language models.
  std::map<std::string, double> surprisal;
  WordProsody prosody;
  std::optional<GivennessRecord> givenness;

  WordKey key() const { return {segment_id, word_index}; }
  bool operator==(const WordRecord&) const = default;
};

struct JoinOptions {
  // Fraction of keys (union over tables) allowed to drop out of the join.
  double max_loss = 0.05;
};

struct JoinResult {
  std::vector<WordRecord> records;
  std::size_t universe = 0;
  std::size_t missing_surprisal = 0;
  std::size_t missing_prosody = 0;
  std::size_t missing_givenness = 0;
};

// Inner join on (segment_id, word_index). An empty givenness table means
// givenness is not joined. Records come out in manifest order. Throws
// ValidationError on duplicate keys, keys absent from the corpus, or a loss
// above options.max_loss.
JoinResult join_records(std::span<const WordSurprisal> surprisal,
                        std::span<const WordProsody> prosody,
                        std::span<const GivennessRecord> givenness, const CorpusManifest& manifest,
                        const JoinOptions& options = {});

enum class WordGroup { all, stop, content };
std::string_view group_name(WordGroup g);
WordGroup parse_group(std::string_view name);

// prominence, duration, f0-mean, f0-sd, intensity-mean, intensity-sd
const std::vector<std::string>& prosodic_measures();

// A prosodic measure by name, else a surprisal variant key. Empty when the
// record does not carry the quantity.
std::optional<double> quantity(const WordRecord& record, std::string_view name);

struct CorrelationEntry {
  std::string variant;
  std::string measure;
  WordGroup group = WordGroup::all;
  // Empty when fewer than 3 complete pairs or a side has no rank variance.
  std::optional<double> rho;
  std::size_t n = 0;
};

struct CorrelationReport {
  std::vector<CorrelationEntry> entries;
};

// Spearman rho per (variant x measure x group) with pairwise deletion.
// Records are put in key order first, so the result does not depend on the
// input order.
CorrelationReport correlation_grid(std::span<const WordRecord> records,
                                   std::span<const std::string> variants,
                                   std::span<const std::string> measures,
                                   std::span<const WordGroup> groups);

// variant,measure,group,rho,n
std::string correlation_to_csv(const CorrelationReport& report);

struct ScatterGroup {
  WordGroup group = WordGroup::all;
  std::vector<std::pair<double, double>> points;
  std::vector<std::size_t> hist_x;
  std::vector<std::size_t> hist_y;
};

struct ScatterExport {
  std::string variant;
  std::string measure;
  // Added before the square root so that both axes are non-negative.
  double x_shift = 0.0;
  double y_shift = 0.0;
  std::pair<double, double> x_range;
  std::pair<double, double> y_range;
  std::size_t bins = 64;
  std::size_t skipped = 0;
  std::vector<ScatterGroup> groups;  // stop, content
};

// x = sqrt(surprisal variant + x_shift), y = sqrt(measure + y_shift), split
// into stop/content with marginal histograms over a shared range.
ScatterExport scatter_export(std::span<const WordRecord> records, std::string_view variant,
                             std::string_view measure, std::size_t bins = 64);
std::string scatter_to_json(const ScatterExport& scatter);

std::string records_to_csv(std::span<const WordRecord> records);
std::vector<WordRecord> records_from_csv(std::string_view text);

}  // namespace prosign
