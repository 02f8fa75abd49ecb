#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

namespace prosign {

// One tokenizer token of a scored string. `logprob` is the natural-log
// conditional probability; it is empty for a token the producer could not
// condition (the very first token without a begin-of-text symbol), and such
// tokens contribute nothing to surprisal sums. [begin, end) are byte offsets.
struct TokenLogProb {
  std::string text;
  std::optional<double> logprob;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenLogProb&) const = default;
};

// A (context + target) string scored by one model. Bytes before
// `context_char_len` belong to the prepended context.
struct ScoredText {
  std::string model_id;
  int context_sentences = 0;
  std::size_t context_char_len = 0;
  std::string text;
  std::vector<TokenLogProb> tokens;

  std::string_view target() const { return std::string_view(text).substr(context_char_len); }
  bool operator==(const ScoredText&) const = default;
};

// Throws ProtocolError when token spans do not tile `text` exactly (the
// message names the offending offsets) and ValidationError for a positive or
// non-finite log-probability or an out-of-range context length.
void validate_scored(const ScoredText& scored);

// One JSONL line (no trailing newline). Round-trips exactly.
std::string scored_to_json(const ScoredText& scored);
// Parses and validates one JSON object.
ScoredText scored_from_json(std::string_view line);

std::string scored_to_jsonl(std::span<const ScoredText> records);
// Blank lines are ignored. Errors name the 0-based record index.
std::vector<ScoredText> parse_scored_jsonl(std::string_view text);
std::vector<ScoredText> load_scored_file(const std::filesystem::path& path);

struct ScoreRequest {
  std::string model_id;
  std::string text;
  std::size_t context_char_len = 0;
  int context_sentences = 0;
};

class LogProbBackend {
 public:
  virtual ~LogProbBackend() = default;
  virtual ScoredText score(const ScoreRequest& request) = 0;
  // Results are in request order. The default scores sequentially.
  virtual std::vector<ScoredText> score_all(std::span<const ScoreRequest> requests);
};

// Serves precomputed records, keyed by (model_id, text). A record whose
// context was left-truncated by its producer still answers the full request
// when its text is a suffix of the requested text and only context is missing.
class FileBackend : public LogProbBackend {
 public:
  FileBackend() = default;
  explicit FileBackend(std::vector<ScoredText> records);
  static FileBackend from_file(const std::filesystem::path& path);

  void add(ScoredText record);
  std::size_t size() const { return records_.size(); }

  // Throws LookupError when no record matches.
  ScoredText score(const ScoreRequest& request) override;

 private:
  std::map<std::pair<std::string, std::string>, ScoredText> records_;
  // (model_id, context_sentences, target) -> keys of records_
  std::multimap<std::tuple<std::string, int, std::string>, std::pair<std::string, std::string>> by_target_;
};

// On-disk cache of scored texts, one JSONL file per key. Concurrent readers
// are fine; writers for the same key are serialized in-process and publish
// through an atomic rename.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir);

  std::optional<ScoredText> get(const ScoreRequest& request) const;
  void put(const ScoreRequest& request, const ScoredText& scored);
  std::filesystem::path path_for(const ScoreRequest& request) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex locks_mu_;
  mutable std::unordered_map<std::string, std::unique_ptr<std::mutex>> locks_;
  std::mutex& lock_for(const std::string& key) const;
};

struct HttpConfig {
  std::string host = "127.0.0.1";
  int port = 8000;
  std::string path = "/score";
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{60};
  int max_in_flight = 4;
  // Bytes of (context + target) the client sends at most; leftmost context
  // words are dropped to fit. Unset means no client-side limit.
  std::optional<std::size_t> max_text_bytes;
  std::optional<std::filesystem::path> cache_dir;
};

// Client for `POST /score {"model_id", "text", "context_char_len",
// "context_sentences"}` returning one scored-text object. The service may
// left-truncate context; the response text must then be a suffix of the
// request that still contains the whole target.
class HttpBackend : public LogProbBackend {
 public:
  explicit HttpBackend(HttpConfig config);

  ScoredText score(const ScoreRequest& request) override;
  std::vector<ScoredText> score_all(std::span<const ScoreRequest> requests) override;

  // Number of requests that actually went over the wire.
  std::size_t network_requests() const;

 private:
  ScoredText fetch(const ScoreRequest& request);
  HttpConfig config_;
  std::optional<ScoreCache> cache_;
  mutable std::mutex stats_mu_;
  std::size_t network_requests_ = 0;
};

// Drops whole leading context words until `request.text` fits `max_bytes`.
// The target is never cut; a target longer than the limit is sent as is.
ScoreRequest truncate_context(const ScoreRequest& request, std::size_t max_bytes);

// Word counts (e.g. a `word<TAB>count` frequency list). Lookup is
// case-insensitive after punctuation stripping; unseen words get `oov_count`.
class UnigramModel {
 public:
  explicit UnigramModel(std::unordered_map<std::string, std::uint64_t> counts,
                        std::uint64_t oov_count = 1);

  std::uint64_t count(std::string_view word) const;
  std::uint64_t total() const { return total_; }
  std::uint64_t oov_count() const { return oov_count_; }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::uint64_t oov_count_ = 1;
};

UnigramModel parse_unigram_counts(std::string_view text);
UnigramModel load_unigram_counts(const std::filesystem::path& path);

// -log2(count / total), in bits.
double unigram_surprisal(std::string_view word, const UnigramModel& model);

}  // namespace prosign
