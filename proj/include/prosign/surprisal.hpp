#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosign/corpus.hpp"
#include "prosign/lm_backend.hpp"

namespace prosign {

// Number of preceding segments of the same chapter prepended as context.
struct ContextSpec {
  int n_segments = 0;
};

// "sup_<n>"
std::string variant_name(ContextSpec spec);
inline constexpr std::string_view kUnigramVariant = "unigram";

struct ContextText {
  std::string context;  // empty at chapter starts and for n_segments == 0
  std::string target;
};

// Up to `spec.n_segments` immediately preceding segments of the same chapter,
// oldest first, joined with `joiner`. Throws LookupError for unknown ids.
ContextText build_context(const CorpusManifest& manifest, std::string_view segment_id,
                          ContextSpec spec, std::string_view joiner = " ");

// The string sent to a model: context + joiner + target (just the target
// when there is no context). `context_char_len` covers context and joiner.
ScoreRequest make_request(const ContextText& ctx, const std::string& model_id, ContextSpec spec,
                          std::string_view joiner = " ");

// -logprob / ln 2. Throws ValidationError for positive or missing logprob.
double token_surprisal_bits(double logprob_e);
double token_surprisal_bits(const TokenLogProb& token);

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct WordBits {
  double bits = 0.0;
  // Indices into ScoredText::tokens, in text order.
  std::vector<std::size_t> tokens;
  // Some assigned token carried no logprob and was left out of `bits`.
  bool has_unscored = false;
};

struct Aggregation {
  std::vector<WordBits> words;
  std::vector<std::size_t> orphan_tokens;
  double orphan_bits = 0.0;
};

// Assigns every target token (midpoint at or after context_char_len) to the
// word whose span contains the token midpoint; a token whose midpoint lies
// between words attaches to a word it overlaps, otherwise it goes to the
// orphan bucket. Bits are summed left to right. Throws ValidationError for
// spans outside the target or overlapping, and CoverageError for a word
// without tokens.
Aggregation aggregate_word_surprisal(const ScoredText& scored, std::span<const ByteSpan> word_spans);

struct WordSurprisal {
  std::string segment_id;
  int word_index = 0;
  std::string word;
  std::string variant;
  std::string model_id;
  double bits = 0.0;
  int n_tokens = 0;

  bool operator==(const WordSurprisal&) const = default;
};

struct SurprisalOptions {
  std::vector<ContextSpec> specs;
  std::string model_id;
  std::string joiner = " ";
  // When set, a context-free `unigram` variant is emitted as well.
  const UnigramModel* unigram = nullptr;
};

// All (segment x spec) requests, in manifest order then spec order.
std::vector<ScoreRequest> scoring_requests(const CorpusManifest& manifest,
                                           std::span<const ContextSpec> specs,
                                           const std::string& model_id,
                                           std::string_view joiner = " ");

// One row per (word occurrence x variant): segments in manifest order, then
// unigram, then specs in the given order, then words.
std::vector<WordSurprisal> surprisal_table(const CorpusManifest& manifest, LogProbBackend& backend,
                                           const SurprisalOptions& options);

// segment_id,word_index,word,variant,model_id,bits,n_tokens
std::string surprisal_to_csv(std::span<const WordSurprisal> rows);
std::vector<WordSurprisal> surprisal_from_csv(std::string_view text);

}  // namespace prosign
