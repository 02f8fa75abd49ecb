#include "prosign/surprisal.hpp"

#include <cmath>
#include <numbers>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/text.hpp"

namespace prosign {

std::string variant_name(ContextSpec spec) { return "sup_" + std::to_string(spec.n_segments); }

ContextText build_context(const CorpusManifest& manifest, std::string_view segment_id,
                          ContextSpec spec, std::string_view joiner) {
  if (spec.n_segments < 0) throw ValidationError("negative context size");
  const auto& segs = manifest.segments();
  auto pos = manifest.position(segment_id);
  const auto& target = segs[pos];

  std::vector<const Segment*> previous;
  for (std::size_t i = pos; i > 0 && static_cast<int>(previous.size()) < spec.n_segments; --i) {
    const auto& cand = segs[i - 1];
    if (cand.chapter_id != target.chapter_id) break;
    previous.push_back(&cand);
  }

  ContextText out;
  out.target = target.text;
  for (auto it = previous.rbegin(); it != previous.rend(); ++it) {
    if (!out.context.empty()) out.context += joiner;
    out.context += (*it)->text;
  }
  return out;
}

ScoreRequest make_request(const ContextText& ctx, const std::string& model_id, ContextSpec spec,
                          std::string_view joiner) {
  ScoreRequest r;
  r.model_id = model_id;
  r.context_sentences = spec.n_segments;
  if (!ctx.context.empty()) {
    r.text = ctx.context;
    r.text += joiner;
  }
  r.context_char_len = r.text.size();
  r.text += ctx.target;
  return r;
}

double token_surprisal_bits(double logprob_e) {
  if (!(logprob_e <= 0.0))
    throw ValidationError("logprob " + format_exact(logprob_e) + " is not <= 0");
  return -logprob_e / std::numbers::ln2 + 0.0;
}

double token_surprisal_bits(const TokenLogProb& token) {
  if (!token.logprob) throw ValidationError("token '" + token.text + "' has no logprob");
  return token_surprisal_bits(*token.logprob);
}

Aggregation aggregate_word_surprisal(const ScoredText& scored, std::span<const ByteSpan> spans) {
  const auto ccl = scored.context_char_len;
  for (std::size_t w = 0; w < spans.size(); ++w) {
    const auto& s = spans[w];
    if (s.begin < ccl || s.end > scored.text.size() || s.begin >= s.end)
      throw ValidationError("word span [" + std::to_string(s.begin) + ", " + std::to_string(s.end) +
                            ") lies outside the target region [" + std::to_string(ccl) + ", " +
                            std::to_string(scored.text.size()) + ")");
    if (w > 0 && s.begin < spans[w - 1].end)
      throw ValidationError("word spans " + std::to_string(w - 1) + " and " + std::to_string(w) +
                            " overlap");
  }

  Aggregation agg;
  agg.words.resize(spans.size());
  std::size_t w = 0;
  for (std::size_t i = 0; i < scored.tokens.size(); ++i) {
    const auto& t = scored.tokens[i];
    // Midpoint comparisons in doubled coordinates keep everything integral.
    const auto mid2 = t.begin + t.end;
    if (mid2 < 2 * ccl) continue;

    while (w < spans.size() && 2 * spans[w].end <= mid2) ++w;
    std::optional<std::size_t> owner;
    if (w < spans.size() && 2 * spans[w].begin <= mid2) {
      owner = w;
    } else {
      // Midpoint in a gap: attach to an overlapping neighbour, preferring the
      // larger overlap and then the earlier word.
      std::size_t best = 0;
      for (std::size_t cand : {w > 0 ? w - 1 : spans.size(), w}) {
        if (cand >= spans.size()) continue;
        auto lo = std::max(t.begin, spans[cand].begin);
        auto hi = std::min(t.end, spans[cand].end);
        if (hi > lo && hi - lo > best) {
          best = hi - lo;
          owner = cand;
        }
      }
    }

    if (!owner) {
      agg.orphan_tokens.push_back(i);
      if (t.logprob) agg.orphan_bits += token_surprisal_bits(*t.logprob);
      continue;
    }
    auto& wb = agg.words[*owner];
    wb.tokens.push_back(i);
    if (t.logprob)
      wb.bits += token_surprisal_bits(*t.logprob);
    else
      wb.has_unscored = true;
  }

  for (std::size_t k = 0; k < spans.size(); ++k)
    if (agg.words[k].tokens.empty())
      throw CoverageError("word '" +
                          scored.text.substr(spans[k].begin, spans[k].end - spans[k].begin) +
                          "' at [" + std::to_string(spans[k].begin) + ", " +
                          std::to_string(spans[k].end) + ") matches no token");
  return agg;
}

std::vector<ScoreRequest> scoring_requests(const CorpusManifest& manifest,
                                           std::span<const ContextSpec> specs,
                                           const std::string& model_id, std::string_view joiner) {
  std::vector<ScoreRequest> out;
  out.reserve(manifest.size() * specs.size());
  for (const auto& seg : manifest.segments())
    for (const auto& spec : specs)
      out.push_back(make_request(build_context(manifest, seg.id, spec, joiner), model_id, spec, joiner));
  return out;
}

std::vector<WordSurprisal> surprisal_table(const CorpusManifest& manifest, LogProbBackend& backend,
                                           const SurprisalOptions& options) {
  auto requests = scoring_requests(manifest, options.specs, options.model_id, options.joiner);
  auto scored = backend.score_all(requests);

  std::vector<WordSurprisal> rows;
  std::size_t r = 0;
  for (const auto& seg : manifest.segments()) {
    auto words = split_words(seg.text);
    if (options.unigram) {
      for (std::size_t i = 0; i < words.size(); ++i)
        rows.push_back({seg.id, static_cast<int>(i), words[i].surface, std::string(kUnigramVariant),
                        std::string(kUnigramVariant), unigram_surprisal(words[i].norm, *options.unigram), 1});
    }
    for (const auto& spec : options.specs) {
      const auto& st = scored[r++];
      if (st.target() != seg.text)
        throw ProtocolError("scored text for " + seg.id + " (" + variant_name(spec) +
                            ") does not end with the segment transcription after its context");
      std::vector<ByteSpan> spans;
      spans.reserve(words.size());
      for (const auto& w : words)
        spans.push_back({st.context_char_len + w.begin, st.context_char_len + w.end});
      Aggregation agg;
      try {
        agg = aggregate_word_surprisal(st, spans);
      } catch (const Error& e) {
        throw Error("segment " + seg.id + " (" + variant_name(spec) + "): " + e.what());
      }
      for (std::size_t i = 0; i < words.size(); ++i)
        rows.push_back({seg.id, static_cast<int>(i), words[i].surface, variant_name(spec),
                        options.model_id, agg.words[i].bits,
                        static_cast<int>(agg.words[i].tokens.size())});
    }
  }
  return rows;
}

std::string surprisal_to_csv(std::span<const WordSurprisal> rows) {
  CsvWriter csv({"segment_id", "word_index", "word", "variant", "model_id", "bits", "n_tokens"});
  for (const auto& r : rows)
    csv.row({r.segment_id, std::to_string(r.word_index), r.word, r.variant, r.model_id,
             format_exact(r.bits), std::to_string(r.n_tokens)});
  return csv.str();
}

std::vector<WordSurprisal> surprisal_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  auto c_seg = t.column("segment_id"), c_idx = t.column("word_index"), c_word = t.column("word"),
       c_var = t.column("variant"), c_model = t.column("model_id"), c_bits = t.column("bits"),
       c_n = t.column("n_tokens");
  std::vector<WordSurprisal> rows;
  rows.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      WordSurprisal r{f[c_seg], static_cast<int>(parse_int(f[c_idx])), f[c_word], f[c_var],
                      f[c_model], parse_double(f[c_bits]), static_cast<int>(parse_int(f[c_n]))};
      if (!(r.bits >= 0.0) || r.n_tokens < 1 || r.word_index < 0)
        throw ValidationError("invalid surprisal row");
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return rows;
}

}  // namespace prosign
