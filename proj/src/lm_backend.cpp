#include "prosign/lm_backend.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kReplacementChar = "\xEF\xBF\xBD";

std::size_t to_offset(const ojson& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ProtocolError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

ScoredText scored_from_object(const ojson& j) {
  ScoredText s;
  try {
    s.model_id = j.at("model_id").get<std::string>();
    s.context_sentences = j.value("context_sentences", 0);
    s.context_char_len = to_offset(j, "context_char_len");
    s.text = j.at("text").get<std::string>();
    for (const auto& jt : j.at("tokens")) {
      TokenLogProb t;
      t.begin = to_offset(jt, "s");
      t.end = to_offset(jt, "e");
      const auto& lp = jt.at("lp");
      if (!lp.is_null()) t.logprob = lp.get<double>();
      auto claimed = jt.value("t", std::string());
      if (t.begin <= t.end && t.end <= s.text.size()) {
        t.text = s.text.substr(t.begin, t.end - t.begin);
        // Byte-level tokens may split a UTF-8 sequence; producers then emit
        // the replacement character, and the span is authoritative.
        if (claimed != t.text && claimed.find(kReplacementChar) == std::string::npos)
          throw ProtocolError("token text '" + claimed + "' differs from text[" +
                              std::to_string(t.begin) + ", " + std::to_string(t.end) + ")");
      } else {
        t.text = claimed;
      }
      s.tokens.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("scored-text schema: ") + e.what());
  }
  validate_scored(s);
  return s;
}

bool transient_status(int status) {
  return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

}  // namespace

void validate_scored(const ScoredText& s) {
  if (s.context_char_len > s.text.size())
    throw ValidationError("context_char_len " + std::to_string(s.context_char_len) +
                          " exceeds text length " + std::to_string(s.text.size()));
  if (s.context_sentences < 0) throw ValidationError("negative context_sentences");
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& t = s.tokens[i];
    if (t.begin != cursor) {
      if (t.begin > cursor)
        throw ProtocolError("token spans leave a gap between offsets " + std::to_string(cursor) +
                            " and " + std::to_string(t.begin));
      throw ProtocolError("token " + std::to_string(i) + " overlaps at offset " +
                          std::to_string(t.begin) + " (previous ended at " +
                          std::to_string(cursor) + ")");
    }
    if (t.end <= t.begin || t.end > s.text.size())
      throw ProtocolError("token " + std::to_string(i) + " has invalid span [" +
                          std::to_string(t.begin) + ", " + std::to_string(t.end) + ")");
    if (s.text.compare(t.begin, t.end - t.begin, t.text) != 0)
      throw ProtocolError("token " + std::to_string(i) + " text does not match span");
    if (t.logprob && (!std::isfinite(*t.logprob) || *t.logprob > 0.0))
      throw ValidationError("token " + std::to_string(i) + " has logprob " +
                            format_exact(*t.logprob) + " (must be finite and <= 0)");
    cursor = t.end;
  }
  if (cursor != s.text.size())
    throw ProtocolError("token spans leave a gap between offsets " + std::to_string(cursor) +
                        " and " + std::to_string(s.text.size()));
}

std::string scored_to_json(const ScoredText& s) {
  ojson j;
  j["model_id"] = s.model_id;
  j["context_sentences"] = s.context_sentences;
  j["context_char_len"] = s.context_char_len;
  j["text"] = s.text;
  ojson tokens = ojson::array();
  for (const auto& t : s.tokens) {
    ojson jt;
    jt["t"] = t.text;
    jt["lp"] = t.logprob ? ojson(*t.logprob) : ojson(nullptr);
    jt["s"] = t.begin;
    jt["e"] = t.end;
    tokens.push_back(std::move(jt));
  }
  j["tokens"] = std::move(tokens);
  return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

ScoredText scored_from_json(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed json: ") + e.what());
  }
  return scored_from_object(j);
}

std::string scored_to_jsonl(std::span<const ScoredText> records) {
  std::string out;
  for (const auto& r : records) {
    out += scored_to_json(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<ScoredText> parse_scored_jsonl(std::string_view text) {
  std::vector<ScoredText> out;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(scored_from_json(line));
    } catch (const Error& e) {
      throw ParseError("scored record " + std::to_string(out.size()) + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::vector<ScoredText> load_scored_file(const fs::path& path) {
  auto text = read_file(path);
  try {
    return parse_scored_jsonl(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::vector<ScoredText> LogProbBackend::score_all(std::span<const ScoreRequest> requests) {
  std::vector<ScoredText> out;
  out.reserve(requests.size());
  for (const auto& r : requests) out.push_back(score(r));
  return out;
}

FileBackend::FileBackend(std::vector<ScoredText> records) {
  for (auto& r : records) add(std::move(r));
}

FileBackend FileBackend::from_file(const fs::path& path) {
  return FileBackend(load_scored_file(path));
}

void FileBackend::add(ScoredText record) {
  auto key = std::make_pair(record.model_id, record.text);
  if (!records_.count(key))
    by_target_.emplace(std::make_tuple(record.model_id, record.context_sentences, std::string(record.target())), key);
  records_.insert_or_assign(std::move(key), std::move(record));
}

ScoredText FileBackend::score(const ScoreRequest& request) {
  auto it = records_.find({request.model_id, request.text});
  if (it == records_.end()) {
    const std::string_view target = std::string_view(request.text).substr(request.context_char_len);
    auto [lo, hi] = by_target_.equal_range({request.model_id, request.context_sentences, std::string(target)});
    for (auto t = lo; t != hi; ++t) {
      const auto& rec = records_.at(t->second);
      if (rec.text.size() <= request.text.size() &&
          request.text.compare(request.text.size() - rec.text.size(), rec.text.size(), rec.text) == 0)
        return rec;
    }
  }
  if (it == records_.end())
    throw LookupError("no scored record for model '" + request.model_id + "' and text '" +
                      request.text.substr(0, 60) + (request.text.size() > 60 ? "...'" : "'"));
  if (it->second.context_char_len != request.context_char_len)
    throw LookupError("scored record for model '" + request.model_id +
                      "' has context_char_len " + std::to_string(it->second.context_char_len) +
                      ", expected " + std::to_string(request.context_char_len));
  return it->second;
}

ScoreCache::ScoreCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path ScoreCache::path_for(const ScoreRequest& r) const {
  auto key = sha256_hex(r.model_id + '\n' + std::to_string(r.context_char_len) + '\n' +
                        std::to_string(r.context_sentences) + '\n' + r.text);
  std::string model_dir;
  for (char c : r.model_id)
    model_dir.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  return dir_ / model_dir / (key + ".jsonl");
}

std::mutex& ScoreCache::lock_for(const std::string& key) const {
  std::lock_guard lk(locks_mu_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::optional<ScoredText> ScoreCache::get(const ScoreRequest& r) const {
  auto p = path_for(r);
  if (!fs::exists(p)) return std::nullopt;
  auto records = parse_scored_jsonl(read_file(p));
  if (records.size() != 1) throw ProtocolError("cache entry " + p.string() + " is corrupt");
  return records.front();
}

void ScoreCache::put(const ScoreRequest& r, const ScoredText& scored) {
  auto p = path_for(r);
  std::lock_guard lk(lock_for(p.string()));
  write_file_atomic(p, scored_to_json(scored) + "\n");
}

ScoreRequest truncate_context(const ScoreRequest& request, std::size_t max_bytes) {
  if (request.text.size() <= max_bytes || request.context_char_len == 0) return request;
  std::size_t excess = request.text.size() - max_bytes;
  std::size_t cut = std::min(excess, request.context_char_len);
  auto space = [&](std::size_t i) { return std::isspace(static_cast<unsigned char>(request.text[i])) != 0; };
  // Only whole context words are dropped.
  if (cut > 0 && !space(cut - 1))
    while (cut < request.context_char_len && !space(cut)) ++cut;
  while (cut < request.context_char_len && space(cut)) ++cut;
  ScoreRequest out = request;
  out.text = request.text.substr(cut);
  out.context_char_len = request.context_char_len - cut;
  return out;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
  if (config_.max_in_flight < 1) config_.max_in_flight = 1;
}

std::size_t HttpBackend::network_requests() const {
  std::lock_guard lk(stats_mu_);
  return network_requests_;
}

ScoredText HttpBackend::score(const ScoreRequest& original) {
  auto request = config_.max_text_bytes ? truncate_context(original, *config_.max_text_bytes)
                                        : original;
  if (request.text.empty()) throw ValidationError("cannot score empty text");
  if (cache_) {
    if (auto hit = cache_->get(request)) return *hit;
  }
  auto scored = fetch(request);
  if (cache_) cache_->put(request, scored);
  return scored;
}

ScoredText HttpBackend::fetch(const ScoreRequest& request) {
  ojson body;
  body["model_id"] = request.model_id;
  body["text"] = request.text;
  body["context_char_len"] = request.context_char_len;
  body["context_sentences"] = request.context_sentences;
  auto payload = body.dump();

  httplib::Client client(config_.host, config_.port);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    {
      std::lock_guard lk(stats_mu_);
      ++network_requests_;
    }
    auto res = client.Post(config_.path, payload, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw TransportError("scoring service returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));

    auto scored = scored_from_json(res->body);
    if (scored.model_id != request.model_id)
      throw ProtocolError("response model_id '" + scored.model_id + "' != requested '" +
                          request.model_id + "'");
    // The service may only drop context from the left.
    if (scored.text.size() > request.text.size() ||
        request.text.compare(request.text.size() - scored.text.size(), scored.text.size(),
                             scored.text) != 0)
      throw ProtocolError("response text is not a suffix of the requested text");
    std::size_t dropped = request.text.size() - scored.text.size();
    if (dropped > request.context_char_len ||
        scored.context_char_len != request.context_char_len - dropped)
      throw ProtocolError("response truncated into the target or misreports context_char_len");
    scored.context_sentences = request.context_sentences;
    return scored;
  }
  throw TransportError("scoring service at " + config_.host + ":" + std::to_string(config_.port) +
                       " unreachable after " + std::to_string(config_.max_retries + 1) +
                       " attempts (" + last_error + ")");
}

std::vector<ScoredText> HttpBackend::score_all(std::span<const ScoreRequest> requests) {
  std::vector<ScoredText> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= requests.size()) return;
      {
        std::lock_guard lk(failure_mu);
        if (failure) return;
      }
      try {
        out[i] = score(requests[i]);
      } catch (...) {
        std::lock_guard lk(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  auto n = std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), requests.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

UnigramModel::UnigramModel(std::unordered_map<std::string, std::uint64_t> counts,
                           std::uint64_t oov_count)
    : oov_count_(oov_count) {
  if (oov_count_ < 1) throw ValidationError("oov_count must be >= 1");
  for (auto& [word, c] : counts) {
    auto key = normalize_word(word);
    if (key.empty() || c == 0) continue;
    counts_[key] += c;
    total_ += c;
  }
  if (total_ == 0) throw ValidationError("unigram model needs a positive total count");
}

std::uint64_t UnigramModel::count(std::string_view word) const {
  auto it = counts_.find(normalize_word(word));
  return it == counts_.end() ? oov_count_ : it->second;
}

UnigramModel parse_unigram_counts(std::string_view text) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected word<TAB>count", line_no);
    long long c = 0;
    try {
      c = parse_int(line.substr(tab + 1));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (c < 0) throw ParseError("negative count", line_no);
    counts[std::string(line.substr(0, tab))] += static_cast<std::uint64_t>(c);
  }
  return UnigramModel(std::move(counts));
}

UnigramModel load_unigram_counts(const fs::path& path) {
  return parse_unigram_counts(read_file(path));
}

double unigram_surprisal(std::string_view word, const UnigramModel& model) {
  double p = static_cast<double>(model.count(word)) / static_cast<double>(model.total());
  return -std::log2(p) + 0.0;
}

}  // namespace prosign
