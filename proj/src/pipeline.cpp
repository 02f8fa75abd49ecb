#include "prosign/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "prosign/analysis.hpp"
#include "prosign/io.hpp"
#include "prosign/surprisal.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string>& known_keys() {
  static const std::map<std::string, std::string> keys = {
      {"metadata", "path"},         {"audio_dir", "path"},     {"alignments_dir", "path"},
      {"counts", "path"},           {"scored", "path"},        {"stopwords", "path"},
      {"out_dir", "path"},          {"backend", "file|http"},  {"models", "list"},
      {"contexts", "list"},         {"max_context", "int"},    {"joiner", "string"},
      {"text_field", "enum"},       {"lookback", "int"},       {"reset_at_chapter", "bool"},
      {"word_classes", "bool"},     {"join_max_loss", "real"}, {"workers", "int"},
      {"http.host", "string"},      {"http.port", "int"},      {"http.max_in_flight", "int"},
      {"http.max_text_bytes", "int"}, {"http.cache_dir", "path"}, {"http.max_retries", "int"},
  };
  return keys;
}

std::string unquote(const std::string& v) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') return v;
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      char n = v[++i];
      out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
    } else {
      out.push_back(v[i]);
    }
  }
  return out;
}

bool parse_bool(const std::string& v) {
  auto l = to_lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw ParseError("not a boolean: '" + v + "'");
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  return out;
}

std::vector<ContextSpec> specs_of(const PipelineConfig& c) {
  std::vector<ContextSpec> specs;
  for (int k : c.contexts) specs.push_back({k});
  return specs;
}

std::string settings_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string contexts_text(const std::vector<int>& c) {
  std::vector<std::string> s;
  for (int k : c) s.push_back(std::to_string(k));
  return join_list(s);
}

std::string prominence_text(const ProminenceConfig& p) {
  std::vector<double> v = {p.framing.window_s,     p.framing.shift_s,     p.f0.min_hz,
                           p.f0.max_hz,            p.f0.voicing_threshold, p.f0.silence_db,
                           p.f0.octave_cost,       p.f0.lag_weight,       p.f0.voicing_transition_cost,
                           p.energy.floor_below_peak_db, p.energy.absolute_floor_db, p.weights.f0,
                           p.weights.energy,       p.weights.duration,    p.cwt.base_scale_s,
                           p.cwt.band_lo_s,        p.cwt.band_hi_s};
  std::string out = std::to_string(p.cwt.n_scales) + ";" + std::to_string(p.f0.max_candidates);
  for (double x : v) out += ";" + format_exact(x);
  return out;
}

struct Stage {
  std::string name;
  std::vector<fs::path> inputs;
  std::string settings;
  std::vector<std::string> outputs;
  std::function<void()> run;
};

std::string hash_inputs(const Stage& s) {
  std::string acc = "settings " + sha256_hex(s.settings) + "\n";
  for (const auto& p : s.inputs) {
    acc += p.filename().string() + " ";
    acc += fs::exists(p) ? sha256_hex(read_file(p)) : std::string("missing");
    acc += "\n";
  }
  return sha256_hex(acc);
}

std::string stamp_text(const std::string& inputs_hash, const Stage& s, const fs::path& out_dir) {
  std::string t = "inputs " + inputs_hash + "\n";
  for (const auto& o : s.outputs) t += o + " " + sha256_hex(read_file(out_dir / o)) + "\n";
  return t;
}

bool up_to_date(const Stage& s, const fs::path& out_dir, const fs::path& stamp,
                const std::string& inputs_hash) {
  if (!fs::exists(stamp)) return false;
  for (const auto& o : s.outputs)
    if (!fs::exists(out_dir / o)) return false;
  return read_file(stamp) == stamp_text(inputs_hash, s, out_dir);
}

CorpusManifest manifest_for(const PipelineConfig& c) {
  CorpusLayout layout;
  layout.text_field = c.text_field;
  layout.audio_dir = c.audio_dir;
  layout.alignment_dir = c.alignments_dir;
  auto m = load_manifest(c.metadata, layout);
  if (c.stopwords) m.set_stopwords(load_stopwords(*c.stopwords));
  return m;
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  auto k = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  auto kv = parse_key_values(text);
  auto path = [&](const std::string& v) {
    fs::path p = unquote(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  std::map<std::string, std::string> prom;
  for (const auto& [key, raw] : kv) {
    const auto v = unquote(raw);
    try {
      if (key.rfind("prominence.", 0) == 0) {
        prom[key.substr(11)] = v;
      } else if (!known_keys().count(key)) {
        c.parse_problems.push_back("unknown key '" + key + "'");
      } else if (key == "metadata") {
        c.metadata = path(raw);
      } else if (key == "audio_dir") {
        c.audio_dir = path(raw);
      } else if (key == "alignments_dir") {
        c.alignments_dir = path(raw);
      } else if (key == "counts") {
        c.counts = path(raw);
      } else if (key == "scored") {
        c.scored = path(raw);
      } else if (key == "stopwords") {
        c.stopwords = path(raw);
      } else if (key == "out_dir") {
        c.out_dir = path(raw);
      } else if (key == "backend") {
        c.backend = v;
      } else if (key == "models") {
        c.models.clear();
        for (const auto& m : split(v, ','))
          if (!trim(m).empty()) c.models.emplace_back(trim(m));
      } else if (key == "contexts") {
        c.contexts.clear();
        for (const auto& k : split(v, ','))
          if (!trim(k).empty()) c.contexts.push_back(static_cast<int>(parse_int(k)));
      } else if (key == "max_context") {
        c.max_context = static_cast<int>(parse_int(v));
      } else if (key == "joiner") {
        c.joiner = v;
      } else if (key == "text_field") {
        if (v == "normalized") c.text_field = TextField::normalized;
        else if (v == "raw") c.text_field = TextField::raw;
        else throw ParseError("text_field must be normalized or raw");
      } else if (key == "lookback") {
        c.givenness.lookback_sentences = static_cast<int>(parse_int(v));
      } else if (key == "reset_at_chapter") {
        c.givenness.reset_at_chapter = parse_bool(v);
      } else if (key == "word_classes") {
        c.word_classes = parse_bool(v);
      } else if (key == "join_max_loss") {
        c.join_max_loss = parse_double(v);
      } else if (key == "workers") {
        c.workers = static_cast<int>(parse_int(v));
      } else if (key == "http.host") {
        c.http.host = v;
      } else if (key == "http.port") {
        c.http.port = static_cast<int>(parse_int(v));
      } else if (key == "http.max_in_flight") {
        c.http.max_in_flight = static_cast<int>(parse_int(v));
      } else if (key == "http.max_text_bytes") {
        c.http.max_text_bytes = static_cast<std::size_t>(parse_int(v));
      } else if (key == "http.max_retries") {
        c.http.max_retries = static_cast<int>(parse_int(v));
      } else if (key == "http.cache_dir") {
        c.http.cache_dir = path(raw);
      }
    } catch (const Error& e) {
      c.parse_problems.push_back(key + ": " + e.what());
    }
  }
  try {
    c.prominence = prominence_config_from(prom);
  } catch (const Error& e) {
    c.parse_problems.push_back(std::string("prominence: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return parse_pipeline_config(read_file(path), path.parent_path());
}

void apply_environment(PipelineConfig& config) {
  if (const char* w = std::getenv("PROSIGN_WORKERS")) {
    try {
      auto n = parse_int(w);
      if (n > 0) config.workers = static_cast<int>(n);
    } catch (const ParseError&) {
    }
  }
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

std::vector<Diagnostic> validate_config(const PipelineConfig& c) {
  using S = Diagnostic::Severity;
  std::vector<Diagnostic> d;
  auto error = [&](std::string key, std::string msg) { d.push_back({S::error, std::move(key), std::move(msg)}); };
  auto warn = [&](std::string key, std::string msg) { d.push_back({S::warning, std::move(key), std::move(msg)}); };

  for (const auto& p : c.parse_problems) error("config", p);
  auto need_file = [&](const std::string& key, const fs::path& p) {
    if (p.empty()) error(key, "not set");
    else if (!fs::is_regular_file(p)) error(key, "file not found: " + p.string());
  };
  auto need_dir = [&](const std::string& key, const fs::path& p) {
    if (p.empty()) error(key, "not set");
    else if (!fs::is_directory(p)) error(key, "directory not found: " + p.string());
  };

  need_file("metadata", c.metadata);
  need_dir("audio_dir", c.audio_dir);
  need_dir("alignments_dir", c.alignments_dir);
  if (c.counts) need_file("counts", *c.counts);
  if (c.out_dir.empty()) error("out_dir", "not set");
  else if (fs::exists(c.out_dir) && !fs::is_directory(c.out_dir))
    error("out_dir", "exists and is not a directory");

  if (c.models.empty()) error("models", "no language model ids given");
  for (const auto& m : c.models)
    if (m == kUnigramVariant) error("models", "'unigram' is reserved; use the counts key");
  if (c.contexts.empty()) error("contexts", "no context sizes given");
  for (int k : c.contexts)
    if (k < 0 || k > c.max_context)
      error("contexts", "context " + std::to_string(k) + " outside 0.." + std::to_string(c.max_context));
  {
    auto sorted = c.contexts;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      error("contexts", "duplicate context size");
  }

  if (c.backend == "file") {
    if (!c.scored) error("scored", "the file backend needs a scored JSONL file");
    else need_file("scored", *c.scored);
  } else if (c.backend == "http") {
    if (c.http.port <= 0 || c.http.port > 65535) error("http.port", "port out of range");
    if (c.http.max_in_flight < 1) error("http.max_in_flight", "must be >= 1");
    if (!c.http.cache_dir) warn("http.cache_dir", "scores will not be cached on disk");
  } else {
    error("backend", "must be file or http, got '" + c.backend + "'");
  }

  if (c.word_classes) {
    if (!c.stopwords) error("stopwords", "word-class analysis requested but no stop-word file set");
    else need_file("stopwords", *c.stopwords);
  } else if (c.stopwords) {
    need_file("stopwords", *c.stopwords);
  }
  if (c.givenness.lookback_sentences < 0) error("lookback", "must be >= 0");
  if (!(c.join_max_loss >= 0.0 && c.join_max_loss <= 1.0)) error("join_max_loss", "must be in [0, 1]");
  if (c.workers < 1) error("workers", "must be >= 1");
  if (c.joiner.empty()) warn("joiner", "empty joiner glues context to the target");
  return d;
}

std::vector<StageOutcome> run_pipeline(const PipelineConfig& c, std::ostream& log) {
  fs::create_directories(c.out_dir / ".stamps");
  const auto out = [&](const std::string& name) { return c.out_dir / name; };

  std::optional<CorpusManifest> manifest_cache;
  auto manifest = [&]() -> const CorpusManifest& {
    if (!manifest_cache) manifest_cache = manifest_for(c);
    return *manifest_cache;
  };

  const std::string corpus_settings = settings_text({
      {"text_field", c.text_field == TextField::raw ? "raw" : "normalized"},
      {"stopwords", c.stopwords ? "yes" : "no"},
  });
  std::vector<fs::path> corpus_inputs = {c.metadata};
  if (c.stopwords) corpus_inputs.push_back(*c.stopwords);

  std::vector<Stage> stages;

  // score
  {
    Stage s{"score", corpus_inputs, corpus_settings + settings_text({
        {"backend", c.backend}, {"models", join_list(c.models)}, {"contexts", contexts_text(c.contexts)},
        {"joiner", c.joiner}, {"host", c.http.host + ":" + std::to_string(c.http.port)}}),
        {"scored.jsonl"}, {}};
    if (c.backend == "file" && c.scored) s.inputs.push_back(*c.scored);
    s.run = [&] {
      if (c.backend == "file") {
        write_file_atomic(out("scored.jsonl"), read_file(*c.scored));
        return;
      }
      HttpBackend backend(c.http);
      std::vector<ScoredText> all;
      for (const auto& model : c.models) {
        auto specs = specs_of(c);
        auto requests = scoring_requests(manifest(), specs, model, c.joiner);
        auto scored = backend.score_all(requests);
        all.insert(all.end(), scored.begin(), scored.end());
      }
      write_file_atomic(out("scored.jsonl"), scored_to_jsonl(all));
    };
    stages.push_back(std::move(s));
  }

  // surprisal
  {
    Stage s{"surprisal", corpus_inputs, corpus_settings + settings_text({
        {"models", join_list(c.models)}, {"contexts", contexts_text(c.contexts)}, {"joiner", c.joiner},
        {"counts", c.counts ? "yes" : "no"}}), {"surprisal.csv"}, {}};
    s.inputs.push_back(out("scored.jsonl"));
    if (c.counts) s.inputs.push_back(*c.counts);
    s.run = [&] {
      FileBackend backend = FileBackend::from_file(out("scored.jsonl"));
      std::optional<UnigramModel> unigram;
      if (c.counts) unigram = load_unigram_counts(*c.counts);
      std::vector<WordSurprisal> rows;
      for (std::size_t m = 0; m < c.models.size(); ++m) {
        SurprisalOptions opts;
        opts.specs = specs_of(c);
        opts.model_id = c.models[m];
        opts.joiner = c.joiner;
        opts.unigram = m == 0 && unigram ? &*unigram : nullptr;
        auto part = surprisal_table(manifest(), backend, opts);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      write_file_atomic(out("surprisal.csv"), surprisal_to_csv(rows));
    };
    stages.push_back(std::move(s));
  }

  // prominence
  {
    Stage s{"prominence", corpus_inputs, corpus_settings + "prominence=" + prominence_text(c.prominence) + "\n",
            {"prosody.csv"}, {}};
    if (fs::is_regular_file(c.metadata)) {
      for (const auto& seg : manifest().segments()) {
        s.inputs.push_back(*seg.audio_path);
        s.inputs.push_back(*seg.alignment_path);
      }
    }
    s.run = [&] {
      const auto& segs = manifest().segments();
      std::vector<std::vector<WordProsody>> per(segs.size());
      std::vector<std::string> skipped(segs.size());
      parallel_for(segs.size(), c.workers, [&](std::size_t i) {
        const auto& seg = segs[i];
        if (!fs::exists(*seg.audio_path) || !fs::exists(*seg.alignment_path)) {
          skipped[i] = seg.id;
          return;
        }
        try {
          auto audio = read_wav(*seg.audio_path);
          auto alignment = load_alignment(*seg.alignment_path);
          per[i] = segment_prosody(seg, audio, alignment, c.prominence);
        } catch (const Error& e) {
          throw Error("segment " + seg.id + ": " + e.what());
        }
      });
      std::vector<WordProsody> rows;
      for (std::size_t i = 0; i < segs.size(); ++i) {
        if (!skipped[i].empty()) log << "  prominence: no audio/alignment for " << skipped[i] << "\n";
        rows.insert(rows.end(), per[i].begin(), per[i].end());
      }
      write_file_atomic(out("prosody.csv"), prosody_to_csv(rows));
    };
    stages.push_back(std::move(s));
  }

  // givenness
  {
    Stage s{"givenness", corpus_inputs, corpus_settings + settings_text({
        {"lookback", std::to_string(c.givenness.lookback_sentences)},
        {"reset_at_chapter", c.givenness.reset_at_chapter ? "1" : "0"}}), {"givenness.csv"}, {}};
    s.run = [&] {
      auto records = assign_distances(manifest(), c.givenness);
      write_file_atomic(out("givenness.csv"), givenness_to_csv(records));
    };
    stages.push_back(std::move(s));
  }

  // join
  {
    Stage s{"join", corpus_inputs, corpus_settings + "max_loss=" + format_exact(c.join_max_loss) + "\n",
            {"records.csv"}, {}};
    for (const auto* f : {"surprisal.csv", "prosody.csv", "givenness.csv"}) s.inputs.push_back(out(f));
    s.run = [&] {
      auto sup = surprisal_from_csv(read_file(out("surprisal.csv")));
      auto pros = prosody_from_csv(read_file(out("prosody.csv")));
      auto giv = givenness_from_csv(read_file(out("givenness.csv")));
      auto res = join_records(sup, pros, giv, manifest(), {c.join_max_loss});
      log << "  join: " << res.records.size() << " of " << res.universe << " keys (missing surprisal "
          << res.missing_surprisal << ", prosody " << res.missing_prosody << ", givenness "
          << res.missing_givenness << ")\n";
      write_file_atomic(out("records.csv"), records_to_csv(res.records));
    };
    stages.push_back(std::move(s));
  }

  // analyze
  {
    const int top = *std::max_element(c.contexts.begin(), c.contexts.end());
    const bool qualify = c.models.size() > 1;
    auto key = [&](const std::string& model, const std::string& variant) {
      return qualify ? model + ":" + variant : variant;
    };
    Stage s{"analyze", {out("records.csv")}, settings_text({
        {"word_classes", c.word_classes ? "1" : "0"}, {"models", join_list(c.models)},
        {"contexts", contexts_text(c.contexts)}}), {"correlations.csv"}, {}};
    for (const auto& m : c.models) {
      auto suffix = qualify ? "_" + sanitize(m) : std::string();
      s.outputs.push_back("givenness_profile" + suffix + ".csv");
      s.outputs.push_back("scatter" + suffix + "_sup_" + std::to_string(top) + "_prominence.json");
    }
    s.run = [&, top, qualify, key] {
      auto records = records_from_csv(read_file(out("records.csv")));
      std::set<std::string> variant_set;
      for (const auto& r : records)
        for (const auto& [v, _] : r.surprisal) variant_set.insert(v);
      std::vector<std::string> variants(variant_set.begin(), variant_set.end());
      std::vector<WordGroup> groups = {WordGroup::all};
      if (c.word_classes) groups.insert(groups.end(), {WordGroup::stop, WordGroup::content});
      auto report = correlation_grid(records, variants, prosodic_measures(), groups);
      write_file_atomic(out("correlations.csv"), correlation_to_csv(report));

      std::vector<GivennessRecord> content;
      std::map<WordKey, double> prom;
      for (const auto& r : records) {
        if (!r.givenness || r.is_stopword) continue;
        content.push_back(*r.givenness);
        prom[r.key()] = r.prosody.prominence;
      }
      auto normalized = [&](const std::map<WordKey, double>& values, const std::string& what) {
        try {
          return novelty_normalize(values, content);
        } catch (const ValidationError& e) {
          log << "  analyze: " << what << " not normalized: " << e.what() << "\n";
          return std::map<WordKey, double>{};
        }
      };
      auto prom_profile = givenness_profile(normalized(prom, "prominence"), content);
      for (const auto& m : c.models) {
        auto suffix = qualify ? "_" + sanitize(m) : std::string();
        auto series = [&](const std::string& variant) {
          std::map<WordKey, double> v;
          for (const auto& r : records) {
            if (!r.givenness || r.is_stopword) continue;
            auto q = quantity(r, key(m, variant));
            if (q) v[r.key()] = *q;
          }
          return givenness_profile(v.empty() ? v : normalized(v, key(m, variant)), content);
        };
        write_file_atomic(out("givenness_profile" + suffix + ".csv"),
                          profile_to_csv(prom_profile, series("sup_0"), series("sup_5")));
        auto scatter = scatter_export(records, key(m, "sup_" + std::to_string(top)), "prominence");
        write_file_atomic(out("scatter" + suffix + "_sup_" + std::to_string(top) + "_prominence.json"),
                          scatter_to_json(scatter));
      }
    };
    stages.push_back(std::move(s));
  }

  std::vector<StageOutcome> outcomes;
  for (auto& s : stages) {
    const auto stamp = c.out_dir / ".stamps" / (s.name + ".txt");
    try {
      const auto h = hash_inputs(s);
      if (up_to_date(s, c.out_dir, stamp, h)) {
        log << "stage " << s.name << ": up to date\n";
        outcomes.push_back({s.name, false});
        continue;
      }
      log << "stage " << s.name << ": running\n";
      if (fs::exists(stamp)) fs::remove(stamp);
      s.run();
      write_file_atomic(stamp, stamp_text(h, s, c.out_dir));
      outcomes.push_back({s.name, true});
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(s.name, e.what());
    }
  }
  return outcomes;
}

}  // namespace prosign
