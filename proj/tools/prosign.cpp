#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prosign/analysis.hpp"
#include "prosign/corpus.hpp"
#include "prosign/givenness.hpp"
#include "prosign/io.hpp"
#include "prosign/lm_backend.hpp"
#include "prosign/pipeline.hpp"
#include "prosign/prominence.hpp"
#include "prosign/surprisal.hpp"
#include "prosign/synth_eval.hpp"
#include "prosign/text.hpp"
#include "prosign/wav.hpp"

namespace fs = std::filesystem;
using namespace prosign;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kFailure = 3;

struct CorpusArgs {
  fs::path metadata;
  fs::path audio;
  fs::path alignments;
  fs::path stopwords;
  std::string text_field = "normalized";
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& a, bool audio) {
  cmd->add_option("--metadata", a.metadata, "metadata file (id|raw|normalized)")->required()->check(CLI::ExistingFile);
  if (audio) {
    cmd->add_option("--audio", a.audio, "directory of <id>.wav")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--alignments", a.alignments, "directory of <id>.json")->required()->check(CLI::ExistingDirectory);
  }
  cmd->add_option("--text-field", a.text_field, "transcription column fed downstream")
      ->check(CLI::IsMember({"normalized", "raw"}));
}

CorpusManifest load_corpus(const CorpusArgs& a) {
  CorpusLayout layout;
  layout.text_field = a.text_field == "raw" ? TextField::raw : TextField::normalized;
  if (!a.audio.empty()) layout.audio_dir = a.audio;
  if (!a.alignments.empty()) layout.alignment_dir = a.alignments;
  auto m = load_manifest(a.metadata, layout);
  if (!a.stopwords.empty()) m.set_stopwords(load_stopwords(a.stopwords));
  return m;
}

std::vector<ContextSpec> parse_contexts(const std::string& list) {
  std::vector<ContextSpec> specs;
  for (const auto& item : split(list, ','))
    if (!trim(item).empty()) specs.push_back({static_cast<int>(parse_int(item))});
  if (specs.empty()) throw ValidationError("no context sizes given");
  return specs;
}

fs::path records_file(const fs::path& p) { return fs::is_directory(p) ? p / "records.csv" : p; }

int corpus_validate(const CorpusArgs& a) {
  auto m = load_corpus(a);
  std::size_t missing = 0, bad = 0, unmatched = 0, words = 0;
  for (const auto& seg : m.segments()) {
    if (!fs::exists(*seg.audio_path)) {
      std::cerr << seg.id << ": missing audio " << seg.audio_path->string() << "\n";
      ++missing;
    }
    if (!fs::exists(*seg.alignment_path)) {
      std::cerr << seg.id << ": missing alignment " << seg.alignment_path->string() << "\n";
      ++missing;
      continue;
    }
    try {
      auto al = load_alignment(*seg.alignment_path);
      auto res = match_words(seg.text, al);
      words += res.pairs.size() + res.unmatched_text.size();
      if (!res.unmatched_text.empty() || !res.unmatched_alignment.empty()) {
        std::cerr << seg.id << ": " << res.unmatched_text.size() << " unmatched text words, "
                  << res.unmatched_alignment.size() << " unmatched alignment words\n";
        unmatched += res.unmatched_text.size();
      }
    } catch (const Error& e) {
      std::cerr << seg.id << ": " << e.what() << "\n";
      ++bad;
    }
  }
  std::cout << m.segments().size() << " segments, " << words << " words, " << missing << " missing files, " << bad
            << " invalid alignments, " << unmatched << " unmatched words\n";
  return missing || bad ? kValidation : kOk;
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    std::cerr << (d.severity == Diagnostic::Severity::error ? "error" : "warning") << ": " << d.key << ": "
              << d.message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prosign: word surprisal and prominence toolkit"};
  app.require_subcommand(1);

  // corpus validate
  CorpusArgs corpus_args;
  auto* corpus = app.add_subcommand("corpus", "corpus utilities");
  corpus->require_subcommand(1);
  auto* validate = corpus->add_subcommand("validate", "check metadata, alignments and audio");
  add_corpus_options(validate, corpus_args, true);

  // score
  CorpusArgs score_corpus;
  std::string score_backend = "file", score_model, score_contexts = "0", score_joiner = " ";
  fs::path score_out, score_input;
  HttpConfig http;
  std::string http_cache;
  std::size_t http_max_bytes = 0;
  auto* score = app.add_subcommand("score", "produce scored-text JSONL for every segment and context");
  add_corpus_options(score, score_corpus, false);
  score->add_option("--backend", score_backend)->check(CLI::IsMember({"file", "http"}));
  score->add_option("--model", score_model, "language model id")->required();
  score->add_option("--context", score_contexts, "context size(s), comma separated");
  score->add_option("--joiner", score_joiner);
  score->add_option("--input", score_input, "scored JSONL read by the file backend");
  score->add_option("--host", http.host);
  score->add_option("--port", http.port);
  score->add_option("--max-in-flight", http.max_in_flight);
  score->add_option("--max-text-bytes", http_max_bytes);
  score->add_option("--cache", http_cache, "score cache directory");
  score->add_option("--out", score_out)->required();

  // surprisal
  CorpusArgs sup_corpus;
  fs::path sup_scored, sup_counts, sup_out;
  std::string sup_contexts = "0,1,2,3,4,5", sup_joiner = " ";
  std::vector<std::string> sup_models;
  auto* surprisal = app.add_subcommand("surprisal", "word surprisal table from scored JSONL");
  add_corpus_options(surprisal, sup_corpus, false);
  surprisal->add_option("--scored", sup_scored)->required()->check(CLI::ExistingFile);
  surprisal->add_option("--contexts", sup_contexts);
  surprisal->add_option("--model", sup_models, "model id(s); default: every model in the file");
  surprisal->add_option("--counts", sup_counts, "unigram counts (word<TAB>count)")->check(CLI::ExistingFile);
  surprisal->add_option("--joiner", sup_joiner);
  surprisal->add_option("--out", sup_out)->required();

  // prominence
  CorpusArgs prom_corpus;
  fs::path prom_config, prom_out;
  auto* prominence = app.add_subcommand("prominence", "CWT word prominence and prosodic measures");
  add_corpus_options(prominence, prom_corpus, true);
  prominence->add_option("--config", prom_config, "key = value prominence settings")->check(CLI::ExistingFile);
  prominence->add_option("--out", prom_out)->required();

  // givenness
  CorpusArgs giv_corpus;
  GivennessOptions giv_opts;
  bool giv_no_reset = false;
  fs::path giv_out;
  auto* givenness = app.add_subcommand("givenness", "distance to the previous mention of each word");
  add_corpus_options(givenness, giv_corpus, false);
  givenness->add_option("--stopwords", giv_corpus.stopwords)->check(CLI::ExistingFile);
  givenness->add_option("--lookback", giv_opts.lookback_sentences);
  givenness->add_flag("--no-chapter-reset", giv_no_reset);
  givenness->add_option("--out", giv_out)->required();

  // join
  CorpusArgs join_corpus;
  fs::path join_sup, join_pros, join_giv, join_out;
  double join_loss = 0.05;
  auto* join = app.add_subcommand("join", "join surprisal, prosody and givenness tables");
  add_corpus_options(join, join_corpus, false);
  join->add_option("--stopwords", join_corpus.stopwords)->check(CLI::ExistingFile);
  join->add_option("--surprisal", join_sup)->required()->check(CLI::ExistingFile);
  join->add_option("--prosody", join_pros)->required()->check(CLI::ExistingFile);
  join->add_option("--givenness", join_giv)->check(CLI::ExistingFile);
  join->add_option("--max-loss", join_loss);
  join->add_option("--out", join_out)->required();

  // analyze
  fs::path an_records, an_out;
  bool an_no_classes = false;
  auto* analyze = app.add_subcommand("analyze", "Spearman correlation grid and givenness profiles");
  analyze->add_option("--records", an_records, "records.csv or a directory holding it")->required();
  analyze->add_option("--out", an_out)->required();
  analyze->add_flag("--no-word-classes", an_no_classes);

  // scatter
  fs::path sc_records = ".", sc_out;
  std::string sc_variant = "sup_5", sc_measure = "prominence";
  std::size_t sc_bins = 64;
  auto* scatter = app.add_subcommand("scatter", "sqrt-transformed scatter data with marginal histograms");
  scatter->add_option("--records", sc_records, "records.csv or a directory holding it");
  scatter->add_option("--variant", sc_variant);
  scatter->add_option("--measure", sc_measure);
  scatter->add_option("--bins", sc_bins);
  scatter->add_option("--out", sc_out, "output JSON (default: stdout)");

  // synth-eval
  fs::path se_ref, se_classes, se_out;
  std::string se_systems;
  auto* synth = app.add_subcommand("synth-eval", "phone-level f0/duration RMSE and correlation");
  synth->add_option("--ref", se_ref)->required()->check(CLI::ExistingFile);
  synth->add_option("--systems", se_systems, "name=csv,name=csv,...")->required();
  synth->add_option("--word-classes", se_classes)->required()->check(CLI::ExistingFile);
  synth->add_option("--out", se_out)->required();

  // run / validate-config
  fs::path run_config;
  auto* run = app.add_subcommand("run", "run the whole pipeline incrementally");
  run->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
  fs::path vc_config;
  auto* validate_cfg = app.add_subcommand("validate-config", "check a pipeline configuration file");
  validate_cfg->add_option("--config", vc_config)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*validate) return corpus_validate(corpus_args);

    if (*score) {
      auto m = load_corpus(score_corpus);
      auto specs = parse_contexts(score_contexts);
      auto requests = scoring_requests(m, specs, score_model, score_joiner);
      std::vector<ScoredText> out;
      if (score_backend == "file") {
        if (score_input.empty()) throw ValidationError("--input is required with the file backend");
        auto backend = FileBackend::from_file(score_input);
        out = backend.score_all(requests);
      } else {
        if (!http_cache.empty()) http.cache_dir = fs::path(http_cache);
        if (http_max_bytes) http.max_text_bytes = http_max_bytes;
        HttpBackend backend(http);
        out = backend.score_all(requests);
        std::cerr << backend.network_requests() << " requests sent\n";
      }
      write_file_atomic(score_out, scored_to_jsonl(out));
      std::cerr << out.size() << " scored texts written to " << score_out.string() << "\n";
      return kOk;
    }

    if (*surprisal) {
      auto m = load_corpus(sup_corpus);
      auto records = load_scored_file(sup_scored);
      if (sup_models.empty()) {
        for (const auto& r : records)
          if (std::find(sup_models.begin(), sup_models.end(), r.model_id) == sup_models.end())
            sup_models.push_back(r.model_id);
      }
      FileBackend backend(std::move(records));
      std::optional<UnigramModel> unigram;
      if (!sup_counts.empty()) unigram = load_unigram_counts(sup_counts);
      if (sup_models.empty() && !unigram) throw ValidationError("scored file is empty and no counts given");
      std::vector<WordSurprisal> rows;
      SurprisalOptions opts;
      opts.joiner = sup_joiner;
      if (sup_models.empty()) {
        opts.unigram = &*unigram;
        rows = surprisal_table(m, backend, opts);
      }
      for (std::size_t i = 0; i < sup_models.size(); ++i) {
        opts.specs = parse_contexts(sup_contexts);
        opts.model_id = sup_models[i];
        opts.unigram = i == 0 && unigram ? &*unigram : nullptr;
        auto part = surprisal_table(m, backend, opts);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      write_file_atomic(sup_out, surprisal_to_csv(rows));
      std::cerr << rows.size() << " rows written to " << sup_out.string() << "\n";
      return kOk;
    }

    if (*prominence) {
      ProminenceConfig pc;
      if (!prom_config.empty()) pc = prominence_config_from(parse_key_values(read_file(prom_config)));
      auto m = load_corpus(prom_corpus);
      std::vector<WordProsody> rows;
      std::size_t skipped = 0;
      for (const auto& seg : m.segments()) {
        if (!fs::exists(*seg.audio_path) || !fs::exists(*seg.alignment_path)) {
          ++skipped;
          continue;
        }
        try {
          auto part = segment_prosody(seg, read_wav(*seg.audio_path), load_alignment(*seg.alignment_path), pc);
          rows.insert(rows.end(), part.begin(), part.end());
        } catch (const Error& e) {
          throw Error("segment " + seg.id + ": " + e.what());
        }
      }
      write_file_atomic(prom_out, prosody_to_csv(rows));
      std::cerr << rows.size() << " words written, " << skipped << " segments without audio/alignment\n";
      return kOk;
    }

    if (*givenness) {
      auto m = load_corpus(giv_corpus);
      giv_opts.reset_at_chapter = !giv_no_reset;
      auto records = assign_distances(m, giv_opts);
      write_file_atomic(giv_out, givenness_to_csv(records));
      return kOk;
    }

    if (*join) {
      auto m = load_corpus(join_corpus);
      std::vector<GivennessRecord> giv;
      if (!join_giv.empty()) giv = givenness_from_csv(read_file(join_giv));
      auto res = join_records(surprisal_from_csv(read_file(join_sup)), prosody_from_csv(read_file(join_pros)),
                              giv, m, {join_loss});
      write_file_atomic(join_out, records_to_csv(res.records));
      std::cerr << res.records.size() << " of " << res.universe << " keys joined\n";
      return kOk;
    }

    if (*analyze) {
      auto records = records_from_csv(read_file(records_file(an_records)));
      std::set<std::string> vs;
      for (const auto& r : records)
        for (const auto& [v, _] : r.surprisal) vs.insert(v);
      std::vector<std::string> variants(vs.begin(), vs.end());
      std::vector<WordGroup> groups = {WordGroup::all};
      if (!an_no_classes) groups.insert(groups.end(), {WordGroup::stop, WordGroup::content});
      auto report = correlation_grid(records, variants, prosodic_measures(), groups);
      fs::create_directories(an_out);
      write_file_atomic(an_out / "correlations.csv", correlation_to_csv(report));

      std::vector<GivennessRecord> content;
      std::map<WordKey, double> prom, s0, s5;
      for (const auto& r : records) {
        if (!r.givenness || r.is_stopword) continue;
        content.push_back(*r.givenness);
        prom[r.key()] = r.prosody.prominence;
        if (auto q = quantity(r, "sup_0")) s0[r.key()] = *q;
        if (auto q = quantity(r, "sup_5")) s5[r.key()] = *q;
      }
      if (!content.empty()) {
        auto norm = [&](const std::map<WordKey, double>& v) {
          return v.empty() ? v : novelty_normalize(v, content);
        };
        write_file_atomic(an_out / "givenness_profile.csv",
                          profile_to_csv(givenness_profile(norm(prom), content),
                                         givenness_profile(norm(s0), content),
                                         givenness_profile(norm(s5), content)));
      }
      std::cerr << report.entries.size() << " correlation cells written to " << an_out.string() << "\n";
      return kOk;
    }

    if (*scatter) {
      auto records = records_from_csv(read_file(records_file(sc_records)));
      auto json = scatter_to_json(scatter_export(records, sc_variant, sc_measure, sc_bins));
      if (sc_out.empty()) std::cout << json;
      else write_file_atomic(sc_out, json);
      return kOk;
    }

    if (*synth) {
      std::vector<std::pair<std::string, std::vector<PhonePrediction>>> systems;
      for (const auto& item : split(se_systems, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("system spec needs name=path: '" + item + "'");
        systems.emplace_back(trim(item.substr(0, eq)), predictions_from_csv(read_file(trim(item.substr(eq + 1)))));
      }
      auto report = evaluate_systems(systems, predictions_from_csv(read_file(se_ref)),
                                     word_classes_from_csv(read_file(se_classes)));
      fs::create_directories(se_out);
      write_file_atomic(se_out / "synth_eval.csv", eval_to_csv(report));
      auto table = format_eval_table(report);
      write_file_atomic(se_out / "table.txt", table);
      std::cout << table;
      return kOk;
    }

    if (*validate_cfg) {
      auto c = load_pipeline_config(vc_config);
      apply_environment(c);
      auto diags = validate_config(c);
      print_diagnostics(diags);
      if (has_errors(diags)) return kValidation;
      std::cout << "configuration ok\n";
      return kOk;
    }

    if (*run) {
      auto c = load_pipeline_config(run_config);
      apply_environment(c);
      auto diags = validate_config(c);
      print_diagnostics(diags);
      if (has_errors(diags)) return kValidation;
      auto outcomes = run_pipeline(c, std::cerr);
      std::size_t ran = 0;
      for (const auto& o : outcomes) ran += o.ran;
      std::cerr << ran << " of " << outcomes.size() << " stages ran; artifacts in " << c.out_dir.string() << "\n";
      return kOk;
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
