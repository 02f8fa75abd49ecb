#include "prosign/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/stats.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace {

std::string key_text(const WordKey& k) {
  return k.segment_id + "#" + std::to_string(k.word_index);
}

constexpr std::string_view kSurprisalPrefix = "s:";

}  // namespace

std::string_view group_name(WordGroup g) {
  switch (g) {
    case WordGroup::all: return "all";
    case WordGroup::stop: return "stop";
    case WordGroup::content: return "content";
  }
  return "all";
}

WordGroup parse_group(std::string_view name) {
  if (name == "all") return WordGroup::all;
  if (name == "stop") return WordGroup::stop;
  if (name == "content") return WordGroup::content;
  throw ValidationError("unknown word group '" + std::string(name) + "'");
}

const std::vector<std::string>& prosodic_measures() {
  static const std::vector<std::string> names = {"prominence",     "duration",      "f0-mean",
                                                 "f0-sd",          "intensity-mean", "intensity-sd"};
  return names;
}

std::optional<double> quantity(const WordRecord& r, std::string_view name) {
  if (name == "prominence") return r.prosody.prominence;
  if (name == "duration") return r.prosody.duration_s;
  if (name == "f0-mean") return r.prosody.f0_mean;
  if (name == "f0-sd") return r.prosody.f0_sd;
  if (name == "intensity-mean") return r.prosody.intensity_mean;
  if (name == "intensity-sd") return r.prosody.intensity_sd;
  auto it = r.surprisal.find(std::string(name));
  if (it == r.surprisal.end()) return std::nullopt;
  return it->second;
}

JoinResult join_records(std::span<const WordSurprisal> surprisal, std::span<const WordProsody> prosody,
                        std::span<const GivennessRecord> givenness, const CorpusManifest& manifest,
                        const JoinOptions& options) {
  std::set<std::string> models;
  for (const auto& s : surprisal)
    if (s.model_id != kUnigramVariant) models.insert(s.model_id);
  const bool qualify = models.size() > 1;

  auto check_key = [&](const WordKey& k) {
    if (!manifest.contains(k.segment_id))
      throw ValidationError("key " + key_text(k) + " refers to an unknown segment");
    auto n = split_words(manifest.at(k.segment_id).text).size();
    if (k.word_index < 0 || static_cast<std::size_t>(k.word_index) >= n)
      throw ValidationError("key " + key_text(k) + " is outside the segment's " +
                            std::to_string(n) + " words");
  };

  std::map<WordKey, std::map<std::string, double>> by_sup;
  for (const auto& s : surprisal) {
    WordKey k{s.segment_id, s.word_index};
    check_key(k);
    auto name = s.variant == kUnigramVariant || !qualify ? s.variant : s.model_id + ":" + s.variant;
    if (!by_sup[k].emplace(name, s.bits).second)
      throw ValidationError("duplicate key " + key_text(k) + " for surprisal variant " + name);
  }
  std::map<WordKey, const WordProsody*> by_pros;
  for (const auto& p : prosody) {
    WordKey k{p.segment_id, p.word_index};
    check_key(k);
    if (!by_pros.emplace(k, &p).second) throw ValidationError("duplicate prosody key " + key_text(k));
  }
  std::map<WordKey, const GivennessRecord*> by_giv;
  for (const auto& g : givenness) {
    check_key(g.key());
    if (!by_giv.emplace(g.key(), &g).second)
      throw ValidationError("duplicate givenness key " + key_text(g.key()));
  }

  std::set<WordKey> universe;
  for (const auto& [k, _] : by_sup) universe.insert(k);
  for (const auto& [k, _] : by_pros) universe.insert(k);
  for (const auto& [k, _] : by_giv) universe.insert(k);

  JoinResult res;
  res.universe = universe.size();
  const bool use_giv = !givenness.empty();
  for (const auto& k : universe) {
    bool has_s = by_sup.count(k), has_p = by_pros.count(k), has_g = by_giv.count(k);
    res.missing_surprisal += !has_s;
    res.missing_prosody += !has_p;
    if (use_giv) res.missing_givenness += !has_g;
    if (!has_s || !has_p || (use_giv && !has_g)) continue;
    WordRecord r;
    r.segment_id = k.segment_id;
    r.word_index = k.word_index;
    const auto words = split_words(manifest.at(k.segment_id).text);
    const auto& w = words[static_cast<std::size_t>(k.word_index)];
    r.word = w.surface;
    r.is_stopword = manifest.is_stopword(w.norm);
    r.surprisal = by_sup[k];
    r.prosody = *by_pros[k];
    if (use_giv) r.givenness = *by_giv[k];
    res.records.push_back(std::move(r));
  }

  std::sort(res.records.begin(), res.records.end(), [&](const WordRecord& a, const WordRecord& b) {
    auto pa = manifest.position(a.segment_id), pb = manifest.position(b.segment_id);
    return pa != pb ? pa < pb : a.word_index < b.word_index;
  });

  if (res.universe > 0) {
    const double loss = static_cast<double>(res.universe - res.records.size()) /
                        static_cast<double>(res.universe);
    if (loss > options.max_loss)
      throw ValidationError("join lost " + std::to_string(res.universe - res.records.size()) +
                            " of " + std::to_string(res.universe) + " keys (missing surprisal " +
                            std::to_string(res.missing_surprisal) + ", prosody " +
                            std::to_string(res.missing_prosody) + ", givenness " +
                            std::to_string(res.missing_givenness) + ")");
  }
  return res;
}

CorrelationReport correlation_grid(std::span<const WordRecord> records,
                                   std::span<const std::string> variants,
                                   std::span<const std::string> measures,
                                   std::span<const WordGroup> groups) {
  std::vector<const WordRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const WordRecord* a, const WordRecord* b) { return a->key() < b->key(); });

  CorrelationReport report;
  for (const auto& v : variants)
    for (const auto& m : measures)
      for (auto g : groups) {
        std::vector<double> x, y;
        for (const auto* r : sorted) {
          if (g == WordGroup::stop && !r->is_stopword) continue;
          if (g == WordGroup::content && r->is_stopword) continue;
          auto a = quantity(*r, v), b = quantity(*r, m);
          if (!a || !b || !std::isfinite(*a) || !std::isfinite(*b)) continue;
          x.push_back(*a);
          y.push_back(*b);
        }
        CorrelationEntry e{v, m, g, std::nullopt, x.size()};
        if (x.size() >= 3) e.rho = spearman_rho(x, y);
        report.entries.push_back(std::move(e));
      }
  return report;
}

std::string correlation_to_csv(const CorrelationReport& report) {
  CsvWriter csv({"variant", "measure", "group", "rho", "n"});
  for (const auto& e : report.entries)
    csv.row({e.variant, e.measure, std::string(group_name(e.group)),
             e.rho ? format_report(*e.rho) : "undefined", std::to_string(e.n)});
  return csv.str();
}

ScatterExport scatter_export(std::span<const WordRecord> records, std::string_view variant,
                             std::string_view measure, std::size_t bins) {
  if (bins == 0) throw ValidationError("scatter needs at least one bin");
  ScatterExport out;
  out.variant = variant;
  out.measure = measure;
  out.bins = bins;

  std::vector<std::tuple<bool, double, double>> raw;
  for (const auto& r : records) {
    auto a = quantity(r, variant), b = quantity(r, measure);
    if (!a || !b || !std::isfinite(*a) || !std::isfinite(*b)) {
      ++out.skipped;
      continue;
    }
    raw.emplace_back(r.is_stopword, *a, *b);
  }
  double min_x = 0.0, min_y = 0.0;
  for (const auto& [stop, a, b] : raw) {
    min_x = std::min(min_x, a);
    min_y = std::min(min_y, b);
  }
  out.x_shift = -min_x + 0.0;
  out.y_shift = -min_y + 0.0;

  out.groups = {{WordGroup::stop, {}, {}, {}}, {WordGroup::content, {}, {}, {}}};
  double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
  for (const auto& [stop, a, b] : raw) {
    double x = std::sqrt(std::max(0.0, a + out.x_shift));
    double y = std::sqrt(std::max(0.0, b + out.y_shift));
    out.groups[stop ? 0 : 1].points.emplace_back(x, y);
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  }
  if (raw.empty()) lo_x = hi_x = lo_y = hi_y = 0.0;
  out.x_range = {lo_x, hi_x};
  out.y_range = {lo_y, hi_y};

  auto bin_of = [&](double v, double lo, double hi) {
    if (!(hi > lo)) return std::size_t{0};
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(b, bins - 1);
  };
  for (auto& g : out.groups) {
    g.hist_x.assign(bins, 0);
    g.hist_y.assign(bins, 0);
    for (const auto& [x, y] : g.points) {
      ++g.hist_x[bin_of(x, lo_x, hi_x)];
      ++g.hist_y[bin_of(y, lo_y, hi_y)];
    }
  }
  return out;
}

std::string scatter_to_json(const ScatterExport& s) {
  nlohmann::ordered_json j;
  j["variant"] = s.variant;
  j["measure"] = s.measure;
  j["transform"] = "sqrt(value + shift)";
  j["x_shift"] = s.x_shift;
  j["y_shift"] = s.y_shift;
  j["x_range"] = {s.x_range.first, s.x_range.second};
  j["y_range"] = {s.y_range.first, s.y_range.second};
  j["bins"] = s.bins;
  j["skipped"] = s.skipped;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : s.groups) {
    nlohmann::ordered_json jg;
    jg["group"] = group_name(g.group);
    auto pts = nlohmann::ordered_json::array();
    for (const auto& [x, y] : g.points) pts.push_back({x, y});
    jg["points"] = std::move(pts);
    jg["hist_x"] = g.hist_x;
    jg["hist_y"] = g.hist_y;
    groups.push_back(std::move(jg));
  }
  j["groups"] = std::move(groups);
  return j.dump() + "\n";
}

std::string records_to_csv(std::span<const WordRecord> records) {
  std::set<std::string> variants;
  for (const auto& r : records)
    for (const auto& [v, _] : r.surprisal) variants.insert(v);
  std::vector<std::string> header = {"segment_id", "word_index", "word", "is_stopword", "distance",
                                     "is_content", "prominence", "duration_s", "f0_mean", "f0_sd",
                                     "int_mean", "int_sd", "voiced_flag"};
  for (const auto& v : variants) header.push_back(std::string(kSurprisalPrefix) + v);
  CsvWriter csv(header);
  for (const auto& r : records) {
    const auto& p = r.prosody;
    std::vector<std::string> row = {r.segment_id, std::to_string(r.word_index), r.word,
                                    r.is_stopword ? "1" : "0"};
    if (r.givenness) {
      row.push_back(r.givenness->distance ? std::to_string(*r.givenness->distance) : "novel");
      row.push_back(r.givenness->is_content ? "1" : "0");
    } else {
      row.insert(row.end(), {"", ""});
    }
    for (double v : {p.prominence, p.duration_s, p.f0_mean, p.f0_sd, p.intensity_mean, p.intensity_sd})
      row.push_back(format_exact(v));
    row.push_back(p.voiced ? "1" : "0");
    for (const auto& v : variants) {
      auto it = r.surprisal.find(v);
      row.push_back(it == r.surprisal.end() ? "" : format_exact(it->second));
    }
    csv.row(row);
  }
  return csv.str();
}

std::vector<WordRecord> records_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  const auto c_seg = t.column("segment_id"), c_idx = t.column("word_index"), c_word = t.column("word"),
             c_stop = t.column("is_stopword"), c_dist = t.column("distance"),
             c_content = t.column("is_content"), c_prom = t.column("prominence"),
             c_dur = t.column("duration_s"), c_fm = t.column("f0_mean"), c_fs = t.column("f0_sd"),
             c_im = t.column("int_mean"), c_is = t.column("int_sd"), c_v = t.column("voiced_flag");
  std::vector<std::pair<std::size_t, std::string>> variant_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind(kSurprisalPrefix, 0) == 0)
      variant_cols.emplace_back(i, t.header[i].substr(kSurprisalPrefix.size()));

  std::vector<WordRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      WordRecord r;
      r.segment_id = f[c_seg];
      r.word_index = static_cast<int>(parse_int(f[c_idx]));
      r.word = f[c_word];
      r.is_stopword = f[c_stop] == "1";
      if (!f[c_dist].empty()) {
        GivennessRecord g;
        g.segment_id = r.segment_id;
        g.word_index = r.word_index;
        g.word = normalize_word(r.word);
        if (f[c_dist] != "novel") g.distance = static_cast<int>(parse_int(f[c_dist]));
        g.is_content = f[c_content] == "1";
        r.givenness = std::move(g);
      }
      auto& p = r.prosody;
      p.segment_id = r.segment_id;
      p.word_index = r.word_index;
      p.word = r.word;
      p.prominence = parse_double(f[c_prom]);
      p.duration_s = parse_double(f[c_dur]);
      p.f0_mean = parse_double(f[c_fm]);
      p.f0_sd = parse_double(f[c_fs]);
      p.intensity_mean = parse_double(f[c_im]);
      p.intensity_sd = parse_double(f[c_is]);
      p.voiced = f[c_v] == "1";
      for (const auto& [col, name] : variant_cols)
        if (!f[col].empty()) r.surprisal[name] = parse_double(f[col]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return out;
}

}  // namespace prosign
