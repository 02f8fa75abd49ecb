#include "prosign/synth_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/stats.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace {

using PhoneKey = std::pair<std::string, int>;

std::string phone_key_text(const PhoneKey& k) { return k.first + "/" + std::to_string(k.second); }

constexpr WordGroup kTableGroups[] = {WordGroup::all, WordGroup::content, WordGroup::stop};

std::string section_title(WordGroup g) {
  switch (g) {
    case WordGroup::all: return "All words";
    case WordGroup::content: return "content words";
    case WordGroup::stop: return "stop words";
  }
  return "";
}

std::string cell3(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

std::vector<PhonePrediction> predictions_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  auto c_seg = t.column("segment_id"), c_ph = t.column("phone_index"), c_w = t.column("word_index"),
       c_f0 = t.column("f0"), c_dur = t.column("dur");
  std::vector<PhonePrediction> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      PhonePrediction p{f[c_seg], static_cast<int>(parse_int(f[c_ph])),
                        static_cast<int>(parse_int(f[c_w])), parse_double(f[c_f0]),
                        parse_double(f[c_dur])};
      if (!(p.duration >= 0.0)) throw ValidationError("negative duration");
      out.push_back(std::move(p));
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return out;
}

std::string predictions_to_csv(std::span<const PhonePrediction> rows) {
  CsvWriter csv({"segment_id", "phone_index", "word_index", "f0", "dur"});
  for (const auto& p : rows)
    csv.row({p.segment_id, std::to_string(p.phone_index), std::to_string(p.word_index),
             format_exact(p.f0), format_exact(p.duration)});
  return csv.str();
}

std::map<WordKey, WordGroup> word_classes_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  auto c_seg = t.column("segment_id"), c_w = t.column("word_index"), c_g = t.column("group");
  std::map<WordKey, WordGroup> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      auto g = parse_group(f[c_g]);
      if (g == WordGroup::all) throw ValidationError("word class must be stop or content");
      out[{f[c_seg], static_cast<int>(parse_int(f[c_w]))}] = g;
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return out;
}

EvalReport evaluate_systems(
    const std::vector<std::pair<std::string, std::vector<PhonePrediction>>>& systems,
    std::span<const PhonePrediction> reference, const std::map<WordKey, WordGroup>& word_class) {
  auto index = [](std::span<const PhonePrediction> rows, const std::string& who) {
    std::map<PhoneKey, const PhonePrediction*> m;
    for (const auto& p : rows)
      if (!m.emplace(PhoneKey{p.segment_id, p.phone_index}, &p).second)
        throw ValidationError(who + ": duplicate phone " +
                              phone_key_text({p.segment_id, p.phone_index}));
    return m;
  };
  const auto ref = index(reference, "reference");

  std::map<PhoneKey, WordGroup> phone_group;
  std::vector<std::string> unclassified;
  for (const auto& [k, p] : ref) {
    auto it = word_class.find({p->segment_id, p->word_index});
    if (it == word_class.end())
      unclassified.push_back(p->segment_id + "#" + std::to_string(p->word_index));
    else
      phone_group[k] = it->second;
  }
  if (!unclassified.empty())
    throw ValidationError("words without a class: " + unclassified.front() +
                          (unclassified.size() > 1
                               ? " and " + std::to_string(unclassified.size() - 1) + " more"
                               : ""));

  std::vector<std::map<PhoneKey, const PhonePrediction*>> sys_index;
  for (const auto& [id, rows] : systems) {
    auto m = index(rows, id);
    std::vector<std::string> missing, extra;
    for (const auto& [k, _] : ref)
      if (!m.count(k)) missing.push_back(phone_key_text(k));
    for (const auto& [k, _] : m)
      if (!ref.count(k)) extra.push_back(phone_key_text(k));
    if (!missing.empty() || !extra.empty()) {
      std::string msg = "system " + id + " does not cover the reference phones;";
      if (!missing.empty()) {
        msg += " missing:";
        for (const auto& s : missing) msg += " " + s;
      }
      if (!extra.empty()) {
        msg += " extra:";
        for (const auto& s : extra) msg += " " + s;
      }
      throw ValidationError(msg);
    }
    sys_index.push_back(std::move(m));
  }

  EvalReport report;
  for (auto g : kTableGroups) {
    for (std::size_t s = 0; s < systems.size(); ++s) {
      std::vector<double> pf, rf, pd, rd;
      for (const auto& [k, r] : ref) {
        if (g != WordGroup::all && phone_group[k] != g) continue;
        const auto* p = sys_index[s].at(k);
        pf.push_back(p->f0);
        rf.push_back(r->f0);
        pd.push_back(p->duration);
        rd.push_back(r->duration);
      }
      EvalRow row;
      row.system_id = systems[s].first;
      row.group = g;
      row.n_phones = pf.size();
      if (!pf.empty()) {
        row.f0_rmse = rmse(pf, rf);
        row.dur_rmse = rmse(pd, rd);
      }
      if (pf.size() >= 3) {
        row.f0_cor = pearson(pf, rf);
        row.dur_cor = pearson(pd, rd);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string eval_to_csv(const EvalReport& report) {
  CsvWriter csv({"system", "group", "f0_rmse", "f0_cor", "dur_rmse", "dur_cor", "n"});
  auto opt = [](const std::optional<double>& v) { return v ? format_report(*v) : "undefined"; };
  for (const auto& r : report.rows)
    csv.row({r.system_id, std::string(group_name(r.group)), format_report(r.f0_rmse), opt(r.f0_cor),
             format_report(r.dur_rmse), opt(r.dur_cor), std::to_string(r.n_phones)});
  return csv.str();
}

std::string format_eval_table(const EvalReport& report) {
  std::size_t name_w = 8;
  for (const auto& r : report.rows) name_w = std::max(name_w, r.system_id.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s  %8s\n", static_cast<int>(name_w), "",
                "f0 RMSE", "f0 cor", "dur RMSE", "dur cor");
  out += buf;
  for (auto g : kTableGroups) {
    bool header_done = false;
    for (const auto& r : report.rows) {
      if (r.group != g) continue;
      if (!header_done) {
        out += section_title(g) + "\n";
        header_done = true;
      }
      std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s  %8s\n", static_cast<int>(name_w),
                    r.system_id.c_str(), cell3(r.f0_rmse).c_str(), cell3(r.f0_cor).c_str(),
                    cell3(r.dur_rmse).c_str(), cell3(r.dur_cor).c_str());
      out += buf;
    }
  }
  return out;
}

EvalReport parse_eval_table(std::string_view text) {
  EvalReport report;
  std::optional<WordGroup> current;
  std::size_t line_no = 0;
  auto value = [&](const std::string& s) -> std::optional<double> {
    if (s == "n/a") return std::nullopt;
    return parse_double(s);
  };
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.find("RMSE") != std::string_view::npos) continue;
    bool is_section = false;
    for (auto g : kTableGroups)
      if (line == section_title(g)) {
        current = g;
        is_section = true;
      }
    if (is_section) continue;
    if (!current) throw ParseError("row before any section", line_no);
    std::istringstream ss{std::string(line)};
    std::string name, a, b, c, d;
    if (!(ss >> name >> a >> b >> c >> d)) throw ParseError("expected name and 4 values", line_no);
    try {
      EvalRow r;
      r.system_id = name;
      r.group = *current;
      r.f0_rmse = parse_double(a);
      r.f0_cor = value(b);
      r.dur_rmse = parse_double(c);
      r.dur_cor = value(d);
      report.rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return report;
}

}  // namespace prosign
