#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prosign/analysis.hpp"
#include "prosign/givenness.hpp"

namespace prosign {

// Phone-level prosody of one system. f0 is in standard (z) units, duration
// in 20 ms frames.
struct PhonePrediction {
  std::string segment_id;
  int phone_index = 0;
  int word_index = 0;
  double f0 = 0.0;
  double duration = 0.0;
};

// segment_id,phone_index,word_index,f0,dur
std::vector<PhonePrediction> predictions_from_csv(std::string_view text);
std::string predictions_to_csv(std::span<const PhonePrediction> rows);

// segment_id,word_index,group with group in {stop, content}
std::map<WordKey, WordGroup> word_classes_from_csv(std::string_view text);

struct EvalRow {
  std::string system_id;
  WordGroup group = WordGroup::all;
  double f0_rmse = 0.0;
  std::optional<double> f0_cor;
  double dur_rmse = 0.0;
  std::optional<double> dur_cor;
  std::size_t n_phones = 0;
};

struct EvalReport {
  // Group-major (all, content, stop), systems in input order.
  std::vector<EvalRow> rows;
};

// Metrics over the phones of each group, phones taken in reference key
// order. Every system must cover exactly the reference (segment_id,
// phone_index) set and every phone's word needs a class; otherwise
// ValidationError listing the offending keys.
EvalReport evaluate_systems(
    const std::vector<std::pair<std::string, std::vector<PhonePrediction>>>& systems,
    std::span<const PhonePrediction> reference, const std::map<WordKey, WordGroup>& word_class);

// system,group,f0_rmse,f0_cor,dur_rmse,dur_cor,n
std::string eval_to_csv(const EvalReport& report);

// Table with one section per word group and 3-decimal cells.
std::string format_eval_table(const EvalReport& report);
// Reads a table written by format_eval_table (values at table precision,
// n_phones left 0).
EvalReport parse_eval_table(std::string_view text);

}  // namespace prosign
