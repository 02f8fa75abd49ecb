#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prosign/corpus.hpp"
#include "prosign/error.hpp"
#include "prosign/givenness.hpp"
#include "prosign/lm_backend.hpp"
#include "prosign/prominence.hpp"

namespace prosign {

struct PipelineConfig {
  std::filesystem::path metadata;
  std::filesystem::path audio_dir;
  std::filesystem::path alignments_dir;
  std::optional<std::filesystem::path> counts;
  std::optional<std::filesystem::path> scored;
  std::optional<std::filesystem::path> stopwords;
  std::filesystem::path out_dir;

  std::string backend = "file";
  HttpConfig http;
  std::vector<std::string> models;
  std::vector<int> contexts = {0, 1, 2, 3, 4, 5};
  int max_context = 5;
  std::string joiner = " ";
  TextField text_field = TextField::normalized;
  GivennessOptions givenness;
  ProminenceConfig prominence;
  bool word_classes = true;
  double join_max_loss = 0.05;
  int workers = 1;

  // Problems found while reading the file, surfaced by validate_config.
  std::vector<std::string> parse_problems;
};

// Flat `key = value` file. Relative paths resolve against `base_dir`. Values
// may be double-quoted to keep surrounding whitespace (`joiner = " "`).
// `prominence.<key>` entries feed prominence_config_from.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// PROSIGN_WORKERS, when set to a positive integer, replaces config.workers.
void apply_environment(PipelineConfig& config);

struct Diagnostic {
  enum class Severity { warning, error };
  Severity severity = Severity::error;
  std::string key;
  std::string message;
};

std::vector<Diagnostic> validate_config(const PipelineConfig& config);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageOutcome {
  std::string stage;
  bool ran = false;
};

// score -> surprisal -> prominence -> givenness -> join -> analyze. A stage is
// skipped when its outputs exist and the recorded content hashes of its
// inputs and outputs still match. Throws StageError naming the failing stage.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, std::ostream& log);

}  // namespace prosign
