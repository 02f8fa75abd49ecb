#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "../support/synthetic.hpp"
#include "prosign/analysis.hpp"
#include "prosign/io.hpp"
#include "prosign/pipeline.hpp"

using namespace prosign;
namespace fs = std::filesystem;

namespace {

std::string config_text(const fixture::MiniCorpus& c, const fs::path& out, const std::string& extra = "") {
  return "metadata = " + c.metadata.string() + "\naudio_dir = " + c.audio.string() +
         "\nalignments_dir = " + c.alignments.string() + "\nscored = " + c.scored.string() +
         "\ncounts = " + c.counts.string() + "\nstopwords = " + c.stopwords.string() +
         "\nout_dir = " + out.string() + "\nmodels = toy-lm\ncontexts = 0,1,2,3,4,5\njoiner = \" \"\n" + extra;
}

bool has_error_for(const std::vector<Diagnostic>& d, const std::string& key) {
  for (const auto& x : d)
    if (x.key == key && x.severity == Diagnostic::Severity::error) return true;
  return false;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fixture::temp_dir("pipeline");
    corpus_ = fixture::make_mini_corpus(root_ / "corpus");
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  PipelineConfig config(const std::string& name, const std::string& extra = "") {
    return parse_pipeline_config(config_text(corpus_, root_ / name, extra), root_);
  }

  static fs::path root_;
  static fixture::MiniCorpus corpus_;
};

fs::path PipelineTest::root_;
fixture::MiniCorpus PipelineTest::corpus_;

}  // namespace

TEST_F(PipelineTest, ConfigParsesAndValidates) {
  auto c = config("out_cfg", "lookback = 7\nprominence.n_scales = 10\nhttp.port = 9000\n");
  EXPECT_EQ(c.joiner, " ");
  EXPECT_EQ(c.givenness.lookback_sentences, 7);
  EXPECT_EQ(c.prominence.cwt.n_scales, 10);
  EXPECT_EQ(c.http.port, 9000);
  EXPECT_FALSE(has_errors(validate_config(c)));
}

TEST_F(PipelineTest, RelativePathsResolveAgainstConfigDir) {
  auto c = parse_pipeline_config("metadata = corpus/metadata.csv\nout_dir = out\n", root_);
  EXPECT_EQ(c.metadata, root_ / "corpus/metadata.csv");
  EXPECT_EQ(c.out_dir, root_ / "out");
}

TEST_F(PipelineTest, ContextSixIsAnError) {
  auto c = config("x", "contexts = 0,6\n");
  EXPECT_TRUE(has_error_for(validate_config(c), "contexts"));
  c.max_context = 6;
  EXPECT_FALSE(has_error_for(validate_config(c), "contexts"));
}

TEST_F(PipelineTest, MissingStopwordsWithWordClassesIsAnError) {
  auto c = config("x");
  c.stopwords.reset();
  EXPECT_TRUE(has_error_for(validate_config(c), "stopwords"));
  c.stopwords = root_ / "nope.txt";
  EXPECT_TRUE(has_error_for(validate_config(c), "stopwords"));
  c.stopwords.reset();
  c.word_classes = false;
  EXPECT_FALSE(has_error_for(validate_config(c), "stopwords"));
}

TEST_F(PipelineTest, EmptyModelListIsAnError) {
  auto c = config("x", "models =\n");
  EXPECT_TRUE(c.models.empty());
  EXPECT_TRUE(has_error_for(validate_config(c), "models"));
}

TEST_F(PipelineTest, WarningsAreNotErrors) {
  auto c = config("x", "backend = http\n");
  auto d = validate_config(c);
  EXPECT_FALSE(has_errors(d));
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].severity, Diagnostic::Severity::warning);
  c.backend = "grpc";
  EXPECT_TRUE(has_error_for(validate_config(c), "backend"));
}

TEST_F(PipelineTest, UnknownKeyReported) {
  auto c = config("x", "colour = blue\n");
  EXPECT_TRUE(has_error_for(validate_config(c), "config"));
}

TEST_F(PipelineTest, WorkersFromEnvironment) {
  auto c = config("x");
  setenv("PROSIGN_WORKERS", "3", 1);
  apply_environment(c);
  unsetenv("PROSIGN_WORKERS");
  EXPECT_EQ(c.workers, 3);
}

TEST_F(PipelineTest, IncrementalRuns) {
  auto c = config("out_inc");
  std::ostringstream log;
  auto first = run_pipeline(c, log);
  ASSERT_EQ(first.size(), 6u);
  for (const auto& o : first) EXPECT_TRUE(o.ran) << o.stage;
  for (const char* f : {"scored.jsonl", "surprisal.csv", "prosody.csv", "givenness.csv", "records.csv",
                        "correlations.csv", "givenness_profile.csv", "scatter_sup_5_prominence.json"})
    EXPECT_TRUE(fs::exists(c.out_dir / f)) << f;

  auto second = run_pipeline(c, log);
  for (const auto& o : second) EXPECT_FALSE(o.ran) << o.stage;

  fs::remove(c.out_dir / "surprisal.csv");
  auto third = run_pipeline(c, log);
  EXPECT_FALSE(third[0].ran);
  EXPECT_TRUE(third[1].ran);
  EXPECT_FALSE(third[2].ran);

  auto records = records_from_csv(read_file(c.out_dir / "records.csv"));
  std::size_t words = 0;
  for (const auto& s : fixture::mini_sentences()) words += split_words(s).size();
  EXPECT_EQ(records.size(), words);
  EXPECT_EQ(records[0].surprisal.size(), 7u);
}

TEST_F(PipelineTest, SettingChangeRerunsDependentStage) {
  auto c = config("out_set");
  std::ostringstream log;
  run_pipeline(c, log);
  c.givenness.lookback_sentences = 3;
  auto again = run_pipeline(c, log);
  EXPECT_FALSE(again[0].ran);
  EXPECT_FALSE(again[2].ran);
  EXPECT_TRUE(again[3].ran);
}

TEST_F(PipelineTest, CorruptScoredFileAbortsAtSurprisal) {
  auto dir = root_ / "corrupt";
  fs::create_directories(dir);
  auto lines = split(read_file(corpus_.scored), '\n');
  lines[3] = lines[3].substr(0, lines[3].size() / 2);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_file_atomic(dir / "scored.jsonl", text);
  auto c = config("out_corrupt");
  c.scored = dir / "scored.jsonl";
  std::ostringstream log;
  try {
    run_pipeline(c, log);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "surprisal");
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos) << e.what();
  }
}

TEST_F(PipelineTest, TwoRunsAreByteIdentical) {
  auto a = config("out_det_a");
  auto b = config("out_det_b");
  b.workers = 3;
  std::ostringstream log;
  run_pipeline(a, log);
  run_pipeline(b, log);
  auto sa = snapshot(a.out_dir), sb = snapshot(b.out_dir);
  EXPECT_EQ(sa.size(), sb.size());
  EXPECT_TRUE(sa == sb);
}

TEST_F(PipelineTest, SeveralModels) {
  auto dir = root_ / "two_models";
  auto c2 = fixture::make_mini_corpus(dir, {"toy-a", "toy-b"});
  auto c = parse_pipeline_config(config_text(c2, dir / "out", "models = toy-a, toy-b\n"), dir);
  ASSERT_FALSE(has_errors(validate_config(c)));
  std::ostringstream log;
  run_pipeline(c, log);
  EXPECT_TRUE(fs::exists(c.out_dir / "givenness_profile_toy-a.csv"));
  EXPECT_TRUE(fs::exists(c.out_dir / "scatter_toy-b_sup_5_prominence.json"));
  auto corr = read_file(c.out_dir / "correlations.csv");
  EXPECT_NE(corr.find("toy-b:sup_3"), std::string::npos);
}

namespace {

int run_cli(const std::string& args) {
  int rc = std::system((std::string(PROSIGN_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_F(PipelineTest, CliExitCodes) {
  auto good = root_ / "good.cfg";
  write_file_atomic(good, config_text(corpus_, root_ / "out_cli"));
  EXPECT_EQ(run_cli("validate-config --config " + good.string()), 0);
  EXPECT_EQ(run_cli("run --config " + good.string()), 0);
  EXPECT_EQ(run_cli("run --config " + good.string()), 0);

  auto bad = root_ / "bad.cfg";
  write_file_atomic(bad, config_text(corpus_, root_ / "out_cli_bad", "contexts = 0,6\n"));
  EXPECT_EQ(run_cli("validate-config --config " + bad.string()), 2);
  EXPECT_EQ(run_cli("run --config " + bad.string()), 2);

  auto broken_scored = root_ / "broken.jsonl";
  write_file_atomic(broken_scored, "{not json}\n");
  auto broken = root_ / "broken.cfg";
  auto text = config_text(corpus_, root_ / "out_cli_broken");
  text += "scored = " + broken_scored.string() + "\n";
  write_file_atomic(broken, text);
  EXPECT_EQ(run_cli("run --config " + broken.string()), 3);
}

TEST_F(PipelineTest, CliSubcommandsCompose) {
  auto out = root_ / "cli_steps";
  fs::create_directories(out);
  auto meta = corpus_.metadata.string();
  ASSERT_EQ(run_cli("corpus validate --metadata " + meta + " --audio " + corpus_.audio.string() +
                    " --alignments " + corpus_.alignments.string()), 0);
  ASSERT_EQ(run_cli("score --backend file --input " + corpus_.scored.string() + " --model toy-lm --context 0,5" +
                    " --metadata " + meta + " --out " + (out / "s.jsonl").string()), 0);
  ASSERT_EQ(run_cli("surprisal --scored " + (out / "s.jsonl").string() + " --contexts 0,5 --metadata " + meta +
                    " --out " + (out / "sup.csv").string()), 0);
  ASSERT_EQ(run_cli("prominence --metadata " + meta + " --audio " + corpus_.audio.string() + " --alignments " +
                    corpus_.alignments.string() + " --out " + (out / "pros.csv").string()), 0);
  ASSERT_EQ(run_cli("givenness --metadata " + meta + " --stopwords " + corpus_.stopwords.string() + " --out " +
                    (out / "giv.csv").string()), 0);
  ASSERT_EQ(run_cli("join --metadata " + meta + " --stopwords " + corpus_.stopwords.string() + " --surprisal " +
                    (out / "sup.csv").string() + " --prosody " + (out / "pros.csv").string() + " --givenness " +
                    (out / "giv.csv").string() + " --out " + (out / "records.csv").string()), 0);
  ASSERT_EQ(run_cli("analyze --records " + out.string() + " --out " + (out / "an").string()), 0);
  EXPECT_TRUE(fs::exists(out / "an" / "correlations.csv"));
  ASSERT_EQ(run_cli("scatter --records " + out.string() + " --variant sup_5 --measure prominence --out " +
                    (out / "sc.json").string()), 0);
  EXPECT_TRUE(fs::exists(out / "sc.json"));
  EXPECT_EQ(run_cli("surprisal --scored /nonexistent --metadata " + meta + " --out x.csv"), 2);
}
