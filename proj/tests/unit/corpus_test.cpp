#include <gtest/gtest.h>

#include <algorithm>

#include "prosign/corpus.hpp"
#include "prosign/error.hpp"

using namespace prosign;

TEST(Manifest, ReordersById) {
  auto m = parse_manifest("LJ001-0002|text a|Text A.\nLJ001-0001|text b|Text B.\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.segments()[0].id, "LJ001-0001");
  EXPECT_EQ(m.segments()[0].text, "Text B.");
  EXPECT_EQ(m.segments()[1].order_index, 1);
}

TEST(Manifest, NewChapterResetsOrder) {
  auto m = parse_manifest("LJ001-0001|a|a\nLJ001-0002|b|b\nLJ002-0001|c|c\n");
  EXPECT_EQ(m.segments()[2].chapter_id, "LJ002");
  EXPECT_EQ(m.segments()[2].order_index, 0);
  EXPECT_EQ(m.segments()[1].chapter_id, "LJ001");
}

TEST(Manifest, EmptyFileIsEmptyManifest) {
  EXPECT_TRUE(parse_manifest("").empty());
}

TEST(Manifest, RawFieldSelectable) {
  CorpusLayout layout;
  layout.text_field = TextField::raw;
  auto m = parse_manifest("LJ001-0001|raw 1|normalized one\n", layout);
  EXPECT_EQ(m.segments()[0].text, "raw 1");
}

TEST(Manifest, WrongFieldCountNamesLine) {
  try {
    parse_manifest("LJ001-0001|a|a\nLJ001-0002|only two\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Manifest, DuplicateIdRejected) {
  EXPECT_THROW(parse_manifest("LJ001-0001|a|a\nLJ001-0001|b|b\n"), ValidationError);
}

TEST(Manifest, ChapterOrderMatchesIdOrder) {
  auto m = parse_manifest("LJ002-0003|x|x\nLJ001-0010|x|x\nLJ002-0001|x|x\nLJ001-0002|x|x\nLJ003-0001|x|x\n");
  auto segs = m.segments();
  auto by_chapter = segs;
  std::sort(by_chapter.begin(), by_chapter.end(), [](const Segment& a, const Segment& b) {
    return std::tie(a.chapter_id, a.order_index) < std::tie(b.chapter_id, b.order_index);
  });
  EXPECT_EQ(by_chapter, segs);
}

TEST(Manifest, JsonRoundTrip) {
  CorpusLayout layout;
  layout.audio_dir = "/data/wavs";
  layout.alignment_dir = "/data/al";
  auto m = parse_manifest("LJ001-0001|a|Some \"quoted\" text\n", layout);
  m.set_stopwords({"the", "a"});
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(Manifest, LookupErrors) {
  auto m = parse_manifest("LJ001-0001|a|a\n");
  EXPECT_THROW(m.position("LJ009-0001"), LookupError);
  EXPECT_TRUE(m.contains("LJ001-0001"));
}

TEST(Stopwords, CommentsAndCase) {
  auto s = parse_stopwords("# header\nthe\n  And \n\n");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.count("and"));
}

TEST(Alignment, SingleWordWithPhones) {
  auto a = parse_alignment(R"({"words":[{"word":"cat","start":0.10,"end":0.45,"phones":[
    {"label":"k","start":0.10,"end":0.20},{"label":"ae","start":0.20,"end":0.35},
    {"label":"t","start":0.35,"end":0.45}]}]})");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].word, "cat");
  EXPECT_EQ(a[0].phones.size(), 3u);
  EXPECT_EQ(parse_alignment(alignment_to_json(a)), a);
}

TEST(Alignment, EmptyIntervalRejected) {
  EXPECT_THROW(parse_alignment(R"({"words":[{"word":"a","start":0.5,"end":0.5,"phones":[]}]})"),
               ValidationError);
}

TEST(Alignment, OverlapNamesBothWords) {
  try {
    parse_alignment(R"({"words":[{"word":"one","start":0.0,"end":0.5,"phones":[]},
                                 {"word":"two","start":0.4,"end":0.9,"phones":[]}]})");
    FAIL();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("one"), std::string::npos);
    EXPECT_NE(msg.find("two"), std::string::npos);
  }
}

TEST(Alignment, SortedByTime) {
  auto a = parse_alignment(R"({"words":[{"word":"b","start":1.0,"end":1.5,"phones":[]},
                                        {"word":"a","start":0.0,"end":0.5,"phones":[]}]})");
  EXPECT_EQ(a[0].word, "a");
}

TEST(Alignment, MissingFileIsIoError) {
  EXPECT_THROW(load_alignment("/nonexistent/x.json"), IoError);
}

namespace {
std::vector<WordAlignment> words(std::initializer_list<const char*> ws) {
  std::vector<WordAlignment> out;
  double t = 0.0;
  for (auto* w : ws) {
    out.push_back({w, t, t + 0.2, {}});
    t += 0.25;
  }
  return out;
}
}  // namespace

TEST(MatchWords, ExactAfterPunctuationStrip) {
  auto r = match_words("The cat sat.", words({"the", "cat", "sat"}));
  EXPECT_EQ(r.pairs, (std::vector<WordMatch>{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_TRUE(r.unmatched_text.empty());
}

TEST(MatchWords, SilenceEntrySkipped) {
  auto r = match_words("The cat sat.", words({"the", "sil", "cat", "sp", "sat"}));
  EXPECT_EQ(r.pairs, (std::vector<WordMatch>{{0, 0}, {1, 2}, {2, 4}}));
  EXPECT_TRUE(r.unmatched_alignment.empty());
}

TEST(MatchWords, DeletedWordReportedLaterPairsKept) {
  // "quickly" is missing from the alignment. Hand-run greedy: the(0->0),
  // dog(1->1), quickly finds nothing at/after cursor 2 and is reported,
  // ran(3->2), home(4->3).
  auto r = match_words("The dog quickly ran home.", words({"the", "dog", "ran", "home"}));
  EXPECT_EQ(r.pairs, (std::vector<WordMatch>{{0, 0}, {1, 1}, {3, 2}, {4, 3}}));
  EXPECT_EQ(r.unmatched_text, std::vector<std::size_t>{2});
  EXPECT_TRUE(r.unmatched_alignment.empty());
}

TEST(MatchWords, ExtraAlignmentWordReported) {
  auto r = match_words("the cat", words({"the", "big", "cat"}));
  EXPECT_EQ(r.pairs, (std::vector<WordMatch>{{0, 0}, {1, 2}}));
  EXPECT_EQ(r.unmatched_alignment, std::vector<std::size_t>{1});
}

TEST(MatchWords, IndicesStrictlyIncreasing) {
  auto r = match_words("a b a c b a d", words({"a", "x", "b", "c", "a", "b", "y", "a"}));
  for (std::size_t i = 1; i < r.pairs.size(); ++i) {
    EXPECT_LT(r.pairs[i - 1].text_index, r.pairs[i].text_index);
    EXPECT_LT(r.pairs[i - 1].alignment_index, r.pairs[i].alignment_index);
  }
}
