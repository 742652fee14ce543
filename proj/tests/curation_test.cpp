#include "nctk/curation.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "nctk/errors.hpp"
#include "nctk/wordnet.hpp"
#include "test_util.hpp"
#include "wndb_writer.hpp"

namespace nctk {
namespace {

NounCompound nc(const char* s) { return NounCompound::parse(s); }

Paraphrase para(std::string text, Label label = Label::kCorrect) {
  return {std::move(text), Source::kHuman, label, std::nullopt};
}

DatasetEntry entry(const char* compound, std::vector<std::string> texts, Split split = Split::kTrain) {
  DatasetEntry e{nc(compound), {}, split};
  for (auto& t : texts) e.paraphrases.push_back(para(std::move(t)));
  return e;
}

const std::vector<std::string> kSyntheticNcs = {
    "chalk drawing",   "business zone",  "access road",   "steam train",   "olive oil",
    "police car",      "water tank",     "apple pie",     "stone wall",    "sea breeze",
    "family doctor",   "glass door",     "music school",  "winter coat",   "paper bag",
    "coffee cup",      "garden party",   "river bank",    "silk tie",      "horse race"};

TEST(CatchAll, QuotedTemplatesFireOnSyntheticCompounds) {
  const CatchAllRuleSet rules;
  const std::vector<std::string> middles = {"of", "based on", "involving", "associated with",
                                            "concerned with", "coming from"};
  for (const auto& s : kSyntheticNcs) {
    const auto c = NounCompound::parse(s);
    for (const auto& m : middles) {
      EXPECT_TRUE(is_catch_all(c.head + " " + m + " " + c.modifier, c, rules)) << s << " / " << m;
    }
  }
}

TEST(CatchAll, WorkedExamples) {
  const CatchAllRuleSet rules;
  EXPECT_TRUE(is_catch_all("drawing of chalk", nc("chalk drawing"), rules));
  EXPECT_TRUE(is_catch_all("zone involving business", nc("business zone"), rules));
  EXPECT_FALSE(is_catch_all("road that provides access", nc("access road"), rules));
  EXPECT_FALSE(is_catch_all("road for access", nc("access road"), rules));
}

TEST(CatchAll, RelativizersAndCopulasDoNotMatter) {
  const CatchAllRuleSet rules;
  const auto z = nc("business zone");
  for (const char* p : {"zone associated with business", "zone that is associated with business",
                        "zone which was associated with business", "zone that involving business"}) {
    EXPECT_TRUE(is_catch_all(p, z, rules)) << p;
  }
  // Prepositional templates are exact.
  EXPECT_FALSE(is_catch_all("zone that is of business", z, rules));
}

TEST(CatchAll, EmbeddedGenericPhraseDoesNotFire) {
  const CatchAllRuleSet rules;
  const auto z = nc("business zone");
  EXPECT_FALSE(is_catch_all("zone involving business and trade", z, rules));
  EXPECT_FALSE(is_catch_all("large zone involving business", z, rules));
  EXPECT_FALSE(is_catch_all("zone mostly involving business", z, rules));
  EXPECT_FALSE(is_catch_all("business of zone", z, rules));
}

TEST(CatchAll, NormalizesInput) {
  const CatchAllRuleSet rules;
  EXPECT_TRUE(is_catch_all("  Drawing   OF chalk.", nc("chalk drawing"), rules));
}

TEST(CatchAll, RulesLoadFromFile) {
  testing::TempDir dir;
  testing::write_file(dir / "rules.json", R"({"prepositional": ["of", "for"]})");
  const auto rules = CatchAllRuleSet::load(dir / "rules.json");
  EXPECT_TRUE(is_catch_all("road for access", nc("access road"), rules));
  EXPECT_TRUE(is_catch_all("zone involving business", nc("business zone"), rules));

  testing::write_file(dir / "verbs.json", R"({"generic_verbs": ["Related To"]})");
  const auto verbs = CatchAllRuleSet::load(dir / "verbs.json");
  EXPECT_TRUE(is_catch_all("zone that is related to business", nc("business zone"), verbs));
  EXPECT_FALSE(is_catch_all("zone involving business", nc("business zone"), verbs));

  testing::write_file(dir / "bad.json", R"({"templates": []})");
  EXPECT_THROW(CatchAllRuleSet::load(dir / "bad.json"), DataError);
  testing::write_file(dir / "empty.json", R"({"prepositional": [" "]})");
  EXPECT_THROW(CatchAllRuleSet::load(dir / "empty.json"), DataError);
  EXPECT_THROW(CatchAllRuleSet::load(dir / "missing.json"), DataError);
}

TEST(SplitOverlap, Examples) {
  std::vector<DatasetEntry> train = {entry("steam train", {"train powered by steam"}),
                                     entry("olive oil", {"oil from olives"})};
  std::vector<DatasetEntry> test = {entry("chalk drawing", {"drawing made with chalk"}, Split::kTest)};
  EXPECT_TRUE(find_split_overlap(train, test).empty());
  test.push_back(entry("steam train", {"train that runs on steam"}, Split::kTest));
  test.push_back(entry("apple pie", {"pie made of apples"}, Split::kTest));
  train.push_back(entry("apple pie", {"pie with apples"}));
  EXPECT_EQ(find_split_overlap(train, test),
            (std::vector<NounCompound>{nc("apple pie"), nc("steam train")}));
}

TEST(Lint, WorkedExamples) {
  const auto fix = lint(std::vector{entry("access road", {"  road  for access."})});
  ASSERT_EQ(fix.size(), 1u);
  EXPECT_EQ(fix[0].rule, LintRule::kNormalization);
  EXPECT_EQ(fix[0].action, LintAction::kFix);
  EXPECT_EQ(fix[0].detail, "road for access");

  const auto ca = lint(std::vector{entry("chalk drawing", {"drawing made with chalk", "drawing of chalk"})});
  ASSERT_EQ(ca.size(), 1u);
  EXPECT_EQ(ca[0].rule, LintRule::kCatchAll);
  EXPECT_EQ(ca[0].action, LintAction::kRemove);
  EXPECT_EQ(ca[0].paraphrase_index, 1u);

  EXPECT_TRUE(lint(std::vector{entry("access road", {"road that provides access", "road for access"})}).empty());
}

TEST(Lint, DuplicatesAndOverlap) {
  std::vector<DatasetEntry> es = {
      entry("steam train", {"train powered by steam", "Train powered by steam.", "train using steam"}),
      entry("steam train", {"train powered by steam"}, Split::kTest),
      entry("steam train", {"train powered by steam"}, Split::kDev)};
  const auto f = lint(es);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].rule, LintRule::kDuplicate);
  EXPECT_EQ(f[0].paraphrase_index, 1u);
  EXPECT_EQ(f[0].detail, "duplicate of paraphrase 0");
  EXPECT_EQ(f[1].rule, LintRule::kSplitOverlap);
  EXPECT_EQ(f[1].split, Split::kTest);
  EXPECT_EQ(f[1].paraphrase_index, kWholeEntry);

  const auto fixed = apply_findings(es, f);
  ASSERT_EQ(fixed.size(), 2u);
  EXPECT_EQ(fixed[0].paraphrases.size(), 2u);
  EXPECT_EQ(fixed[1].split, Split::kDev);
}

TEST(Lint, FindingSerialization) {
  const auto f = lint(std::vector{entry("access road", {"road for access ."})});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(serialize_finding(f[0]),
            R"({"nc":"access road","split":"train","index":0,"paraphrase":"road for access .",)"
            R"("rule":"normalization","action":"fix","detail":"road for access"})");
}

TEST(Lint, StaleFindingIsRejected) {
  const auto es = std::vector{entry("access road", {"road for access", "road for access"})};
  auto f = lint(es);
  ASSERT_EQ(f.size(), 1u);
  f[0].paraphrase_index = 7;
  EXPECT_THROW(apply_findings(es, f), UsageError);
}

TEST(LintProperty, OneApplyPassReachesFixpoint) {
  std::mt19937_64 rng(23);
  const std::vector<std::string> fillers = {"made", "with", "for", "that", "provides", "used", "in"};
  const std::vector<std::string> junk = {"", " ", "  ", ".", "!", " ,", "\t"};
  const CatchAllRuleSet rules;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<DatasetEntry> es;
    for (std::size_t k = 0; k < 6; ++k) {
      const auto c = NounCompound::parse(kSyntheticNcs[rng() % kSyntheticNcs.size()]);
      const Split split = static_cast<Split>(rng() % 3);
      if (std::any_of(es.begin(), es.end(), [&](const DatasetEntry& e) { return e.nc == c && e.split == split; }))
        continue;
      DatasetEntry e{c, {}, split};
      for (std::size_t p = rng() % 6; p > 0; --p) {
        std::string text = junk[rng() % junk.size()] + c.head;
        if (rng() % 4 == 0) {
          text += " of";
        } else {
          for (std::size_t w = 1 + rng() % 3; w > 0; --w)
            text += junk[rng() % 3] + " " + fillers[rng() % fillers.size()];
        }
        text += " " + junk[rng() % junk.size()] + c.modifier + junk[rng() % junk.size()];
        if (rng() % 3 == 0) text = "...";
        e.paraphrases.push_back(para(text));
      }
      es.push_back(std::move(e));
    }
    const auto once = apply_findings(es, lint(es, rules));
    const auto again = lint(once, rules);
    ASSERT_TRUE(again.empty()) << serialize_finding(again.front());
  }
}

class ToyKb : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    testing::ToyWordNet wn;
    using P = PartOfSpeech;
    wn.synsets = {{P::kVerb, {"operate", "run", "function"}},
                  {P::kVerb, {"use", "utilize", "employ"}},
                  {P::kVerb, {"power"}},
                  {P::kVerb, {"provide", "supply"}},
                  {P::kVerb, {"access", "get_at"}},
                  {P::kVerb, {"be", "exist"}},
                  {P::kVerb, {"make", "create"}},
                  {P::kVerb, {"go", "proceed"}},
                  {P::kVerb, {"carry", "transport"}},
                  {P::kVerb, {"train", "educate"}},
                  {P::kNoun, {"train"}},
                  {P::kNoun, {"steam"}},
                  {P::kNoun, {"road"}},
                  {P::kNoun, {"access"}}};
    wn.exceptions = {{P::kVerb, "ran", "run"},   {P::kVerb, "running", "run"}, {P::kVerb, "is", "be"},
                     {P::kVerb, "made", "make"}, {P::kVerb, "gone", "go"},     {P::kVerb, "went", "go"},
                     {P::kVerb, "carried", "carry"}};
    testing::write_wndb(dir_->path() / "wn", wn);
    kb_ = new WordNetKB(WordNetKB::load(dir_->path() / "wn"));
  }
  static void TearDownTestSuite() {
    delete kb_;
    delete dir_;
  }

  static std::vector<std::string> texts(const std::vector<AugmentCandidate>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.text);
    return out;
  }

  static testing::TempDir* dir_;
  static WordNetKB* kb_;
};
testing::TempDir* ToyKb::dir_ = nullptr;
WordNetKB* ToyKb::kb_ = nullptr;

TEST_F(ToyKb, Reinflection) {
  EXPECT_EQ(reinflect("run", "operates", *kb_), "runs");
  EXPECT_EQ(reinflect("run", "operated", *kb_), "ran");
  EXPECT_EQ(reinflect("run", "operating", *kb_), "running");
  EXPECT_EQ(reinflect("run", "operate", *kb_), "run");
  EXPECT_EQ(reinflect("go", "operated", *kb_), "gone");
  EXPECT_EQ(reinflect("carry", "operates", *kb_), "carries");
  EXPECT_EQ(reinflect("carry", "operated", *kb_), "carried");
  EXPECT_EQ(reinflect("push", "operates", *kb_), "pushes");
  EXPECT_EQ(reinflect("utilize", "using", *kb_), "utilizing");
  EXPECT_EQ(reinflect("see", "using", *kb_), "seeing");
  EXPECT_EQ(reinflect("tie", "using", *kb_), "tying");
  EXPECT_EQ(reinflect("free", "used", *kb_), "freed");
  EXPECT_EQ(reinflect("try", "used", *kb_), "tried");
  EXPECT_EQ(reinflect("play", "uses", *kb_), "plays");
  EXPECT_EQ(reinflect("get_at", "operates", *kb_), "gets at");
  EXPECT_EQ(reinflect("make", "ran", *kb_), "made");
}

TEST_F(ToyKb, SynonymExpandWorkedExample) {
  const auto e = entry("steam train", {"train that operates using steam"});
  const auto out = synonym_expand(e, *kb_);
  EXPECT_EQ(texts(out), (std::vector<std::string>{"train that functions using steam",
                                                  "train that runs using steam",
                                                  "train that operates employing steam",
                                                  "train that operates utilizing steam"}));
  for (const auto& c : out) {
    EXPECT_TRUE(c.needs_review);
    EXPECT_EQ(c.provenance, AugmentProvenance::kSynonymSubstitution);
  }
  EXPECT_EQ(out[1].detail, "operates -> runs");
}

TEST_F(ToyKb, SynonymExpandSkipsNounsAuxiliariesAndDuplicates) {
  EXPECT_TRUE(synonym_expand(entry("access road", {"road of access"}), *kb_).empty());
  EXPECT_TRUE(synonym_expand(entry("access road", {"road that is access"}), *kb_).empty());
  const auto e = entry("steam train", {"train that operates using steam", "train that runs using steam",
                                       "Train that functions using steam."});
  // Sum of synonym counts over verb tokens: 3 paraphrases x (2 + 2) = 12.
  // Drops: the two existing texts, and every repeat across paraphrases.
  const auto out = synonym_expand(e, *kb_);
  std::set<std::string> existing;
  for (const auto& p : e.paraphrases) existing.insert(paraphrase_key(p.text));
  std::set<std::string> unique;
  for (const auto& c : out) {
    EXPECT_FALSE(existing.contains(c.text)) << c.text;
    EXPECT_TRUE(unique.insert(c.text).second) << c.text;
  }
  EXPECT_EQ(texts(out), (std::vector<std::string>{
                            "train that operates employing steam", "train that operates utilizing steam",
                            "train that runs employing steam", "train that runs utilizing steam",
                            "train that functions employing steam", "train that functions utilizing steam"}));
}

TEST_F(ToyKb, SynonymExpandIgnoresIncorrectParaphrases) {
  DatasetEntry e = entry("steam train", {});
  e.paraphrases.push_back(para("train that operates using steam", Label::kIncorrect));
  EXPECT_TRUE(synonym_expand(e, *kb_).empty());
}

TEST_F(ToyKb, MergeWorkedExample) {
  const auto out = merge_paraphrases(para("train powered by steam"), para("train that operates using steam"),
                                     nc("steam train"), *kb_);
  const auto t = texts(out);
  EXPECT_NE(std::find(t.begin(), t.end(), "train operated by steam"), t.end());
  EXPECT_NE(std::find(t.begin(), t.end(), "train that is powered using steam"), t.end());
  EXPECT_EQ(t.size(), 6u);
  for (const auto& x : t) {
    EXPECT_NE(x, "train powered by steam");
    EXPECT_NE(x, "train that operates using steam");
  }
  for (const auto& c : out) EXPECT_EQ(c.provenance, AugmentProvenance::kMerge);
}

TEST_F(ToyKb, MergeDegenerateInputs) {
  const auto p = para("train powered by steam");
  EXPECT_TRUE(merge_paraphrases(p, p, nc("steam train"), *kb_).empty());
  EXPECT_TRUE(merge_paraphrases(p, para("a train that goes very fast thanks to steam"), nc("steam train"), *kb_).empty());
  EXPECT_TRUE(merge_paraphrases(p, para("steam for a train"), nc("steam train"), *kb_).empty());
  EXPECT_TRUE(merge_paraphrases(p, para("train operates by steam"), nc("steam train"), *kb_).empty());
}

TEST_F(ToyKb, MergeMovesCopulaWithVoice) {
  const auto out = merge_paraphrases(para("road that was made for access"), para("road that provides access"),
                                     nc("access road"), *kb_);
  const auto t = texts(out);
  EXPECT_NE(std::find(t.begin(), t.end(), "road that provides for access"), t.end());
  EXPECT_NE(std::find(t.begin(), t.end(), "road that is made for access"), t.end());
}

TEST_F(ToyKb, AugmentEntryNeverRepeatsExistingText) {
  const auto e = entry("steam train", {"train powered by steam", "train that operates using steam",
                                       "train operated by steam"});
  const auto out = augment_entry(e, *kb_);
  ASSERT_FALSE(out.empty());
  std::set<std::string> seen;
  for (const auto& p : e.paraphrases) seen.insert(paraphrase_key(p.text));
  for (const auto& c : out) EXPECT_TRUE(seen.insert(c.text).second) << c.text;

  const auto queue = review_queue(out, Split::kTrain);
  ASSERT_EQ(queue.size(), 1u);
  EXPECT_EQ(queue[0].paraphrases.size(), out.size());
  for (const auto& p : queue[0].paraphrases) {
    EXPECT_EQ(p.source, Source::kAugmented);
    EXPECT_EQ(p.label, Label::kUnjudged);
  }
}

TEST(WordNet30Curation, OperateYieldsRun) {
  const auto dir = testing::wordnet_dir();
  if (dir.empty()) GTEST_SKIP() << "WordNet 3.0 not installed";
  const auto kb = WordNetKB::load(dir);
  const auto syns = kb.synonyms("operate", PartOfSpeech::kVerb);
  ASSERT_TRUE(syns.contains("run"));
  const auto out = synonym_expand(entry("steam train", {"train that operates using steam"}), kb);
  std::vector<std::string> t;
  for (const auto& c : out) t.push_back(c.text);
  EXPECT_NE(std::find(t.begin(), t.end(), "train that runs using steam"), t.end());
  EXPECT_TRUE(synonym_expand(entry("access road", {"road of access"}), kb).empty());

  const auto merged = merge_paraphrases(para("train powered by steam"), para("train that operates using steam"),
                                        nc("steam train"), kb);
  std::vector<std::string> m;
  for (const auto& c : merged) m.push_back(c.text);
  EXPECT_NE(std::find(m.begin(), m.end(), "train operated by steam"), m.end());
  EXPECT_NE(std::find(m.begin(), m.end(), "train that is powered using steam"), m.end());
}

}  // namespace
}  // namespace nctk
