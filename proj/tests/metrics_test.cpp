#include "nctk/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "nctk/errors.hpp"
#include "nctk/wordnet.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "wndb_writer.hpp"

namespace nctk {
namespace {

TokenSeq T(const char* s) { return normalize_text(s); }

TEST(RougeL, WorkedExamples) {
  EXPECT_DOUBLE_EQ(rouge_l(T("road for access"), T("road for access")).value, 1.0);
  EXPECT_EQ(rouge_l(T("a b"), T("c d")).value, 0.0);
  EXPECT_EQ(rouge_l(T(""), T("c d")).value, 0.0);
  EXPECT_EQ(lcs_length(T("road for access"), T("road that provides access")), 2u);
  EXPECT_EQ(rouge_l(T("road for access"), T("road that provides access")).value, 4.0 / 7.0);
}

TEST(RougeL, BetaWeightsRecall) {
  // P = 1, R = 1/2.
  const double f1 = rouge_l(T("a b"), T("a b c d")).value;
  const double f3 = rouge_l(T("a b"), T("a b c d"), 3.0).value;
  EXPECT_NEAR(f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f3, 10 * 0.5 / (0.5 + 9), 1e-12);
}

TEST(RougeLProperty, MatchesBruteForceLcs) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  for (int iter = 0; iter < 1000; ++iter) {
    TokenSeq c;
    TokenSeq r;
    for (std::size_t k = rng() % 13; k > 0; --k) c.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t k = rng() % 13; k > 0; --k) r.push_back(vocab[rng() % vocab.size()]);
    ASSERT_EQ(lcs_length(c, r), oracle::brute_lcs(c, r));
    ASSERT_NEAR(rouge_l(c, r).value, oracle::rouge_f1(c, r), 1e-9);
    ASSERT_GE(rouge_l(c, r).value, 0.0);
    ASSERT_LE(rouge_l(c, r).value, 1.0);
  }
}

class MeteorToy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    testing::ToyWordNet wn;
    wn.synsets = {{PartOfSpeech::kNoun, {"car", "auto", "automobile"}},
                  {PartOfSpeech::kVerb, {"operate", "run"}},
                  {PartOfSpeech::kNoun, {"road", "street"}},
                  {PartOfSpeech::kNoun, {"access"}}};
    testing::write_wndb(dir_->path() / "wn", wn);
    kb_ = new WordNetKB(WordNetKB::load(dir_->path() / "wn"));
  }
  static void TearDownTestSuite() {
    delete kb_;
    delete dir_;
  }

  // Independent stage relation for the toy vocabulary.
  static std::optional<int> stage(const std::string& a, const std::string& b) {
    if (a == b) return 0;
    if (porter_stem(a) == porter_stem(b)) return 1;
    static const std::map<std::string, int> group = {
        {"car", 1},     {"cars", 1},    {"auto", 1},    {"autos", 1},    {"automobile", 1},
        {"operate", 2}, {"operates", 2}, {"operated", 2}, {"run", 2},     {"runs", 2},
        {"road", 3},    {"roads", 3},   {"street", 3},   {"streets", 3}};
    auto ga = group.find(a);
    auto gb = group.find(b);
    if (ga != group.end() && gb != group.end() && ga->second == gb->second) return 2;
    return std::nullopt;
  }

  static testing::TempDir* dir_;
  static WordNetKB* kb_;
};
testing::TempDir* MeteorToy::dir_ = nullptr;
WordNetKB* MeteorToy::kb_ = nullptr;

TEST_F(MeteorToy, StagesFollowTheKb) {
  EXPECT_EQ(match_stage("road", "road", kb_), MatchStage::kExact);
  EXPECT_EQ(match_stage("roads", "road", kb_), MatchStage::kStem);
  EXPECT_EQ(match_stage("auto", "automobile", kb_), MatchStage::kSynonym);
  EXPECT_EQ(match_stage("operates", "run", kb_), MatchStage::kSynonym);
  EXPECT_EQ(match_stage("running", "run", kb_), MatchStage::kStem);
  EXPECT_EQ(match_stage("running", "operate", kb_), std::nullopt);
  EXPECT_EQ(match_stage("auto", "automobile", nullptr), std::nullopt);
  EXPECT_EQ(match_stage("road", "access", kb_), std::nullopt);
}

TEST_F(MeteorToy, WorkedExamples) {
  EXPECT_EQ(meteor(T("chocolate"), T("chocolate"), kb_).value, 0.5);
  EXPECT_EQ(meteor(T("road for access"), T("street of car"), nullptr).value, 0.0);
  const auto a = meteor_align(T("road for access"), T("road that provides access"), kb_);
  EXPECT_EQ(a.matches(), 2u);
  EXPECT_EQ(a.chunks, 2u);
  const double fmean = (10.0 * (2.0 / 3) * 0.5) / (0.5 + 9 * (2.0 / 3));
  EXPECT_NEAR(fmean, 0.5128205128, 1e-9);
  EXPECT_NEAR(meteor(T("road for access"), T("road that provides access"), kb_).value, fmean * 0.5, 1e-12);
  EXPECT_NEAR(fmean * 0.5, 0.2564, 1e-4);
}

TEST_F(MeteorToy, IdenticalInputsClosedForm) {
  EXPECT_EQ(meteor(T("a"), T("a"), kb_).value, 0.5);
  EXPECT_EQ(meteor(T("a b"), T("a b"), kb_).value, 0.9375);
  EXPECT_EQ(meteor(T("a b c d"), T("a b c d"), kb_).value, 0.9921875);
}

TEST_F(MeteorToy, PrefersExactOverStemAndStemOverSynonym) {
  // "run" could pair with the stem match "runs" or the exact "run".
  const auto a = meteor_align(T("run"), T("runs run"), kb_);
  EXPECT_EQ(a.exact, 1u);
  EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}}));
  const auto b = meteor_align(T("roads"), T("street road"), kb_);
  EXPECT_EQ(b.stem, 1u);
  EXPECT_EQ(b.synonym, 0u);
}

TEST_F(MeteorToy, MinimizesChunks) {
  const auto a = meteor_align(T("the car the road"), T("the road the car"), kb_);
  EXPECT_EQ(a.matches(), 4u);
  EXPECT_EQ(a.chunks, 2u);
}

TEST_F(MeteorToy, AlignmentMatchesExhaustiveSearch) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> vocab = {"car",  "cars",    "auto", "automobile", "run",  "runs",
                                          "running", "operate", "operates", "road", "street",
                                          "streets", "the", "of", "access"};
  for (int iter = 0; iter < 500; ++iter) {
    TokenSeq c;
    TokenSeq r;
    for (std::size_t k = rng() % 9; k > 0; --k) c.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t k = rng() % 9; k > 0; --k) r.push_back(vocab[rng() % vocab.size()]);
    const auto got = meteor_align(c, r, kb_);
    const auto want = oracle::exhaustive_alignment(c, r, stage);
    ASSERT_EQ(got.exact, want.exact) << join_tokens(c) << " | " << join_tokens(r);
    ASSERT_EQ(got.stem, want.stem);
    ASSERT_EQ(got.synonym, want.synonym);
    ASSERT_EQ(got.chunks, want.chunks) << join_tokens(c) << " | " << join_tokens(r);
    ASSERT_EQ(oracle::count_chunks(got.pairs), got.chunks);
    ASSERT_NEAR(meteor(c, r, kb_).value, oracle::meteor_formula(want, c.size(), r.size()), 1e-12);
  }
}

TEST_F(MeteorToy, LongRepetitiveInputsStayTractable) {
  TokenSeq c(40, "the");
  TokenSeq r(40, "the");
  const auto a = meteor_align(c, r, kb_);
  EXPECT_EQ(a.exact, 40u);
  EXPECT_EQ(a.chunks, 1u);
}

TEST(Aggregate, WorkedExamples) {
  const PairMetric rouge = [](const TokenSeq& a, const TokenSeq& b) { return rouge_l(a, b).value; };
  auto one = aggregate_score({{"x y", {"x"}}}, {{"x y", {"x"}}}, rouge, MetricId::kRougeL);
  EXPECT_EQ(one.aggregate, 1.0);

  const auto two = aggregate_score({{"access road", {"road for access", "road that provides access"}}},
                                   {{"access road", {"road that provides access", "road for access"}}},
                                   rouge, MetricId::kRougeL);
  EXPECT_EQ(two.rows.size(), 1u);
  EXPECT_EQ(two.rows[0].best, (std::vector<double>{1.0, 1.0}));

  const auto mixed = aggregate_score({{"access road", {"road for access", "road that provides access"}}},
                                     {{"access road", {"road for access", "lane"}}}, rouge,
                                     MetricId::kRougeL);
  EXPECT_NEAR(mixed.aggregate, 11.0 / 14.0, 1e-12);
}

TEST(Aggregate, MissingReferencesListed) {
  const PairMetric rouge = [](const TokenSeq& a, const TokenSeq& b) { return rouge_l(a, b).value; };
  try {
    aggregate_score({{"a b", {"b of a"}}, {"c d", {"x"}}, {"e f", {"y"}}}, {{"c d", {"x"}}, {"e f", {}}},
                    rouge, MetricId::kRougeL);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'a b'"), std::string::npos);
    EXPECT_NE(msg.find("'e f'"), std::string::npos);
    EXPECT_EQ(msg.find("'c d'"), std::string::npos);
  }
}

TEST(Aggregate, EmptySystemListScoresZero) {
  const PairMetric rouge = [](const TokenSeq& a, const TokenSeq& b) { return rouge_l(a, b).value; };
  const auto r = aggregate_score({{"a b", {}}, {"c d", {"d of c"}}}, {{"a b", {"b"}}, {"c d", {"d of c"}}},
                                 rouge, MetricId::kRougeL);
  EXPECT_EQ(r.aggregate, 0.5);
  EXPECT_EQ(aggregate_score({}, {}, rouge, MetricId::kRougeL).aggregate, 0.0);
}

ParaphraseMap random_map(std::mt19937_64& rng, const std::vector<std::string>& ncs, int max_list) {
  static const std::vector<std::string> words = {"a", "b", "c", "of", "for", "made", "from", "x"};
  ParaphraseMap m;
  for (const auto& nc : ncs) {
    auto& list = m[nc];
    for (int k = static_cast<int>(rng() % max_list); k >= 0; --k) {
      std::string p;
      for (std::size_t w = 1 + rng() % 5; w > 0; --w) p += words[rng() % words.size()] + " ";
      list.push_back(p);
    }
  }
  return m;
}

TEST(AggregateProperty, MatchesTripleLoopAndIgnoresReferenceOrder) {
  std::mt19937_64 rng(17);
  const PairMetric rouge = [](const TokenSeq& a, const TokenSeq& b) { return rouge_l(a, b).value; };
  const PairMetric met = [](const TokenSeq& a, const TokenSeq& b) { return meteor(a, b, nullptr).value; };
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::string> ncs;
    for (std::size_t k = 1 + rng() % 6; k > 0; --k) ncs.push_back("n" + std::to_string(k) + " h");
    const auto system = random_map(rng, ncs, 4);
    auto refs = random_map(rng, ncs, 5);
    for (const auto* metric : {&rouge, &met}) {
      const double got = aggregate_score(system, refs, *metric, MetricId::kRougeL).aggregate;
      ASSERT_EQ(got, oracle::triple_loop(system, refs, *metric));
      auto shuffled = refs;
      for (auto& [nc, list] : shuffled) std::shuffle(list.begin(), list.end(), rng);
      ASSERT_EQ(aggregate_score(system, shuffled, *metric, MetricId::kRougeL).aggregate, got);
      auto more = refs;
      more.begin()->second.push_back("a b c of for");
      ASSERT_GE(aggregate_score(system, more, *metric, MetricId::kRougeL).aggregate, got);
    }
  }
}

}  // namespace
}  // namespace nctk
