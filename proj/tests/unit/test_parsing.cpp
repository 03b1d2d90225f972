#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "../support/parser_corpus.hpp"
#include "verbcal/error.hpp"
#include "verbcal/parsing.hpp"

using namespace verbcal;

namespace {
const std::string kCorpus = std::string(VERBCAL_SOURCE_DIR) + "/tests/data/parser_corpus.jsonl";
const std::string kExpressions = std::string(VERBCAL_SOURCE_DIR) + "/config/expressions.tsv";
}  // namespace

TEST(Corpus, EveryCaseMatchesAnnotation) {
  const auto results = corpus::run_file(kCorpus, kExpressions);
  ASSERT_EQ(results.size(), 100u);
  for (const auto& r : results) EXPECT_TRUE(r.ok) << "case " << r.id << ": " << r.detail;
}

TEST(GuessProb, SpecExamples) {
  auto g = parse_guess_prob("Guess: Paris\nProbability: 0.9");
  EXPECT_EQ(g.answer, "Paris");
  EXPECT_EQ(g.probability, 0.9);
  g = parse_guess_prob("Guess: 42\nProbability: 90%");
  EXPECT_EQ(g.answer, "42");
  EXPECT_DOUBLE_EQ(g.probability, 0.9);
  try {
    parse_guess_prob("I think the answer is Paris.");
    FAIL();
  } catch (const ParseFailure& e) {
    EXPECT_EQ(e.raw(), "I think the answer is Paris.");
  }
}

TEST(GuessProb, ClampWarns) {
  const auto g = parse_guess_prob("Guess: x\nProbability: 1.7");
  EXPECT_EQ(g.probability, 1.0);
  ASSERT_EQ(g.warnings.size(), 1u);
}

TEST(ReadProbability, Forms) {
  EXPECT_EQ(read_probability("0.25")->value, 0.25);
  EXPECT_EQ(read_probability(".5")->value, 0.5);
  EXPECT_DOUBLE_EQ(read_probability("about 33%")->value, 0.33);
  EXPECT_EQ(read_probability("1.")->value, 1.0);
  EXPECT_FALSE(read_probability("high").has_value());
}

TEST(TopK, SpecExamples) {
  const std::vector<AnswerProb> want = {{"A", 0.7}, {"B", 0.2}};
  EXPECT_EQ(parse_topk("G1: A\nP1: 0.7\nG2: B\nP2: 0.2", 2).pairs, want);
  EXPECT_EQ(parse_topk("G2: B\nP2: 0.2\nG1: A\nP1: 0.7", 2).pairs, want);
  EXPECT_THROW(parse_topk("G1: A", 1), ParseFailure);
  const auto partial = parse_topk("G1: A\nP1: 0.6\nG2: B", 2);
  EXPECT_EQ(partial.pairs.size(), 1u);
  EXPECT_FALSE(partial.warnings.empty());
  EXPECT_THROW(parse_topk("G1: A\nP1: 0.5", 0), InvalidInput);
}

TEST(TopK, RandomizedRoundTrip) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> kd(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = kd(rng);
    std::vector<AnswerProb> pairs;
    for (int i = 1; i <= k; ++i) {
      // Two-decimal probabilities print and parse exactly.
      const double p = static_cast<double>(rng() % 101) / 100.0;
      pairs.push_back({"answer " + std::to_string(rng() % 1000), p});
    }
    std::ostringstream os;
    for (int i = 1; i <= k; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%.2f", pairs[i - 1].probability);
      os << "G" << i << ": " << pairs[i - 1].answer << "\n\nP" << i << ": " << buf << (i < k ? " " : "");
    }
    auto want = pairs;
    std::stable_sort(want.begin(), want.end(), [](auto& a, auto& b) { return a.probability > b.probability; });
    const auto got = parse_topk(os.str(), k);
    EXPECT_EQ(got.pairs, want) << os.str();
    EXPECT_TRUE(got.warnings.empty());
  }
}

TEST(TwoStage, GuessesAndProbabilitiesSeparately) {
  const auto g = parse_topk_guesses("G1: A\n\nG2: B\n", 2);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.at(2), "B");
  std::vector<std::string> warnings;
  const auto p = parse_topk_probabilities("P1: 0.6\nP2: 0.3\nP5: 0.1", 2, &warnings);
  EXPECT_EQ(p.at(1), 0.6);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Expression, LongestMatchWins) {
  const std::vector<std::string> e = {"Likely", "Highly likely", "Probably", "Probably not"};
  EXPECT_EQ(parse_expression("Confidence: probably not.", e), "Probably not");
  EXPECT_EQ(parse_expression("Confidence: probably", e), "Probably");
  EXPECT_THROW(parse_expression("Confidence: Likely", {}), InvalidInput);
}

TEST(TrueFalse, LeadingToken) {
  EXPECT_EQ(classify_true_false("A) True."), true);
  EXPECT_EQ(classify_true_false("(B) False"), false);
  EXPECT_FALSE(classify_true_false("Absolutely").has_value());
}
