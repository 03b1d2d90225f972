#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace verbcal {

// Parsers for the reply formats the prompt templates ask for. All of them
// throw ParseFailure (carrying the raw reply) when the required fields are
// missing. Markdown emphasis and backticks are ignored, labels are
// case-insensitive, and the last occurrence of a label wins.

struct ProbabilityParse {
  double value = 0.0;
  std::vector<std::string> warnings;
};

struct GuessProb {
  std::string answer;
  double probability = 0.0;
  std::vector<std::string> warnings;
};

struct AnswerProb {
  std::string answer;
  double probability = 0.0;
  friend bool operator==(const AnswerProb&, const AnswerProb&) = default;
};

struct TopKParse {
  std::vector<AnswerProb> pairs;  // probability descending, index breaks ties
  std::vector<std::string> warnings;
};

// First number in free text: "0.9", "90%", "90 percent", ".9". Values outside
// [0,1] are clamped with a warning.
std::optional<ProbabilityParse> read_probability(std::string_view text);

std::string parse_guess(std::string_view response);
ProbabilityParse parse_probability(std::string_view response);
GuessProb parse_guess_prob(std::string_view response);

// G<i>/P<i> pairs matched by index for i in 1..k.
TopKParse parse_topk(std::string_view response, int k);
// 2S stage 1: index -> guess.
std::map<int, std::string> parse_topk_guesses(std::string_view response, int k,
                                               std::vector<std::string>* warnings = nullptr);
// 2S stage 2: index -> probability.
std::map<int, double> parse_topk_probabilities(std::string_view response, int k,
                                               std::vector<std::string>* warnings = nullptr);

// Canonical expression from `expressions` named after "Confidence:". Longest
// match at the start of the value wins.
std::string parse_expression(std::string_view response, std::span<const std::string> expressions);

// 'Is True' follow-up: leading "A"/"True" -> true, "B"/"False" -> false.
std::optional<bool> classify_true_false(std::string_view response);

}  // namespace verbcal
