#pragma once

#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace synthetic {

// Same header and quoting as the upstream TruthfulQA.csv; some rows carry
// commas, doubled quotes and embedded newlines.
inline std::string truthfulqa_csv(int rows) {
  std::ostringstream os;
  os << "Type,Category,Question,Best Answer,Correct Answers,Incorrect Answers,Source\n";
  for (int i = 0; i < rows; ++i) {
    const bool tricky = i % 7 == 0;
    os << (i % 2 ? "Adversarial" : "Non-Adversarial") << ",Misconceptions,";
    if (tricky)
      os << "\"What happens if you say \"\"hello, world\"\" " << i << " times?\"";
    else
      os << "Question number " << i << "?";
    os << ",Answer " << i << ",";
    if (i % 5 == 0)
      os << "\"Answer " << i << "; Variant " << i << "\nacross lines\"";
    else
      os << "Answer " << i << "; Variant " << i;
    os << ",Wrong " << i << ",https://example.org/" << i << "\n";
  }
  return os.str();
}

inline std::string triviaqa_jsonl(int rows) {
  std::string out;
  for (int i = 0; i < rows; ++i) {
    nlohmann::json j{{"question_id", "tqa_" + std::to_string(i)},
                     {"question", "Trivia question " + std::to_string(i) + "?"},
                     {"answer", {{"value", "Answer " + std::to_string(i)},
                                 {"aliases", {"Answer " + std::to_string(i), "Alias " + std::to_string(i)}}}}};
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string sciq_json(int rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < rows; ++i)
    arr.push_back({{"question", "Science question " + std::to_string(i) + "?"},
                   {"distractor1", "d1"},
                   {"distractor2", "d2"},
                   {"distractor3", "d3"},
                   {"correct_answer", "answer " + std::to_string(i)},
                   {"support", ""}});
  return arr.dump();
}

}  // namespace synthetic
