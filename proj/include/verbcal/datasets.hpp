#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace verbcal {

struct Question {
  std::string id;
  std::string text;
  std::string gold;
  std::vector<std::string> aliases;
  std::string dataset;

  friend bool operator==(const Question&, const Question&) = default;
};

enum class DatasetFormat {
  kCanonical,   // {"id","question","gold","aliases"} per line
  kTriviaQA,    // rc.web.nocontext: HF rows per line, or the original {"Data": [...]} file
  kSciQ,        // JSON array or JSON lines of {"question","correct_answer",...}
  kTruthfulQA,  // TruthfulQA.csv, or HF "generation" rows per line
};

DatasetFormat dataset_format_from_string(std::string_view name);

// Throws DatasetError naming the line of a malformed record, a missing answer
// or a duplicate id.
std::vector<Question> load_questions(std::istream& in, DatasetFormat format, const std::string& dataset_name);
std::vector<Question> load_questions(const std::string& path, DatasetFormat format, const std::string& dataset_name);

std::string to_canonical_jsonl(const std::vector<Question>& questions);
void save_canonical(const std::vector<Question>& questions, const std::string& path);

// Seeded uniform sample without replacement, in draw order.
std::vector<Question> sample_eval_set(const std::vector<Question>& questions, std::size_t count, std::uint64_t seed);

}  // namespace verbcal
