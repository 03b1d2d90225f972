#include "verbcal/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/random.hpp"

namespace verbcal {

using json = nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::string required_string(const json& j, const char* key, const char* what, std::size_t line) {
  if (!j.contains(key) || !j[key].is_string() || blank(j[key].get<std::string>()))
    throw DatasetError(std::string("record missing ") + what, line);
  return trim(j[key].get<std::string>());
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || !j[key].is_array()) return out;
  for (const auto& v : j[key])
    if (v.is_string() && !blank(v.get<std::string>())) out.push_back(trim(v.get<std::string>()));
  return out;
}

// Calls fn(json, line) for every non-blank JSON line.
template <typename F>
void each_json_line(const std::string& text, F&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError("malformed JSON record", lineno);
    fn(j, lineno);
  }
}

// RFC 4180: quoted fields may contain commas, quotes ("") and newlines.
// Returns rows with the line number each row starts on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(const std::string& text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.emplace_back(row_line, std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
      ++line;
      row_line = line;
    } else if (c != '\r') {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DatasetError("unterminated quoted field", row_line);
  if (field_started || !row.empty()) end_row();
  return rows;
}

struct Loaded {
  std::vector<Question> questions;
  std::vector<std::size_t> lines;
  void add(Question q, std::size_t line) {
    questions.push_back(std::move(q));
    lines.push_back(line);
  }
};

std::vector<std::string> split_answers(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ';'))
    if (!blank(item)) out.push_back(trim(item));
  return out;
}

Loaded load_canonical(const std::string& text) {
  Loaded out;
  each_json_line(text, [&](const json& j, std::size_t line) {
    Question q;
    q.id = j.contains("id") && j["id"].is_number() ? std::to_string(j["id"].get<long long>())
                                                   : required_string(j, "id", "id", line);
    q.text = required_string(j, "question", "question", line);
    q.gold = required_string(j, "gold", "answer", line);
    q.aliases = string_list(j, "aliases");
    if (j.contains("dataset") && j["dataset"].is_string()) q.dataset = j["dataset"].get<std::string>();
    out.add(std::move(q), line);
  });
  return out;
}

Question triviaqa_row(const json& j, std::size_t line, bool original) {
  Question q;
  q.id = required_string(j, original ? "QuestionId" : "question_id", "question id", line);
  q.text = required_string(j, original ? "Question" : "question", "question", line);
  const char* answer_key = original ? "Answer" : "answer";
  if (!j.contains(answer_key) || !j[answer_key].is_object()) throw DatasetError("record missing answer", line);
  const auto& a = j[answer_key];
  q.gold = required_string(a, original ? "Value" : "value", "answer", line);
  for (auto& alias : string_list(a, original ? "Aliases" : "aliases"))
    if (alias != q.gold) q.aliases.push_back(std::move(alias));
  return q;
}

Loaded load_triviaqa(const std::string& text) {
  Loaded out;
  const auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object() && whole.contains("Data")) {
    std::size_t index = 0;
    for (const auto& row : whole["Data"]) {
      ++index;
      out.add(triviaqa_row(row, index, true), index);
    }
    return out;
  }
  each_json_line(text, [&](const json& j, std::size_t line) { out.add(triviaqa_row(j, line, false), line); });
  return out;
}

Question sciq_row(const json& j, std::size_t index, std::size_t line) {
  Question q;
  q.id = "sciq-" + std::to_string(index);
  q.text = required_string(j, "question", "question", line);
  q.gold = required_string(j, "correct_answer", "answer", line);
  return q;
}

Loaded load_sciq(const std::string& text) {
  Loaded out;
  const auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_array()) {
    for (std::size_t i = 0; i < whole.size(); ++i) out.add(sciq_row(whole[i], i, i + 1), i + 1);
    return out;
  }
  std::size_t index = 0;
  each_json_line(text, [&](const json& j, std::size_t line) { out.add(sciq_row(j, index++, line), line); });
  return out;
}

Loaded load_truthfulqa(const std::string& text) {
  Loaded out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    std::size_t index = 0;
    each_json_line(text, [&](const json& j, std::size_t line) {
      Question q;
      q.id = "truthfulqa-" + std::to_string(index++);
      q.text = required_string(j, "question", "question", line);
      q.gold = required_string(j, "best_answer", "answer", line);
      for (auto& a : string_list(j, "correct_answers"))
        if (a != q.gold) q.aliases.push_back(std::move(a));
      out.add(std::move(q), line);
    });
    return out;
  }
  const auto rows = read_csv(text);
  if (rows.empty()) return out;
  const auto& header = rows.front().second;
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw DatasetError("TruthfulQA header lacks column '" + std::string(name) + "'", rows.front().first);
  };
  const auto c_question = column("Question");
  const auto c_best = column("Best Answer");
  const auto c_correct = column("Correct Answers");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, row] = rows[r];
    auto cell = [&](std::size_t c) { return c < row.size() ? trim(row[c]) : std::string(); };
    Question q;
    q.id = "truthfulqa-" + std::to_string(r - 1);
    q.text = cell(c_question);
    q.gold = cell(c_best);
    if (q.text.empty()) throw DatasetError("record missing question", line);
    if (q.gold.empty()) throw DatasetError("record missing answer", line);
    for (auto& a : split_answers(cell(c_correct)))
      if (a != q.gold) q.aliases.push_back(std::move(a));
    out.add(std::move(q), line);
  }
  return out;
}

}  // namespace

DatasetFormat dataset_format_from_string(std::string_view name) {
  if (name == "canonical") return DatasetFormat::kCanonical;
  if (name == "triviaqa") return DatasetFormat::kTriviaQA;
  if (name == "sciq") return DatasetFormat::kSciQ;
  if (name == "truthfulqa") return DatasetFormat::kTruthfulQA;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

std::vector<Question> load_questions(std::istream& in, DatasetFormat format, const std::string& dataset_name) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Loaded loaded;
  switch (format) {
    case DatasetFormat::kCanonical: loaded = load_canonical(text); break;
    case DatasetFormat::kTriviaQA: loaded = load_triviaqa(text); break;
    case DatasetFormat::kSciQ: loaded = load_sciq(text); break;
    case DatasetFormat::kTruthfulQA: loaded = load_truthfulqa(text); break;
  }
  auto& questions = loaded.questions;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!seen.insert(questions[i].id).second)
      throw DatasetError("duplicate id '" + questions[i].id + "'", loaded.lines[i]);
    if (!dataset_name.empty()) questions[i].dataset = dataset_name;
  }
  return std::move(questions);
}

std::vector<Question> load_questions(const std::string& path, DatasetFormat format, const std::string& dataset_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path, 0);
  return load_questions(in, format, dataset_name);
}

std::string to_canonical_jsonl(const std::vector<Question>& questions) {
  std::string out;
  for (const auto& q : questions) {
    nlohmann::ordered_json j;
    j["id"] = q.id;
    j["question"] = q.text;
    j["gold"] = q.gold;
    j["aliases"] = q.aliases;
    if (!q.dataset.empty()) j["dataset"] = q.dataset;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_canonical(const std::vector<Question>& questions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path, 0);
  out << to_canonical_jsonl(questions);
}

std::vector<Question> sample_eval_set(const std::vector<Question>& questions, std::size_t count, std::uint64_t seed) {
  if (count > questions.size())
    throw InvalidInput("cannot sample " + std::to_string(count) + " of " + std::to_string(questions.size()) +
                       " questions");
  auto perm = seeded_permutation(questions.size(), seed);
  perm.resize(count);
  std::vector<Question> out;
  out.reserve(count);
  for (std::size_t i : perm) out.push_back(questions[i]);
  return out;
}

}  // namespace verbcal
