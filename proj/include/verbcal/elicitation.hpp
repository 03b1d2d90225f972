#pragma once

#include <optional>
#include <string>
#include <vector>

#include "verbcal/datasets.hpp"
#include "verbcal/equivalence.hpp"
#include "verbcal/expressions.hpp"
#include "verbcal/model_client.hpp"
#include "verbcal/parsing.hpp"
#include "verbcal/templates.hpp"

namespace verbcal {

enum class RecordStatus { kOk, kParseFailed, kModelFailed, kJudgeFailed };

std::string_view to_string(RecordStatus status);
RecordStatus record_status_from_string(std::string_view name);

struct Transcript {
  int stage = 1;
  std::string prompt;
  std::string response;
};

struct ElicitationRecord {
  std::string question_id;
  std::string dataset;
  std::string model_id;
  MethodSpec method;
  std::string method_fingerprint;
  std::vector<Transcript> transcripts;
  std::string answer;
  double confidence = 0.0;
  std::optional<std::string> confidence_expression;
  std::vector<AnswerProb> alternates;
  std::vector<std::size_t> cluster_counts;
  std::optional<double> entropy;
  bool auc_only = false;
  std::vector<std::string> parse_warnings;

  RecordStatus status = RecordStatus::kOk;
  std::string failure;
  std::optional<bool> correct;
  std::optional<std::string> grade_source;
};

struct SamplingConfig {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 512;
  int max_tokens_cot = 1024;
};

// Runs one method on one question. Parse and provider failures are returned as
// record status with transcripts kept; AuthError propagates.
class Elicitor {
 public:
  Elicitor(ChatModel& model, Equivalence& equivalence, SamplingConfig sampling, ExpressionMap human_map);

  ElicitationRecord run(const Question& question, const MethodSpec& method);

  ElicitationRecord run_label_prob(const Question& question, const MethodSpec& method);
  ElicitationRecord run_is_true_prob(const Question& question, const MethodSpec& method);
  ElicitationRecord run_entropy(const Question& question, const MethodSpec& method);
  ElicitationRecord run_verbalized(const Question& question, const MethodSpec& method);

  const ExpressionMap& human_map() const { return human_map_; }

 private:
  ChatRequest request(std::vector<Message> messages, bool cot) const;
  ElicitationRecord start(const Question& question, const MethodSpec& method) const;
  void sample_and_cluster(const Question& question, const MethodSpec& method, ElicitationRecord& record,
                          ClusterResult& clusters);

  ChatModel& model_;
  Equivalence& equivalence_;
  SamplingConfig sampling_;
  ExpressionMap human_map_;
  std::vector<std::string> expressions_;
};

// Grades record.answer against the question's gold answer and aliases.
void grade_record(ElicitationRecord& record, const Question& question, Equivalence& equivalence);

}  // namespace verbcal
