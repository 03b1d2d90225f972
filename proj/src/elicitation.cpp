#include "verbcal/elicitation.hpp"

#include <algorithm>
#include <cmath>

#include "verbcal/error.hpp"
#include "verbcal/metrics.hpp"

namespace verbcal {

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kParseFailed: return "parse_failed";
    case RecordStatus::kModelFailed: return "model_failed";
    case RecordStatus::kJudgeFailed: return "judge_failed";
  }
  return "ok";
}

RecordStatus record_status_from_string(std::string_view name) {
  if (name == "ok") return RecordStatus::kOk;
  if (name == "parse_failed") return RecordStatus::kParseFailed;
  if (name == "model_failed") return RecordStatus::kModelFailed;
  if (name == "judge_failed") return RecordStatus::kJudgeFailed;
  throw InvalidInput("unknown record status '" + std::string(name) + "'");
}

namespace {

// Runs `body`, converting expected failures into record status.
template <typename F>
void guarded(ElicitationRecord& record, F&& body) {
  try {
    body();
  } catch (const AuthError&) {
    throw;
  } catch (const ParseFailure& e) {
    record.status = RecordStatus::kParseFailed;
    record.failure = e.what();
  } catch (const JudgeUnparseable& e) {
    record.status = RecordStatus::kJudgeFailed;
    record.failure = e.what();
  } catch (const Error& e) {
    record.status = RecordStatus::kModelFailed;
    record.failure = e.what();
  }
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

Elicitor::Elicitor(ChatModel& model, Equivalence& equivalence, SamplingConfig sampling, ExpressionMap human_map)
    : model_(model),
      equivalence_(equivalence),
      sampling_(sampling),
      human_map_(std::move(human_map)),
      expressions_(human_map_.expressions()) {}

ChatRequest Elicitor::request(std::vector<Message> messages, bool cot) const {
  ChatRequest r;
  r.messages = std::move(messages);
  r.temperature = sampling_.temperature;
  r.top_p = sampling_.top_p;
  r.max_tokens = cot ? sampling_.max_tokens_cot : sampling_.max_tokens;
  r.model_id = model_.model_id();
  return r;
}

ElicitationRecord Elicitor::start(const Question& question, const MethodSpec& method) const {
  method.validate();
  ElicitationRecord r;
  r.question_id = question.id;
  r.dataset = question.dataset;
  r.model_id = model_.model_id();
  r.method = method;
  r.auc_only = method.auc_only();
  return r;
}

ElicitationRecord Elicitor::run(const Question& question, const MethodSpec& method) {
  switch (method.kind) {
    case MethodKind::kLabelProb: return run_label_prob(question, method);
    case MethodKind::kIsTrueProb: return run_is_true_prob(question, method);
    case MethodKind::kEntropy: return run_entropy(question, method);
    default: return run_verbalized(question, method);
  }
}

void Elicitor::sample_and_cluster(const Question& question, const MethodSpec& method, ElicitationRecord& record,
                                  ClusterResult& clusters) {
  const auto prompt = render_prompt(method, question.text, 1);
  const auto outcomes =
      model_.sample_n(request({{Role::kUser, prompt}}, false), static_cast<std::size_t>(method.n_samples));
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].response) {
      record.transcripts.push_back({1, prompt, ""});
      record.parse_warnings.push_back("sample " + std::to_string(i) + " failed: " + outcomes[i].error);
      continue;
    }
    const auto& text = outcomes[i].response->content;
    record.transcripts.push_back({1, prompt, text});
    try {
      answers.push_back(parse_guess(text));
    } catch (const ParseFailure& e) {
      record.parse_warnings.push_back("sample " + std::to_string(i) + ": " + e.what());
    }
  }
  if (answers.empty()) throw ParseFailure("no sample could be parsed", "");
  clusters = equivalence_.cluster(question.text, answers);
  append(record.parse_warnings, clusters.warnings);
  record.cluster_counts = clusters.counts();
}

namespace {

// Largest cluster; the earliest-created wins ties.
std::size_t modal_cluster(const ClusterResult& clusters) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < clusters.clusters.size(); ++i)
    if (clusters.clusters[i].members.size() > clusters.clusters[best].members.size()) best = i;
  return best;
}

}  // namespace

ElicitationRecord Elicitor::run_label_prob(const Question& question, const MethodSpec& method) {
  auto record = start(question, method);
  guarded(record, [&] {
    ClusterResult clusters;
    sample_and_cluster(question, method, record, clusters);
    const auto& top = clusters.clusters[modal_cluster(clusters)];
    record.answer = top.representative;
    record.confidence = static_cast<double>(top.members.size()) / static_cast<double>(method.n_samples);
    for (const auto& c : clusters.clusters)
      record.alternates.push_back(
          {c.representative, static_cast<double>(c.members.size()) / static_cast<double>(method.n_samples)});
  });
  return record;
}

ElicitationRecord Elicitor::run_entropy(const Question& question, const MethodSpec& method) {
  auto record = start(question, method);
  guarded(record, [&] {
    ClusterResult clusters;
    sample_and_cluster(question, method, record, clusters);
    record.answer = clusters.clusters[modal_cluster(clusters)].representative;
    const auto counts = clusters.counts();
    const double h = entropy_score(counts);
    record.entropy = h;
    // Rank key: 1 - H / ln(n). Only its ordering is meaningful.
    const double max_h = std::log(static_cast<double>(method.n_samples));
    record.confidence = max_h > 0.0 ? std::clamp(1.0 - h / max_h, 0.0, 1.0) : 1.0;
  });
  return record;
}

ElicitationRecord Elicitor::run_is_true_prob(const Question& question, const MethodSpec& method) {
  auto record = start(question, method);
  guarded(record, [&] {
    const auto prompt = render_prompt(method, question.text, 1);
    const auto reply = model_.complete(request({{Role::kUser, prompt}}, false));
    record.transcripts.push_back({1, prompt, reply.content});
    record.answer = parse_guess(reply.content);

    PromptContext ctx;
    ctx.proposed_answer = record.answer;
    const auto follow = render_prompt(method, question.text, 2, ctx);
    const auto outcomes =
        model_.sample_n(request({{Role::kUser, follow}}, false), static_cast<std::size_t>(method.n_samples));
    std::size_t classified = 0, yes = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].response) {
        record.transcripts.push_back({2, follow, ""});
        record.parse_warnings.push_back("follow-up " + std::to_string(i) + " failed: " + outcomes[i].error);
        continue;
      }
      const auto& text = outcomes[i].response->content;
      record.transcripts.push_back({2, follow, text});
      if (auto v = classify_true_false(text)) {
        ++classified;
        yes += *v ? 1 : 0;
      } else {
        record.parse_warnings.push_back("follow-up " + std::to_string(i) + " is neither True nor False");
      }
    }
    if (classified == 0) throw ParseFailure("no follow-up could be classified", "");
    record.confidence = static_cast<double>(yes) / static_cast<double>(classified);
  });
  return record;
}

ElicitationRecord Elicitor::run_verbalized(const Question& question, const MethodSpec& method) {
  auto record = start(question, method);
  if (method.uses_sampling()) throw InvalidInput("run_verbalized needs a verbalized method");
  guarded(record, [&] {
    PromptContext ctx;
    ctx.expressions = expressions_;
    const bool cot = method.kind == MethodKind::kVerb2SCoT;
    const auto p1 = render_prompt(method, question.text, 1, ctx);
    std::vector<Message> dialogue{{Role::kUser, p1}};
    const auto r1 = model_.complete(request(dialogue, cot));
    record.transcripts.push_back({1, p1, r1.content});

    auto second_stage = [&]() -> std::string {
      const auto p2 = render_prompt(method, question.text, 2, ctx);
      dialogue.push_back({Role::kAssistant, r1.content});
      dialogue.push_back({Role::kUser, p2});
      const auto r2 = model_.complete(request(dialogue, false));
      record.transcripts.push_back({2, p2, r2.content});
      return r2.content;
    };

    switch (method.kind) {
      case MethodKind::kVerb1STopK: {
        if (method.k == 1) {
          auto gp = parse_guess_prob(r1.content);
          record.answer = gp.answer;
          record.confidence = gp.probability;
          record.alternates = {{gp.answer, gp.probability}};
          append(record.parse_warnings, gp.warnings);
        } else {
          auto tk = parse_topk(r1.content, method.k);
          record.alternates = tk.pairs;
          append(record.parse_warnings, tk.warnings);
        }
        break;
      }
      case MethodKind::kVerb2STopK: {
        if (method.k == 1) {
          record.answer = parse_guess(r1.content);
          auto p = parse_probability(second_stage());
          record.confidence = p.value;
          record.alternates = {{record.answer, p.value}};
          append(record.parse_warnings, p.warnings);
        } else {
          const auto guesses = parse_topk_guesses(r1.content, method.k, &record.parse_warnings);
          if (guesses.empty()) throw ParseFailure("no guesses found", r1.content);
          const auto reply = second_stage();
          const auto probs = parse_topk_probabilities(reply, method.k, &record.parse_warnings);
          std::vector<AnswerProb> pairs;
          for (const auto& [i, g] : guesses) {
            if (auto it = probs.find(i); it != probs.end())
              pairs.push_back({g, it->second});
            else
              record.parse_warnings.push_back("G" + std::to_string(i) + " has no probability; dropped");
          }
          if (pairs.empty()) throw ParseFailure("no guess/probability pairs found", reply);
          std::stable_sort(pairs.begin(), pairs.end(),
                           [](const auto& a, const auto& b) { return a.probability > b.probability; });
          record.alternates = std::move(pairs);
        }
        break;
      }
      case MethodKind::kVerb2SCoT: {
        record.answer = parse_guess(r1.content);
        auto p = parse_probability(second_stage());
        record.confidence = p.value;
        record.alternates = {{record.answer, p.value}};
        append(record.parse_warnings, p.warnings);
        break;
      }
      case MethodKind::kLing1S: {
        record.answer = parse_guess(r1.content);
        const auto expr = parse_expression(r1.content, expressions_);
        record.confidence_expression = expr;
        record.confidence = human_map_.at(expr);
        break;
      }
      default: throw InvalidInput("run_verbalized needs a verbalized method");
    }
    if (!record.alternates.empty() && method.uses_top_k()) {
      record.answer = record.alternates.front().answer;
      record.confidence = record.alternates.front().probability;
    }
  });
  return record;
}

void grade_record(ElicitationRecord& record, const Question& question, Equivalence& equivalence) {
  if (record.status != RecordStatus::kOk) return;
  try {
    const auto v = equivalence.check(question, record.answer);
    record.correct = v.equivalent;
    record.grade_source = std::string(to_string(v.source));
  } catch (const AuthError&) {
    throw;
  } catch (const JudgeUnparseable& e) {
    record.status = RecordStatus::kJudgeFailed;
    record.failure = e.what();
  } catch (const Error& e) {
    record.status = RecordStatus::kJudgeFailed;
    record.failure = e.what();
  }
}

}  // namespace verbcal
