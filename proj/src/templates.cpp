#include "verbcal/templates.hpp"

#include <array>

#include "verbcal/error.hpp"

namespace verbcal {

namespace {

const std::string kLabelProb =
    "Provide your best guess for the following question. Give ONLY the guess, no other words or "
    "explanation.\n\nFor example:\n\nGuess: <most likely guess, as short as possible; not a complete "
    "sentence, just the guess!>\n\nThe question is:${THE_QUESTION}";

const std::string kIsTrue =
    "Question: ${QUESTION}\nProposed Answer: ${ANSWER}\nIs the proposed answer:\n\t(A) True or\n\t(B) "
    "False?\n The proposed answer is:";

const std::string kVerb1STop1 =
    "Provide your best guess and the probability that it is correct (0.0 to 1.0) for the following "
    "question. Give ONLY the guess and probability, no other words or explanation. For example:\n\nGuess: "
    "<most likely guess, as short as possible; not a complete sentence, just the guess!>\n Probability: "
    "<the probability between 0.0 and 1.0 that your guess is correct, without any extra commentary "
    "whatsoever; just the probability!>\n\nThe question is: ${THE_QUESTION}";

const std::string kVerb1STopK =
    "Provide your ${k} best guesses and the probability that each is correct (0.0 to 1.0) for the "
    "following question. Give ONLY the guesses and probabilities, no other words or explanation. For "
    "example:\n\nG1: <first most likely guess, as short as possible; not a complete sentence, just the "
    "guess!>\n\nP1: <the probability between 0.0 and 1.0 that G1 is correct, without any extra commentary "
    "whatsoever; just the probability!> ... G${k}: <${k}-th most likely guess, as short as possible; not a "
    "complete sentence, just the guess!>\n\nP${k}: <the probability between 0.0 and 1.0 that G${k} is "
    "correct, without any extra commentary whatsoever; just the probability!> \n\nThe question is: "
    "${THE_QUESTION}";

const std::string kVerb2SCoTStage1 =
    "Provide your best guess for the following question. Before giving your answer, provide a "
    "step-by-step explanation of your thought process. Then on a new line give the guess with no other "
    "words or explanation.\n\nFor example:\n\nExplanation: <one sentence step-by-step explanation of your "
    "thought process>\n\nGuess: <most likely guess, as short as possible; not a complete sentence, just the "
    "guess!>\n\nThe question is: ${THE_QUESTION}";

const std::string kProbabilityStage2 =
    "Provide the probability that your guess is correct. Give ONLY the probability, no other words or "
    "explanation.\n\nFor example:\n\nProbability: <the probability between 0.0 and 1.0 that your guess is "
    "correct, without any extra commentary whatsoever; just the probability!>\n";

const std::string kVerb2STopKStage1 =
    "Provide your ${k} best guesses for the following question. Give ONLY the guesses, no other words or "
    "explanation. For example:\n\nG1: <first most likely guess, as short as possible; not a complete "
    "sentence, just the guess!>\n\nP1: <the probability between 0.0 and 1.0 that G1 is correct, without "
    "any extra commentary whatsoever; just the probability!> ... G${k}: <${k}-th most likely guess, as "
    "short as possible; not a complete sentence, just the guess!>\n\nThe question is:${THE_QUESTION}";

const std::string kVerb2STopKStage2 =
    "Provide the probability that each of your guesses is correct. Give ONLY the probabilities, no other "
    "words or explanation.\n\nFor example:\n\nP1: <the probability between 0.0 and 1.0 that G1 is correct, "
    "without any extra commentary whatsoever; just the probability!>\n... P${k}: <the probability between "
    "0.0 and 1.0 that G${k} is correct, without any extra commentary whatsoever; just the probability!> ";

const std::string kLing1S =
    "Provide your best guess for the following question, and describe how likely it is that your guess "
    "is correct as one of the following expressions: ${EXPRESSION_LIST}. Give ONLY the guess and your "
    "confidence, no other words or explanation. For example:\n\nGuess: <most likely guess, as short as "
    "possible; not a complete sentence, just the guess!>\nConfidence: <description of confidence, without "
    "any extra commentary whatsoever; just a short phrase!>\n\nThe question is: ${THE_QUESTION}";

const std::string kEquivalence =
    "Are the following two answers to my question Q semantically equivalent?\n\nQ: ${THE_QUESTION}\nA1: "
    "${GOLD_ANSWER}\nA2: ${PRED_ANSWER}\n\nPlease answer with a single word, either \"Yes.\" or \"No.\", "
    "and explain your reasoning.";

struct KindName {
  MethodKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 7> kKindNames{{
    {MethodKind::kLabelProb, "label_prob"},
    {MethodKind::kIsTrueProb, "is_true_prob"},
    {MethodKind::kEntropy, "entropy"},
    {MethodKind::kVerb1STopK, "verb_1s_topk"},
    {MethodKind::kVerb2STopK, "verb_2s_topk"},
    {MethodKind::kVerb2SCoT, "verb_2s_cot"},
    {MethodKind::kLing1S, "ling_1s"},
}};

[[noreturn]] void bad_stage(const MethodSpec& m, int stage) {
  throw InvalidInput("method " + std::string(to_string(m.kind)) + " has no stage " + std::to_string(stage));
}

}  // namespace

std::string_view to_string(MethodKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

MethodKind method_kind_from_string(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw InvalidInput("unknown method kind '" + std::string(name) + "'");
}

std::string_view to_string(ExpressionMapMode mode) {
  return mode == ExpressionMapMode::kHuman ? "human" : "optimized";
}

ExpressionMapMode expression_mode_from_string(std::string_view name) {
  if (name == "human") return ExpressionMapMode::kHuman;
  if (name == "optimized" || name == "opt") return ExpressionMapMode::kOptimized;
  throw InvalidInput("unknown expression map mode '" + std::string(name) + "'");
}

void MethodSpec::validate() const {
  if (k < 1) throw InvalidInput("k must be at least 1");
  if (n_samples < 1) throw InvalidInput("n_samples must be at least 1");
  if (!uses_top_k() && k != 1) throw InvalidInput("k applies only to top-k methods");
  if (kind != MethodKind::kLing1S && expression_mode != ExpressionMapMode::kHuman)
    throw InvalidInput("expression map mode applies only to ling_1s");
  for (const auto& [stage, text] : custom_templates)
    if (stage < 1 || stage > stages()) bad_stage(*this, stage);
}

int MethodSpec::stages() const {
  switch (kind) {
    case MethodKind::kIsTrueProb:
    case MethodKind::kVerb2STopK:
    case MethodKind::kVerb2SCoT: return 2;
    default: return 1;
  }
}

bool MethodSpec::uses_sampling() const {
  return kind == MethodKind::kLabelProb || kind == MethodKind::kIsTrueProb || kind == MethodKind::kEntropy;
}

bool MethodSpec::uses_top_k() const { return kind == MethodKind::kVerb1STopK || kind == MethodKind::kVerb2STopK; }

std::string MethodSpec::display_name() const {
  if (!name.empty()) return name;
  switch (kind) {
    case MethodKind::kLabelProb: return "Label prob.";
    case MethodKind::kIsTrueProb: return "'Is True' prob.";
    case MethodKind::kEntropy: return "Entropy";
    case MethodKind::kVerb1STopK: return "Verb. 1S top-" + std::to_string(k);
    case MethodKind::kVerb2STopK: return "Verb. 2S top-" + std::to_string(k);
    case MethodKind::kVerb2SCoT: return "Verb. 2S CoT";
    case MethodKind::kLing1S:
      return expression_mode == ExpressionMapMode::kHuman ? "Ling. 1S-human" : "Ling. 1S-opt.";
  }
  return "unknown";
}

const std::string& builtin_template(const MethodSpec& m, int stage) {
  if (stage < 1 || stage > m.stages()) bad_stage(m, stage);
  switch (m.kind) {
    case MethodKind::kLabelProb:
    case MethodKind::kEntropy: return kLabelProb;
    case MethodKind::kIsTrueProb: return stage == 1 ? kLabelProb : kIsTrue;
    case MethodKind::kVerb1STopK: return m.k == 1 ? kVerb1STop1 : kVerb1STopK;
    case MethodKind::kVerb2STopK:
      if (m.k == 1) return stage == 1 ? kLabelProb : kProbabilityStage2;
      return stage == 1 ? kVerb2STopKStage1 : kVerb2STopKStage2;
    case MethodKind::kVerb2SCoT: return stage == 1 ? kVerb2SCoTStage1 : kProbabilityStage2;
    case MethodKind::kLing1S: return kLing1S;
  }
  bad_stage(m, stage);
}

std::string template_text(const MethodSpec& m, int stage) {
  if (auto it = m.custom_templates.find(stage); it != m.custom_templates.end()) return it->second;
  return builtin_template(m, stage);
}

std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open + 2);
    if (close == std::string_view::npos) throw InvalidInput("unterminated placeholder in template");
    const auto name = tmpl.substr(open + 2, close - open - 2);
    bool found = false;
    for (const auto& [key, value] : values) {
      if (key == name) {
        out.append(value);
        found = true;
        break;
      }
    }
    if (!found) throw InvalidInput("unknown placeholder ${" + std::string(name) + "}");
    pos = close + 1;
  }
  return out;
}

std::string join_expressions(std::span<const std::string> expressions) {
  std::string out;
  for (std::size_t i = 0; i < expressions.size(); ++i) {
    if (i) out += ", ";
    out += expressions[i];
  }
  return out;
}

std::string render_prompt(const MethodSpec& method, std::string_view question, int stage,
                          const PromptContext& context) {
  const std::string tmpl = template_text(method, stage);
  std::vector<std::pair<std::string, std::string>> values{
      {"THE_QUESTION", std::string(question)},
      {"k", std::to_string(method.k)},
  };
  if (method.kind == MethodKind::kIsTrueProb && stage == 2) {
    values.emplace_back("QUESTION", std::string(question));
    values.emplace_back("ANSWER", std::string(context.proposed_answer));
  }
  if (method.kind == MethodKind::kLing1S) {
    if (context.expressions.empty()) throw InvalidInput("ling_1s needs an expression list");
    values.emplace_back("EXPRESSION_LIST", join_expressions(context.expressions));
  }
  return substitute(tmpl, values);
}

std::string render_equivalence_prompt(std::string_view question, std::string_view gold,
                                      std::string_view predicted) {
  return substitute(kEquivalence, {{"THE_QUESTION", std::string(question)},
                                   {"GOLD_ANSWER", std::string(gold)},
                                   {"PRED_ANSWER", std::string(predicted)}});
}

std::map<int, std::string> parse_template_file(std::string_view content) {
  std::map<int, std::string> stages;
  int current = 1;
  std::string buffer;
  bool any = false;
  auto flush = [&] {
    if (!buffer.empty() || any) stages[current] = buffer;
  };
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    const auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    int stage = 0;
    if (line.starts_with("--- stage ") && line.ends_with(" ---")) {
      const auto num = line.substr(10, line.size() - 14);
      try {
        stage = std::stoi(std::string(num));
      } catch (const std::exception&) {
        throw InvalidInput("bad stage marker: " + std::string(line));
      }
    }
    if (stage > 0) {
      if (!buffer.empty() && buffer.back() == '\n') buffer.pop_back();
      flush();
      if (stages.count(stage)) throw InvalidInput("duplicate stage " + std::to_string(stage));
      current = stage;
      buffer.clear();
      any = true;
    } else {
      buffer.append(line);
      if (nl != std::string_view::npos) buffer.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();
  return stages;
}

}  // namespace verbcal
