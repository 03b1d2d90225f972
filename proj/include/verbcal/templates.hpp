#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace verbcal {

enum class MethodKind { kLabelProb, kIsTrueProb, kEntropy, kVerb1STopK, kVerb2STopK, kVerb2SCoT, kLing1S };
enum class ExpressionMapMode { kHuman, kOptimized };

std::string_view to_string(MethodKind kind);
MethodKind method_kind_from_string(std::string_view name);
std::string_view to_string(ExpressionMapMode mode);
ExpressionMapMode expression_mode_from_string(std::string_view name);

struct MethodSpec {
  MethodKind kind = MethodKind::kLabelProb;
  int k = 1;           // top-k kinds
  int n_samples = 10;  // sampling kinds
  ExpressionMapMode expression_mode = ExpressionMapMode::kHuman;  // ling_1s only
  std::string name;    // display name; derived when empty
  // Stage number -> template text replacing the built-in one.
  std::map<int, std::string> custom_templates;

  // Throws InvalidInput for k or expression mode set on kinds that do not use them.
  void validate() const;
  int stages() const;
  bool uses_sampling() const;
  bool uses_top_k() const;
  // Entropy scores rank answers but are not probabilities.
  bool auc_only() const { return kind == MethodKind::kEntropy; }
  std::string display_name() const;
};

struct PromptContext {
  std::string_view proposed_answer;          // 'Is True' stage 2
  std::span<const std::string> expressions;  // ling_1s
};

// The built-in template for (method, stage) before placeholder substitution.
const std::string& builtin_template(const MethodSpec& method, int stage);
std::string template_text(const MethodSpec& method, int stage);

// Replaces ${NAME} placeholders. Throws InvalidInput on an unknown or
// unterminated placeholder.
std::string substitute(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values);

// Stage-1 and 2S stage-2 prompts for every method. 2S stage-2 prompts are sent
// as a second user turn after the stage-1 reply. 'Is True' stage 2 is a fresh
// single-turn prompt about stage 1's answer.
std::string render_prompt(const MethodSpec& method, std::string_view question, int stage,
                          const PromptContext& context = {});

std::string render_equivalence_prompt(std::string_view question, std::string_view gold,
                                      std::string_view predicted);

std::string join_expressions(std::span<const std::string> expressions);

// Custom template file: plain text; a line "--- stage N ---" starts stage N.
// Text before any marker is stage 1. The newline ending a stage's last line
// before a marker is not part of the template.
std::map<int, std::string> parse_template_file(std::string_view content);

}  // namespace verbcal
