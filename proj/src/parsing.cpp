#include "verbcal/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>

#include "verbcal/error.hpp"

namespace verbcal {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_markdown(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (c != '*' && c != '`') out.push_back(c);
  return out;
}

struct Label {
  std::string name;  // "guess", "probability", "confidence", "g", "p"
  int index = 0;
  std::size_t value_begin = 0;
  std::size_t value_end = 0;
};

std::vector<Label> labels_of(const std::string& text) {
  static const std::regex re(R"((^|[^A-Za-z0-9])(guess|probability|confidence|g([0-9]+)|p([0-9]+))[ \t]*:)",
                             std::regex::icase);
  std::vector<Label> labels;
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    Label l;
    if (m[3].matched) {
      l.name = "g";
      l.index = std::stoi(m.str(3));
    } else if (m[4].matched) {
      l.name = "p";
      l.index = std::stoi(m.str(4));
    } else {
      l.name = lower(m.str(2));
    }
    starts.push_back(static_cast<std::size_t>(m.position(2)));
    l.value_begin = static_cast<std::size_t>(m.position(0) + m.length(0));
    labels.push_back(l);
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i].value_end = i + 1 < labels.size() ? starts[i + 1] : text.size();
  return labels;
}

std::string_view value_of(const std::string& text, const Label& l) {
  return std::string_view(text).substr(l.value_begin, l.value_end - l.value_begin);
}

// First non-empty line, trimmed, without wrapping quotes.
std::string first_line(std::string_view value) {
  value = trim(value);
  const auto nl = value.find('\n');
  auto line = trim(value.substr(0, nl));
  if (line.size() >= 2 && ((line.front() == '"' && line.back() == '"') || (line.front() == '\'' && line.back() == '\'')))
    line = trim(line.substr(1, line.size() - 2));
  return std::string(line);
}

}  // namespace

std::optional<ProbabilityParse> read_probability(std::string_view text) {
  static const std::regex num(R"((-?)([0-9]+(?:\.[0-9]*)?|\.[0-9]+)[ \t]*(%|percent)?)", std::regex::icase);
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, num)) return std::nullopt;
  const std::string digits = m.str(2);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc()) return std::nullopt;
  ProbabilityParse out;
  if (m[3].matched) v /= 100.0;
  if (m[1].length() > 0 && v > 0.0) {
    out.warnings.push_back("probability -" + digits + " clamped to 0");
    v = 0.0;
  }
  if (v > 1.0) {
    out.warnings.push_back("probability " + digits + " clamped to 1");
    v = 1.0;
  }
  out.value = v;
  return out;
}

std::string parse_guess(std::string_view response) {
  const std::string text = strip_markdown(response);
  const auto labels = labels_of(text);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    if (it->name != "guess") continue;
    auto answer = first_line(value_of(text, *it));
    if (!answer.empty()) return answer;
  }
  throw ParseFailure("no guess found", std::string(response));
}

ProbabilityParse parse_probability(std::string_view response) {
  const std::string text = strip_markdown(response);
  const auto labels = labels_of(text);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    if (it->name != "probability") continue;
    if (auto p = read_probability(value_of(text, *it))) return *p;
  }
  throw ParseFailure("no probability found", std::string(response));
}

GuessProb parse_guess_prob(std::string_view response) {
  GuessProb out;
  out.answer = parse_guess(response);
  auto p = parse_probability(response);
  out.probability = p.value;
  out.warnings = std::move(p.warnings);
  return out;
}

std::map<int, std::string> parse_topk_guesses(std::string_view response, int k, std::vector<std::string>* warnings) {
  const std::string text = strip_markdown(response);
  std::map<int, std::string> guesses;
  for (const auto& l : labels_of(text)) {
    if (l.name != "g") continue;
    if (l.index < 1 || l.index > k) {
      if (warnings) warnings->push_back("ignoring G" + std::to_string(l.index) + " outside 1.." + std::to_string(k));
      continue;
    }
    auto g = first_line(value_of(text, l));
    if (!g.empty()) guesses[l.index] = std::move(g);
  }
  return guesses;
}

std::map<int, double> parse_topk_probabilities(std::string_view response, int k, std::vector<std::string>* warnings) {
  const std::string text = strip_markdown(response);
  std::map<int, double> probs;
  for (const auto& l : labels_of(text)) {
    if (l.name != "p") continue;
    if (l.index < 1 || l.index > k) {
      if (warnings) warnings->push_back("ignoring P" + std::to_string(l.index) + " outside 1.." + std::to_string(k));
      continue;
    }
    if (auto p = read_probability(value_of(text, l))) {
      probs[l.index] = p->value;
      if (warnings) warnings->insert(warnings->end(), p->warnings.begin(), p->warnings.end());
    }
  }
  return probs;
}

TopKParse parse_topk(std::string_view response, int k) {
  if (k < 1) throw InvalidInput("k must be at least 1");
  TopKParse out;
  const auto guesses = parse_topk_guesses(response, k, &out.warnings);
  const auto probs = parse_topk_probabilities(response, k, &out.warnings);
  std::vector<std::pair<int, AnswerProb>> indexed;
  for (const auto& [i, g] : guesses) {
    auto p = probs.find(i);
    if (p == probs.end()) {
      out.warnings.push_back("G" + std::to_string(i) + " has no probability; dropped");
      continue;
    }
    indexed.push_back({i, {g, p->second}});
  }
  for (const auto& [i, p] : probs)
    if (!guesses.count(i)) out.warnings.push_back("P" + std::to_string(i) + " has no guess; dropped");
  if (indexed.empty()) throw ParseFailure("no guess/probability pairs found", std::string(response));
  std::stable_sort(indexed.begin(), indexed.end(), [](const auto& a, const auto& b) {
    return a.second.probability > b.second.probability;
  });
  for (auto& [i, ap] : indexed) out.pairs.push_back(std::move(ap));
  return out;
}

std::string parse_expression(std::string_view response, std::span<const std::string> expressions) {
  if (expressions.empty()) throw InvalidInput("expression list is empty");
  const std::string text = strip_markdown(response);
  const auto labels = labels_of(text);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    if (it->name != "confidence") continue;
    std::string value = lower(first_line(value_of(text, *it)));
    // Collapse internal whitespace.
    std::string norm;
    for (char c : value) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!norm.empty() && norm.back() != ' ') norm.push_back(' ');
      } else {
        norm.push_back(c);
      }
    }
    const std::string* best = nullptr;
    for (const auto& e : expressions) {
      const std::string le = lower(e);
      if (!norm.starts_with(le)) continue;
      if (norm.size() > le.size() && std::isalnum(static_cast<unsigned char>(norm[le.size()]))) continue;
      if (!best || e.size() > best->size()) best = &e;
    }
    if (best) return *best;
  }
  throw ParseFailure("no listed expression found", std::string(response));
}

std::optional<bool> classify_true_false(std::string_view response) {
  const std::string text = strip_markdown(response);
  std::size_t i = 0;
  while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t j = i;
  while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
  const std::string token = lower(std::string_view(text).substr(i, j - i));
  if (token == "a" || token == "true") return true;
  if (token == "b" || token == "false") return false;
  return std::nullopt;
}

}  // namespace verbcal
