#include "verbcal/equivalence.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/hashing.hpp"
#include "verbcal/templates.hpp"

namespace verbcal {

using json = nlohmann::ordered_json;

std::string_view to_string(VerdictSource source) {
  switch (source) {
    case VerdictSource::kExact: return "exact";
    case VerdictSource::kAlias: return "alias";
    case VerdictSource::kJudge: return "judge";
    case VerdictSource::kCache: return "cache";
  }
  return "exact";
}

namespace {

bool is_terminal_punct(char c) { return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':'; }

std::int64_t wall_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string words;
  for (char c : answer) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!words.empty() && words.back() != ' ') words.push_back(' ');
    } else {
      words.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  while (!words.empty() && (words.back() == ' ' || is_terminal_punct(words.back()))) words.pop_back();
  for (std::string_view article : {"the ", "an ", "a "}) {
    if (words.starts_with(article) && words.size() > article.size()) {
      words.erase(0, article.size());
      break;
    }
  }
  return words;
}

std::optional<bool> classify_judge_reply(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
  std::size_t j = i;
  while (j < reply.size() && std::isalpha(static_cast<unsigned char>(reply[j]))) ++j;
  std::string token(reply.substr(i, j - i));
  std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
  if (token == "yes") return true;
  if (token == "no") return false;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

EquivalenceCache::EquivalenceCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    // A torn final line from an interrupted append is skipped.
    if (j.is_discarded() || !j.contains("key")) continue;
    EquivalenceVerdict v;
    v.equivalent = j.value("equivalent", false);
    // Only verdicts from an earlier run count as cache hits; ones judged in
    // this process stay "judge" so the source doesn't depend on task timing.
    v.source = VerdictSource::kCache;
    if (j.contains("judge_raw") && j["judge_raw"].is_string()) v.judge_raw = j["judge_raw"].get<std::string>();
    entries_[j["key"].get<std::string>()] = std::move(v);
  }
}

std::string EquivalenceCache::key(std::string_view question, std::string_view gold, std::string_view predicted,
                                  std::string_view judge_id) {
  return sha256_hex(json::array({question, gold, predicted, judge_id}).dump());
}

std::optional<EquivalenceVerdict> EquivalenceCache::find(const std::string& key) const {
  std::shared_lock lock(mu_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void EquivalenceCache::store(const std::string& key, std::string_view question, std::string_view gold,
                             std::string_view predicted, std::string_view judge_id,
                             const EquivalenceVerdict& verdict, std::int64_t timestamp) {
  std::unique_lock lock(mu_);
  if (entries_.count(key)) return;
  entries_[key] = verdict;
  if (path_.empty()) return;
  json j;
  j["key"] = key;
  j["question"] = question;
  j["gold"] = gold;
  j["predicted"] = predicted;
  j["judge"] = judge_id;
  j["equivalent"] = verdict.equivalent;
  j["source"] = to_string(verdict.source);
  j["judge_raw"] = verdict.judge_raw ? json(*verdict.judge_raw) : json(nullptr);
  j["timestamp"] = timestamp;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot append to equivalence cache " + path_);
  out << j.dump() << '\n';
}

std::size_t EquivalenceCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> ClusterResult::counts() const {
  std::vector<std::size_t> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.members.size());
  return out;
}

Equivalence::Equivalence(std::shared_ptr<ChatModel> judge, std::shared_ptr<EquivalenceCache> cache,
                         EquivalenceOptions options)
    : judge_(std::move(judge)), cache_(std::move(cache)), options_(std::move(options)) {
  if (!cache_) cache_ = std::make_shared<EquivalenceCache>();
  if (!options_.timestamp) options_.timestamp = wall_seconds;
}

std::string Equivalence::judge_id() const { return judge_ ? judge_->model_id() : std::string(); }

std::size_t Equivalence::judge_calls() const {
  std::lock_guard lock(mu_);
  return judge_calls_;
}

EquivalenceVerdict Equivalence::ask_judge(std::string_view question, std::string_view gold,
                                          std::string_view predicted) {
  if (!judge_) throw Error("no judge model configured");
  const auto key = EquivalenceCache::key(question, gold, predicted, judge_->model_id());
  if (auto hit = cache_->find(key)) return *hit;
  ChatRequest req;
  req.messages = {{Role::kUser, render_equivalence_prompt(question, gold, predicted)}};
  req.temperature = 0.0;
  req.top_p = 1.0;
  req.max_tokens = options_.judge_max_tokens;
  req.model_id = judge_->model_id();

  std::string raw;
  for (int attempt = 0; attempt < 2; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++judge_calls_;
    }
    raw = judge_->complete(req).content;
    if (auto yes = classify_judge_reply(raw)) {
      EquivalenceVerdict v{*yes, VerdictSource::kJudge, raw};
      cache_->store(key, question, gold, predicted, judge_->model_id(), v, options_.timestamp());
      return v;
    }
  }
  throw JudgeUnparseable(raw);
}

EquivalenceVerdict Equivalence::check(std::string_view question, std::string_view gold,
                                      std::span<const std::string> aliases, std::string_view predicted) {
  if (options_.fast_path) {
    const auto p = normalize_answer(predicted);
    if (normalize_answer(gold) == p) return {true, VerdictSource::kExact, std::nullopt};
    for (const auto& a : aliases)
      if (normalize_answer(a) == p) return {true, VerdictSource::kAlias, std::nullopt};
  }
  return ask_judge(question, gold, predicted);
}

EquivalenceVerdict Equivalence::check(const Question& question, std::string_view predicted) {
  return check(question.text, question.gold, question.aliases, predicted);
}

ClusterResult Equivalence::cluster(std::string_view question, std::span<const std::string> answers) {
  ClusterResult result;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    bool placed = false;
    for (auto& c : result.clusters) {
      bool same = false;
      try {
        same = check(question, c.representative, {}, answers[i]).equivalent;
      } catch (const JudgeUnparseable&) {
        result.warnings.push_back("judge unparseable comparing '" + c.representative + "' and '" + answers[i] +
                                  "'; treated as different");
      }
      if (same) {
        c.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) result.clusters.push_back({answers[i], {i}});
  }
  return result;
}

}  // namespace verbcal
