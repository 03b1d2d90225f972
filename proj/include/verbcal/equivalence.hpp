#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "verbcal/datasets.hpp"
#include "verbcal/model_client.hpp"

namespace verbcal {

enum class VerdictSource { kExact, kAlias, kJudge, kCache };

std::string_view to_string(VerdictSource source);

struct EquivalenceVerdict {
  bool equivalent = false;
  VerdictSource source = VerdictSource::kExact;
  std::optional<std::string> judge_raw;
};

// Lowercase, trim, collapse whitespace, drop leading articles and terminal
// punctuation.
std::string normalize_answer(std::string_view answer);

// Yes/No from the leading token of a judge reply; nullopt when it is neither.
std::optional<bool> classify_judge_reply(std::string_view reply);

// Persistent append-only verdict store. One JSON object per line:
// key, question, gold, predicted, judge, equivalent, judge_raw, timestamp.
class EquivalenceCache {
 public:
  EquivalenceCache() = default;  // in-memory only
  explicit EquivalenceCache(std::string path);

  static std::string key(std::string_view question, std::string_view gold, std::string_view predicted,
                         std::string_view judge_id);

  std::optional<EquivalenceVerdict> find(const std::string& key) const;
  void store(const std::string& key, std::string_view question, std::string_view gold,
             std::string_view predicted, std::string_view judge_id, const EquivalenceVerdict& verdict,
             std::int64_t timestamp);
  std::size_t size() const;

 private:
  std::string path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, EquivalenceVerdict> entries_;
};

struct EquivalenceOptions {
  // Exact/alias normalization before the judge. Off for fidelity runs.
  bool fast_path = true;
  int judge_max_tokens = 256;
  std::function<std::int64_t()> timestamp;  // defaults to wall-clock seconds
};

struct AnswerCluster {
  std::string representative;
  std::vector<std::size_t> members;
};

struct ClusterResult {
  std::vector<AnswerCluster> clusters;
  std::vector<std::string> warnings;
  std::vector<std::size_t> counts() const;
};

class Equivalence {
 public:
  Equivalence(std::shared_ptr<ChatModel> judge, std::shared_ptr<EquivalenceCache> cache,
              EquivalenceOptions options = {});

  // Exact match, then alias match, then the cached or live judge. Throws
  // JudgeUnparseable after one retry.
  EquivalenceVerdict check(std::string_view question, std::string_view gold,
                           std::span<const std::string> aliases, std::string_view predicted);
  EquivalenceVerdict check(const Question& question, std::string_view predicted);

  // Greedy: each answer joins the first cluster whose representative (its first
  // member) it is equivalent to. Judge failures count as non-equivalent.
  ClusterResult cluster(std::string_view question, std::span<const std::string> answers);

  std::size_t judge_calls() const;
  std::string judge_id() const;

 private:
  EquivalenceVerdict ask_judge(std::string_view question, std::string_view gold, std::string_view predicted);

  std::shared_ptr<ChatModel> judge_;
  std::shared_ptr<EquivalenceCache> cache_;
  EquivalenceOptions options_;
  mutable std::mutex mu_;
  std::size_t judge_calls_ = 0;
};

}  // namespace verbcal
