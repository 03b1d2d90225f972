#pragma once

// Simulated chat model for offline runs: each question has a latent
// probability p and the model's main answer is right with probability p.
// Replies follow whichever template the prompt came from.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "verbcal/datasets.hpp"
#include "verbcal/harness.hpp"
#include "verbcal/model_client.hpp"

namespace sim {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return static_cast<double>(mix(mix(mix(seed ^ a) ^ b) ^ c) >> 11) * 0x1.0p-53;
}

struct Options {
  int questions = 20;
  std::uint64_t seed = 1;
  std::string dataset = "sim";
  int refuse_every = 0;  // every n-th question gets refusals from verbalized prompts; 0 disables
  std::vector<std::pair<std::string, double>> expressions;
};

class World {
 public:
  struct Item {
    std::string id, text, gold;
    double p = 0.5;
    bool correct = false;
  };

  explicit World(Options o) : o_(std::move(o)) {
    for (int i = 0; i < o_.questions; ++i) {
      Item it;
      char id[32];
      std::snprintf(id, sizeof id, "q%04d", i);
      it.id = id;
      it.text = "What is the name of item " + std::to_string(i) + "?";
      it.gold = "Item " + std::to_string(i);
      it.p = 0.05 + 0.9 * uniform(o_.seed, i, 1);
      it.correct = uniform(o_.seed, i, 2) < it.p;
      by_text_[it.text] = items_.size();
      items_.push_back(std::move(it));
    }
  }

  const std::vector<Item>& items() const { return items_; }

  std::vector<verbcal::Question> questions() const {
    std::vector<verbcal::Question> qs;
    for (const auto& it : items_) qs.push_back({it.id, it.text, it.gold, {}, o_.dataset});
    return qs;
  }

  verbcal::MockChatModel::Responder responder() const {
    return [this](const verbcal::ChatRequest& req, std::size_t call) -> std::optional<std::string> {
      return reply(req, call);
    };
  }

  verbcal::ModelFactory factory() const {
    return [this](const verbcal::ProviderProfile& profile) -> std::shared_ptr<verbcal::ChatModel> {
      auto m = std::make_shared<verbcal::MockChatModel>(profile.model_id);
      m->set_responder(responder());
      return m;
    };
  }

 private:
  static std::string after(const std::string& s, const std::string& marker, const std::string& stop = "\n") {
    const auto a = s.find(marker);
    if (a == std::string::npos) return {};
    auto b = a + marker.size();
    while (b < s.size() && s[b] == ' ') ++b;
    const auto e = s.find(stop, b);
    return s.substr(b, e == std::string::npos ? std::string::npos : e - b);
  }

  static std::string prob(double p) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", p);
    return buf;
  }

  std::string main_answer(const Item& it) const { return it.correct ? it.gold : "Wrong " + it.gold; }

  std::string nearest_expression(double p) const {
    std::string best;
    double gap = 2.0;
    for (const auto& [e, v] : o_.expressions)
      if (std::abs(v - p) < gap) gap = std::abs(v - p), best = e;
    return best;
  }

  const Item* find(const std::string& text) const {
    auto it = by_text_.find(text);
    return it == by_text_.end() ? nullptr : &items_[it->second];
  }

  std::optional<std::string> reply(const verbcal::ChatRequest& req, std::size_t call) const {
    const std::string& last = req.messages.back().content;
    const std::string& first = req.messages.front().content;

    if (last.rfind("Are the following two answers", 0) == 0) {
      const auto a1 = after(last, "A1:"), a2 = after(last, "A2:");
      return a1 == a2 ? "Yes." : "No. They name different things.";
    }
    if (last.find("Proposed Answer:") != std::string::npos) {
      const Item* it = find(after(last, "Question:"));
      if (!it) return std::nullopt;
      return uniform(o_.seed, std::hash<std::string>{}(it->id), 3, call % 10) < it->p ? "(A) True" : "(B) False";
    }
    const Item* it = find(after(first, "The question is:"));
    if (!it) return std::nullopt;
    const std::size_t idx = by_text_.at(it->text);
    const bool refuse = o_.refuse_every > 0 && idx % static_cast<std::size_t>(o_.refuse_every) == 0;
    const int k = std::atoi(after(first, "Provide your", " ").c_str());

    if (last.find("Provide the probability that each") != std::string::npos) {
      std::string out;
      for (int i = 1; i <= k; ++i)
        out += "P" + std::to_string(i) + ": " + prob(i == 1 ? it->p : (1.0 - it->p) / std::max(1, k - 1)) + "\n";
      return out;
    }
    if (last.find("Provide the probability that your guess") != std::string::npos)
      return "Probability: " + prob(it->p);
    if (refuse && req.messages.size() == 1 && last.find("Give ONLY the guess, no other") == std::string::npos)
      return "I cannot answer that.";
    if (last.find("describe how likely") != std::string::npos)
      return "Guess: " + main_answer(*it) + "\nConfidence: " + nearest_expression(it->p);
    if (last.find("best guesses and the probability") != std::string::npos ||
        last.find("best guesses for") != std::string::npos) {
      const bool with_probs = last.find("and the probability") != std::string::npos;
      std::string out;
      for (int i = 1; i <= k; ++i) {
        out += "G" + std::to_string(i) + ": " + (i == 1 ? main_answer(*it) : "Alt " + std::to_string(i)) + "\n";
        if (with_probs)
          out += "P" + std::to_string(i) + ": " + prob(i == 1 ? it->p : (1.0 - it->p) / std::max(1, k - 1)) + "\n";
      }
      return out;
    }
    if (last.find("and the probability that it is correct") != std::string::npos)
      return "Guess: " + main_answer(*it) + "\nProbability: " + prob(it->p);
    if (last.find("step-by-step") != std::string::npos)
      return "Explanation: recalled it.\nGuess: " + main_answer(*it);
    // Plain guess, sampled: draw j is right with probability p.
    const auto j = call % 10;
    if (uniform(o_.seed, idx, 4, j) < it->p) return "Guess: " + it->gold;
    return std::string("Guess: Wrong ") + (uniform(o_.seed, idx, 5, j) < 0.5 ? "a" : "b");
  }

  Options o_;
  std::vector<Item> items_;
  std::map<std::string, std::size_t> by_text_;
};

}  // namespace sim
