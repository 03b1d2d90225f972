#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace verbcal {

// Ordered mapping from likelihood expressions ("Almost certain", ...) to
// probabilities. Order is the order expressions are offered to the model.
class ExpressionMap {
 public:
  ExpressionMap() = default;
  explicit ExpressionMap(std::vector<std::pair<std::string, double>> entries);

  // One "expression<TAB>probability" pair per line. Blank lines and lines
  // starting with '#' are ignored.
  static ExpressionMap parse_tsv(std::istream& in);
  static ExpressionMap load_tsv(const std::string& path);
  std::string to_tsv() const;

  void set(const std::string& expression, double probability);
  bool contains(std::string_view expression) const;
  std::optional<double> find(std::string_view expression) const;
  double at(std::string_view expression) const;  // throws InvalidInput

  std::vector<std::string> expressions() const;
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const ExpressionMap&, const ExpressionMap&) = default;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace verbcal
