#include "verbcal/expressions.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "verbcal/error.hpp"

namespace verbcal {

namespace {

void check_probability(const std::string& expression, double p) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    throw InvalidInput("probability for '" + expression + "' outside [0,1]");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExpressionMap::ExpressionMap(std::vector<std::pair<std::string, double>> entries) {
  for (auto& [name, p] : entries) set(name, p);
}

ExpressionMap ExpressionMap::parse_tsv(std::istream& in) {
  ExpressionMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DatasetError("expected expression<TAB>probability", lineno);
    const std::string name(trim(std::string_view(line).substr(0, tab)));
    const auto value = trim(std::string_view(line).substr(tab + 1));
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), p);
    if (ec != std::errc() || ptr != value.data() + value.size() || name.empty())
      throw DatasetError("malformed expression map entry", lineno);
    if (map.contains(name)) throw DatasetError("duplicate expression '" + name + "'", lineno);
    map.set(name, p);
  }
  return map;
}

ExpressionMap ExpressionMap::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open expression map " + path);
  return parse_tsv(in);
}

std::string ExpressionMap::to_tsv() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, p] : entries_) os << name << '\t' << p << '\n';
  return os.str();
}

void ExpressionMap::set(const std::string& expression, double probability) {
  check_probability(expression, probability);
  for (auto& [name, p] : entries_) {
    if (name == expression) {
      p = probability;
      return;
    }
  }
  entries_.emplace_back(expression, probability);
}

bool ExpressionMap::contains(std::string_view expression) const {
  return find(expression).has_value();
}

std::optional<double> ExpressionMap::find(std::string_view expression) const {
  for (const auto& [name, p] : entries_)
    if (name == expression) return p;
  return std::nullopt;
}

double ExpressionMap::at(std::string_view expression) const {
  if (auto p = find(expression)) return *p;
  throw InvalidInput("unknown expression '" + std::string(expression) + "'");
}

std::vector<std::string> ExpressionMap::expressions() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

}  // namespace verbcal
