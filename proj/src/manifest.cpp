#include <fstream>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"

namespace verbcal {

using json = nlohmann::ordered_json;

std::string record_to_json(const ElicitationRecord& r) {
  json j;
  j["question_id"] = r.question_id;
  j["dataset"] = r.dataset;
  j["model_id"] = r.model_id;
  j["method"] = {{"kind", to_string(r.method.kind)},
                 {"k", r.method.k},
                 {"n_samples", r.method.n_samples},
                 {"expression_map_mode", to_string(r.method.expression_mode)},
                 {"name", r.method.display_name()}};
  j["fingerprint"] = r.method_fingerprint;
  j["status"] = to_string(r.status);
  j["failure"] = r.failure;
  j["answer"] = r.answer;
  j["confidence"] = r.confidence;
  j["confidence_expression"] = r.confidence_expression ? json(*r.confidence_expression) : json(nullptr);
  json alts = json::array();
  for (const auto& a : r.alternates) alts.push_back(json::array({a.answer, a.probability}));
  j["alternates"] = std::move(alts);
  j["cluster_counts"] = r.cluster_counts;
  j["entropy"] = r.entropy ? json(*r.entropy) : json(nullptr);
  j["auc_only"] = r.auc_only;
  j["correct"] = r.correct ? json(*r.correct) : json(nullptr);
  j["grade_source"] = r.grade_source ? json(*r.grade_source) : json(nullptr);
  j["parse_warnings"] = r.parse_warnings;
  json ts = json::array();
  for (const auto& t : r.transcripts) ts.push_back({{"stage", t.stage}, {"prompt", t.prompt}, {"response", t.response}});
  j["transcripts"] = std::move(ts);
  return j.dump();
}

ElicitationRecord record_from_json(const std::string& line) {
  const auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInput("manifest record is not a JSON object");
  ElicitationRecord r;
  try {
    r.question_id = j.at("question_id").get<std::string>();
    r.dataset = j.value("dataset", "");
    r.model_id = j.at("model_id").get<std::string>();
    const auto& m = j.at("method");
    r.method.kind = method_kind_from_string(m.at("kind").get<std::string>());
    r.method.k = m.value("k", 1);
    r.method.n_samples = m.value("n_samples", 10);
    r.method.expression_mode = expression_mode_from_string(m.value("expression_map_mode", "human"));
    r.method.name = m.value("name", "");
    r.method_fingerprint = j.at("fingerprint").get<std::string>();
    r.status = record_status_from_string(j.at("status").get<std::string>());
    r.failure = j.value("failure", "");
    r.answer = j.value("answer", "");
    r.confidence = j.value("confidence", 0.0);
    if (j.contains("confidence_expression") && j["confidence_expression"].is_string())
      r.confidence_expression = j["confidence_expression"].get<std::string>();
    for (const auto& a : j.value("alternates", json::array()))
      r.alternates.push_back({a.at(0).get<std::string>(), a.at(1).get<double>()});
    r.cluster_counts = j.value("cluster_counts", std::vector<std::size_t>{});
    if (j.contains("entropy") && j["entropy"].is_number()) r.entropy = j["entropy"].get<double>();
    r.auc_only = j.value("auc_only", false);
    if (j.contains("correct") && j["correct"].is_boolean()) r.correct = j["correct"].get<bool>();
    if (j.contains("grade_source") && j["grade_source"].is_string())
      r.grade_source = j["grade_source"].get<std::string>();
    r.parse_warnings = j.value("parse_warnings", std::vector<std::string>{});
    for (const auto& t : j.value("transcripts", json::array()))
      r.transcripts.push_back({t.value("stage", 1), t.value("prompt", ""), t.value("response", "")});
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed manifest record: ") + e.what());
  }
  return r;
}

std::vector<ElicitationRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::vector<ElicitationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      const auto header = json::parse(line, nullptr, false);
      if (header.is_discarded() || header.value("schema", "") != "verbcal.manifest")
        throw DatasetError("manifest lacks a schema header", 1);
      if (header.value("version", 0) != kManifestSchemaVersion)
        throw DatasetError("unsupported manifest version", 1);
      continue;
    }
    try {
      out.push_back(record_from_json(line));
    } catch (const InvalidInput& e) {
      throw DatasetError(e.what(), lineno);
    }
  }
  return out;
}

}  // namespace verbcal
