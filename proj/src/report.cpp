#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"

namespace verbcal {

using json = nlohmann::ordered_json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string cell(const std::optional<double>& v, int precision = 3) {
  if (!v) return "---";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

const MethodReport* find_row(const CalibrationReport& r, const std::string& model, const std::string& dataset,
                             const std::string& method) {
  for (const auto& row : r.rows)
    if (row.model == model && row.dataset == dataset && row.method == method) return &row;
  return nullptr;
}

std::size_t status_count(const MethodReport& row, const char* status) {
  auto it = row.failures_by_status.find(status);
  return it == row.failures_by_status.end() ? 0 : it->second;
}

}  // namespace

std::string CalibrationReport::to_json() const {
  json j;
  j["num_bins"] = num_bins;
  j["num_folds"] = num_folds;
  j["datasets"] = datasets;
  j["models"] = models;
  j["methods"] = methods;
  json rs = json::array();
  for (const auto& r : rows) {
    json row;
    row["dataset"] = r.dataset;
    row["model"] = r.model;
    row["method"] = r.method;
    row["kind"] = r.kind;
    row["auc_only"] = r.auc_only;
    row["n_attempted"] = r.n_attempted;
    row["n_evaluated"] = r.n_evaluated;
    row["n_parse_failed"] = r.n_parse_failed;
    row["failures_by_status"] = r.failures_by_status;
    row["accuracy"] = opt(r.accuracy);
    row["ece"] = opt(r.ece);
    row["ece_t"] = opt(r.ece_t);
    row["bs_t"] = opt(r.bs_t);
    row["auc"] = opt(r.auc);
    row["temperatures"] = r.temperatures;
    json bins = json::array();
    for (const auto& b : r.bins)
      bins.push_back({{"lower", b.lower},
                      {"upper", b.upper},
                      {"count", b.count},
                      {"mean_confidence", opt(b.mean_confidence)},
                      {"mean_accuracy", opt(b.mean_accuracy)}});
    row["bins"] = std::move(bins);
    json usage = json::array();
    for (const auto& [e, n] : r.expression_usage) usage.push_back(json::array({e, n}));
    row["expression_usage"] = std::move(usage);
    row["warnings"] = r.warnings;
    rs.push_back(std::move(row));
  }
  j["rows"] = std::move(rs);
  return j.dump(2);
}

CalibrationReport CalibrationReport::from_json(const std::string& text) {
  const auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInput("report is not a JSON object");
  CalibrationReport r;
  try {
    r.num_bins = j.at("num_bins").get<std::size_t>();
    r.num_folds = j.at("num_folds").get<std::size_t>();
    r.datasets = j.at("datasets").get<std::vector<std::string>>();
    r.models = j.at("models").get<std::vector<std::string>>();
    r.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      MethodReport m;
      m.dataset = row.at("dataset").get<std::string>();
      m.model = row.at("model").get<std::string>();
      m.method = row.at("method").get<std::string>();
      m.kind = row.value("kind", "");
      m.auc_only = row.value("auc_only", false);
      m.n_attempted = row.value("n_attempted", std::size_t{0});
      m.n_evaluated = row.value("n_evaluated", std::size_t{0});
      m.n_parse_failed = row.value("n_parse_failed", std::size_t{0});
      m.failures_by_status = row.value("failures_by_status", std::map<std::string, std::size_t>{});
      m.accuracy = opt_from(row, "accuracy");
      m.ece = opt_from(row, "ece");
      m.ece_t = opt_from(row, "ece_t");
      m.bs_t = opt_from(row, "bs_t");
      m.auc = opt_from(row, "auc");
      m.temperatures = row.value("temperatures", std::vector<double>{});
      for (const auto& b : row.value("bins", json::array()))
        m.bins.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(), b.at("count").get<std::size_t>(),
                          opt_from(b, "mean_confidence"), opt_from(b, "mean_accuracy")});
      for (const auto& u : row.value("expression_usage", json::array()))
        m.expression_usage.emplace_back(u.at(0).get<std::string>(), u.at(1).get<std::size_t>());
      m.warnings = row.value("warnings", std::vector<std::string>{});
      r.rows.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed report: ") + e.what());
  }
  return r;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "text" || name == "txt") return ReportFormat::kText;
  if (name == "csv") return ReportFormat::kCsv;
  throw InvalidInput("unknown report format: " + std::string(name));
}

std::string render_metrics_table(const CalibrationReport& report, ReportFormat format) {
  static const char* kCols[] = {"ECE", "ECE-t", "BS-t", "AUC"};
  std::ostringstream os;
  if (format == ReportFormat::kCsv) {
    os << "model,dataset,method,accuracy,ece,ece_t,bs_t,auc,n_evaluated\n";
    for (const auto& r : report.rows) {
      auto c = [](const std::optional<double>& v) { return v ? cell(v, 6) : std::string(); };
      os << csv_field(r.model) << ',' << csv_field(r.dataset) << ',' << csv_field(r.method) << ','
         << c(r.accuracy) << ',' << c(r.ece) << ',' << c(r.ece_t) << ',' << c(r.bs_t) << ',' << c(r.auc) << ','
         << r.n_evaluated << '\n';
    }
    return os.str();
  }

  std::size_t name_w = 6;
  for (const auto& m : report.methods) name_w = std::max(name_w, m.size());
  name_w += 2;
  const int cw = 7;
  for (const auto& model : report.models) {
    os << "Model: " << model << '\n';
    os << std::left << std::setw(static_cast<int>(name_w)) << "";
    for (const auto& d : report.datasets) {
      std::string head = d.substr(0, 4 * cw - 1);
      os << std::left << std::setw(4 * cw + 2) << head;
    }
    os << '\n' << std::left << std::setw(static_cast<int>(name_w)) << "Method";
    for (std::size_t i = 0; i < report.datasets.size(); ++i) {
      for (const char* c : kCols) os << std::right << std::setw(cw) << c;
      os << "  ";
    }
    os << '\n';
    for (const auto& method : report.methods) {
      os << std::left << std::setw(static_cast<int>(name_w)) << method;
      for (const auto& d : report.datasets) {
        const auto* row = find_row(report, model, d, method);
        const std::optional<double> none;
        for (const auto& v : {row ? row->ece : none, row ? row->ece_t : none, row ? row->bs_t : none,
                              row ? row->auc : none})
          os << std::right << std::setw(cw) << cell(v);
        os << "  ";
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::string render_failure_table(const CalibrationReport& report, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::kCsv) {
    os << "model,dataset,method,attempted,evaluated,excluded,parse_failed,model_failed,judge_failed\n";
    for (const auto& r : report.rows)
      os << csv_field(r.model) << ',' << csv_field(r.dataset) << ',' << csv_field(r.method) << ',' << r.n_attempted
         << ',' << r.n_evaluated << ',' << r.n_parse_failed << ',' << status_count(r, "parse_failed") << ','
         << status_count(r, "model_failed") << ',' << status_count(r, "judge_failed") << '\n';
    return os.str();
  }
  os << std::left << std::setw(20) << "model" << std::setw(16) << "dataset" << std::setw(18) << "method"
     << std::right << std::setw(10) << "attempted" << std::setw(10) << "evaluated" << std::setw(8) << "parse"
     << std::setw(8) << "model" << std::setw(8) << "judge" << '\n';
  for (const auto& r : report.rows)
    os << std::left << std::setw(20) << r.model << std::setw(16) << r.dataset << std::setw(18) << r.method
       << std::right << std::setw(10) << r.n_attempted << std::setw(10) << r.n_evaluated << std::setw(8)
       << status_count(r, "parse_failed") << std::setw(8) << status_count(r, "model_failed") << std::setw(8)
       << status_count(r, "judge_failed") << '\n';
  return os.str();
}

std::string render_usage(const CalibrationReport& report, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::kCsv) os << "model,dataset,method,expression,count\n";
  for (const auto& r : report.rows) {
    if (r.expression_usage.empty()) continue;
    if (format == ReportFormat::kCsv) {
      for (const auto& [e, n] : r.expression_usage)
        os << csv_field(r.model) << ',' << csv_field(r.dataset) << ',' << csv_field(r.method) << ','
           << csv_field(e) << ',' << n << '\n';
      continue;
    }
    os << r.model << " / " << r.dataset << " / " << r.method << '\n';
    for (const auto& [e, n] : r.expression_usage) os << "  " << std::left << std::setw(20) << e << n << '\n';
  }
  return os.str();
}

std::string render_diagram_jsonl(const CalibrationReport& report) {
  std::string out;
  for (const auto& r : report.rows) {
    for (std::size_t i = 0; i < r.bins.size(); ++i) {
      const auto& b = r.bins[i];
      json j{{"dataset", r.dataset}, {"model", r.model},   {"method", r.method},
             {"bin", i},             {"lower", b.lower},   {"upper", b.upper},
             {"count", b.count},     {"mean_confidence", opt(b.mean_confidence)},
             {"mean_accuracy", opt(b.mean_accuracy)}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::string render_diagram_csv(const CalibrationReport& report) {
  std::ostringstream os;
  os << "dataset,model,method,bin,lower,upper,count,mean_confidence,mean_accuracy\n";
  for (const auto& r : report.rows) {
    for (std::size_t i = 0; i < r.bins.size(); ++i) {
      const auto& b = r.bins[i];
      auto c = [](const std::optional<double>& v) { return v ? cell(v, 6) : std::string(); };
      os << csv_field(r.dataset) << ',' << csv_field(r.model) << ',' << csv_field(r.method) << ',' << i << ','
         << cell(b.lower, 6) << ',' << cell(b.upper, 6) << ',' << b.count << ',' << c(b.mean_confidence) << ','
         << c(b.mean_accuracy) << '\n';
    }
  }
  return os.str();
}

std::vector<std::filesystem::path> write_report(const CalibrationReport& report, ReportFormat format,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string ext = format == ReportFormat::kCsv ? ".csv" : ".txt";
  const std::vector<std::pair<std::string, std::string>> files = {
      {"metrics" + ext, render_metrics_table(report, format)},
      {"failures" + ext, render_failure_table(report, format)},
      {"expression_usage" + ext, render_usage(report, format)},
      {"reliability.jsonl", render_diagram_jsonl(report)},
      {"reliability.csv", render_diagram_csv(report)},
      {"report.json", report.to_json() + "\n"},
  };
  std::vector<std::filesystem::path> out;
  for (const auto& [name, content] : files) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << content;
    out.push_back(path);
  }
  return out;
}

}  // namespace verbcal
