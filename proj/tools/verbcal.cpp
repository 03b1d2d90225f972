#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "verbcal/datasets.hpp"
#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"

namespace fs = std::filesystem;
using namespace verbcal;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verbalized confidence elicitation and calibration scoring"};
  app.require_subcommand(1);

  std::string input, output, format = "canonical", name;
  auto* ingest = app.add_subcommand("ingest", "convert a native dataset file to canonical JSONL");
  ingest->add_option("input", input, "native dataset file")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", output, "canonical JSONL output")->required();
  ingest->add_option("-f,--format", format, "canonical | triviaqa | sciq | truthfulqa")->required();
  ingest->add_option("-n,--name", name, "dataset name stored with each question");

  std::string config_path;
  std::size_t workers = 0;
  auto* run_cmd = app.add_subcommand("run", "elicit and grade every missing record");
  run_cmd->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-w,--workers", workers, "override the worker count");

  auto* dry = app.add_subcommand("dry-run", "print projected request counts");
  dry->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  std::string manifest_path, report_path;
  auto* score_cmd = app.add_subcommand("score", "compute the calibration report from a manifest");
  score_cmd->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("-m,--manifest", manifest_path, "defaults to <output_dir>/manifest.jsonl");
  score_cmd->add_option("-o,--output", report_path, "defaults to <output_dir>/report.json");

  std::string out_dir, table_format = "text";
  auto* report_cmd = app.add_subcommand("report", "write tables, usage histograms and diagram data");
  report_cmd->add_option("report", report_path, "report.json from score")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("-o,--output-dir", out_dir)->required();
  report_cmd->add_option("-f,--format", table_format, "text | csv")->check(CLI::IsMember({"text", "csv"}));

  std::string diagram_format = "jsonl";
  auto* diagram = app.add_subcommand("diagram", "print reliability-diagram bins");
  diagram->add_option("report", report_path)->required()->check(CLI::ExistingFile);
  diagram->add_option("-f,--format", diagram_format)->check(CLI::IsMember({"jsonl", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto questions = load_questions(input, dataset_format_from_string(format), name);
      save_canonical(questions, output);
      std::cerr << "wrote " << questions.size() << " questions to " << output << '\n';
    } else if (*run_cmd) {
      auto config = RunConfig::load(config_path);
      if (workers) config.workers = workers;
      std::cout << format_projection(project_requests(config));
      const auto s = run(config);
      std::cout << "tasks " << s.tasks << ", skipped " << s.skipped_existing << ", written " << s.written
                << ", failed " << s.failed << '\n';
    } else if (*dry) {
      std::cout << format_projection(project_requests(RunConfig::load(config_path)));
    } else if (*score_cmd) {
      const auto config = RunConfig::load(config_path);
      const fs::path mpath = manifest_path.empty() ? config.manifest_path() : fs::path(manifest_path);
      const fs::path rpath = report_path.empty() ? config.output_dir / "report.json" : fs::path(report_path);
      const auto report = score(read_manifest(mpath), config);
      spit(rpath, report.to_json() + "\n");
      std::cout << render_metrics_table(report, ReportFormat::kText);
      for (const auto& row : report.rows)
        for (const auto& w : row.warnings)
          std::cerr << "warning: " << row.model << " / " << row.dataset << " / " << row.method << ": " << w << '\n';
    } else if (*report_cmd) {
      const auto report = CalibrationReport::from_json(slurp(report_path));
      for (const auto& p : write_report(report, report_format_from_string(table_format), out_dir))
        std::cout << p.string() << '\n';
    } else if (*diagram) {
      const auto report = CalibrationReport::from_json(slurp(report_path));
      std::cout << (diagram_format == "csv" ? render_diagram_csv(report) : render_diagram_jsonl(report));
    }
  } catch (const AuthError& e) {
    std::cerr << "auth error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
