#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "verbcal/datasets.hpp"
#include "verbcal/error.hpp"
#include "verbcal/harness.hpp"
#include "verbcal/metrics.hpp"
#include "verbcal/parsing.hpp"
#include "verbcal/scaling.hpp"
#include "verbcal/templates.hpp"

namespace py = pybind11;
using namespace verbcal;

namespace {

using Pairs = std::vector<std::pair<double, bool>>;

std::vector<ConfidencePoint> points(const std::vector<double>& confidence, const std::vector<bool>& correct) {
  if (confidence.size() != correct.size()) throw InvalidInput("confidence and correct differ in length");
  std::vector<ConfidencePoint> out(confidence.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {confidence[i], correct[i]};
  return out;
}

BinError bin_error(const std::string& mode) {
  if (mode == "squared") return BinError::kSquared;
  if (mode == "absolute") return BinError::kAbsolute;
  throw InvalidInput("mode must be 'squared' or 'absolute'");
}

MethodSpec method_from(const std::string& kind, int k, int n_samples) {
  MethodSpec m;
  m.kind = method_kind_from_string(kind);
  if (m.uses_top_k()) m.k = k;
  if (m.uses_sampling()) m.n_samples = n_samples;
  m.validate();
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Verbalized-confidence calibration: metrics, temperature scaling, parsing and the run harness.";

  auto base = py::register_exception<Error>(m, "VerbcalError", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<ParseFailure>(m, "ParseFailure", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", base.ptr());
  py::register_exception<AuthError>(m, "AuthError", base.ptr());

  m.def(
      "ece",
      [](const std::vector<double>& c, const std::vector<bool>& y, std::size_t num_bins, const std::string& mode) {
        return ece(points(c, y), num_bins, bin_error(mode));
      },
      py::arg("confidence"), py::arg("correct"), py::arg("num_bins") = kDefaultNumBins,
      py::arg("mode") = "squared");
  m.def(
      "brier", [](const std::vector<double>& c, const std::vector<bool>& y) { return brier(points(c, y)); },
      py::arg("confidence"), py::arg("correct"));
  m.def(
      "selective_auc",
      [](const std::vector<double>& c, const std::vector<bool>& y) { return selective_auc(points(c, y)); },
      py::arg("confidence"), py::arg("correct"));
  m.def(
      "entropy_score", [](const std::vector<std::size_t>& counts) { return entropy_score(counts); },
      py::arg("cluster_counts"));
  m.def(
      "reliability_bins",
      [](const std::vector<double>& c, const std::vector<bool>& y, std::size_t num_bins) {
        py::list out;
        for (const auto& b : bin_points(points(c, y), num_bins)) {
          py::dict d;
          d["lower"] = b.lower;
          d["upper"] = b.upper;
          d["count"] = b.count;
          d["mean_confidence"] = b.mean_confidence;
          d["mean_accuracy"] = b.mean_accuracy;
          out.append(d);
        }
        return out;
      },
      py::arg("confidence"), py::arg("correct"), py::arg("num_bins") = kDefaultNumBins);

  m.def("scale_confidence", &scale_confidence, py::arg("p"), py::arg("beta"));
  m.def(
      "fit_temperature",
      [](const std::vector<double>& c, const std::vector<bool>& y) { return fit_temperature(points(c, y)).beta; },
      py::arg("confidence"), py::arg("correct"));
  m.def(
      "cross_fit_metrics",
      [](const std::vector<double>& c, const std::vector<bool>& y, std::size_t num_folds, std::uint64_t seed,
         std::size_t num_bins) {
        const auto r = cross_fit_metrics(points(c, y), num_folds, seed, num_bins);
        py::dict d;
        d["ece_t"] = r.ece_t;
        d["bs_t"] = r.bs_t;
        std::vector<double> betas;
        for (const auto& t : r.temperatures) betas.push_back(t.beta);
        d["temperatures"] = betas;
        d["rotations"] = r.rotations_attempted;
        std::vector<std::string> warnings;
        for (const auto& w : r.warnings) warnings.push_back(w.rotation + ": " + w.message);
        d["warnings"] = warnings;
        return d;
      },
      py::arg("confidence"), py::arg("correct"), py::arg("num_folds") = 5, py::arg("seed"),
      py::arg("num_bins") = kDefaultNumBins);

  m.def("parse_guess", [](const std::string& s) { return parse_guess(s); }, py::arg("response"));
  m.def(
      "parse_guess_prob",
      [](const std::string& s) {
        const auto g = parse_guess_prob(s);
        return py::make_tuple(g.answer, g.probability);
      },
      py::arg("response"));
  m.def(
      "parse_topk",
      [](const std::string& s, int k) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& p : parse_topk(s, k).pairs) out.emplace_back(p.answer, p.probability);
        return out;
      },
      py::arg("response"), py::arg("k"));

  m.def(
      "render_prompt",
      [](const std::string& kind, const std::string& question, int stage, int k, int n_samples) {
        return render_prompt(method_from(kind, k, n_samples), question, stage);
      },
      py::arg("kind"), py::arg("question"), py::arg("stage") = 1, py::arg("k") = 1, py::arg("n_samples") = 10);

  m.def(
      "load_questions",
      [](const std::string& path, const std::string& format, const std::string& name) {
        py::list out;
        for (const auto& q : load_questions(path, dataset_format_from_string(format), name)) {
          py::dict d;
          d["id"] = q.id;
          d["question"] = q.text;
          d["gold"] = q.gold;
          d["aliases"] = q.aliases;
          d["dataset"] = q.dataset;
          out.append(d);
        }
        return out;
      },
      py::arg("path"), py::arg("format") = "canonical", py::arg("name") = "");
  m.def(
      "sample_ids",
      [](const std::vector<std::string>& ids, std::size_t count, std::uint64_t seed) {
        std::vector<Question> qs;
        for (const auto& id : ids) qs.push_back({id, "", "", {}, ""});
        std::vector<std::string> out;
        for (const auto& q : sample_eval_set(qs, count, seed)) out.push_back(q.id);
        return out;
      },
      py::arg("ids"), py::arg("count"), py::arg("seed"));

  m.def(
      "run",
      [](const std::string& config_path) {
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run(RunConfig::load(config_path));
        }
        py::dict d;
        d["tasks"] = s.tasks;
        d["skipped_existing"] = s.skipped_existing;
        d["written"] = s.written;
        d["failed"] = s.failed;
        return d;
      },
      py::arg("config_path"));
  m.def(
      "score_json",
      [](const std::string& config_path) {
        const auto config = RunConfig::load(config_path);
        return score(read_manifest(config.manifest_path()), config).to_json();
      },
      py::arg("config_path"));
  m.def(
      "metrics_table",
      [](const std::string& report_json, const std::string& format) {
        return render_metrics_table(CalibrationReport::from_json(report_json), report_format_from_string(format));
      },
      py::arg("report_json"), py::arg("format") = "text");
}
