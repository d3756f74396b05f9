// lftrc: batch front end for analysis, synthesis, certificate checks and
// sampling. Exit codes: 0 success, 1 usage or input error, 2 negative
// verdict (infeasible, below threshold, failed synthesis, violation found).

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "lft/errors.h"
#include "lft/json_io.h"
#include "lft/oracle.h"
#include "lft/synth.h"

namespace {

using lft::Json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitVerdict = 2;

struct Common {
  std::string plant;
  double tol = 1e-7;
  std::string out;
  std::uint64_t seed = 1;
  bool verbose = false;
};

lft::SolverOptions Solver(const Common& c) {
  lft::SolverOptions o;
  o.margin_tol = c.tol;
  o.verbose = c.verbose;
  return o;
}

void Note(const Common& c, const std::string& msg) {
  if (c.verbose) std::cerr << msg << "\n";
}

// "static", "unconstrained" or a comma list of integers and '*'.
lft::ControllerDimSpec ParseDims(const std::string& text,
                                 const lft::BlockStructure& s) {
  if (text == "static") return lft::StaticDims(s);
  if (text == "unconstrained") return lft::UnconstrainedDims(s);
  lft::ControllerDimSpec dims;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "*") {
      dims.push_back(std::nullopt);
      continue;
    }
    size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 0) {
      throw lft::FormatError("--dims: bad entry '" + item + "'");
    }
    dims.push_back(v);
  }
  if (static_cast<int>(dims.size()) != s.num_blocks()) {
    throw lft::DimensionError("--dims: one entry per block expected");
  }
  return dims;
}

// A controller file holds a controller document or a synthesis outcome.
lft::Controller LoadController(const std::string& path,
                               const lft::PartitionedSystem& plant) {
  const Json j = lft::ReadJsonFile(path);
  if (j.contains("AK")) return lft::ControllerFromJson(j, plant);
  if (j.contains("controller") && j.at("controller").is_object()) {
    return lft::ControllerFromJson(j.at("controller"), plant);
  }
  throw lft::FormatError("'" + path + "' holds no controller");
}

// A certificate file holds a certificate, an analysis report or a synthesis
// outcome; for outcomes the closed-loop certificate is taken when a
// controller is supplied.
lft::Certificate LoadCertificate(const std::string& path, bool closed_loop) {
  const Json j = lft::ReadJsonFile(path);
  if (j.contains("kind")) return lft::CertificateFromJson(j);
  const char* key = closed_loop && j.contains("closed_loop") &&
                            j.at("closed_loop").is_object()
                        ? "closed_loop"
                        : "certificate";
  if (j.contains(key) && j.at(key).is_object()) {
    return lft::CertificateFromJson(j.at(key));
  }
  throw lft::FormatError("'" + path + "' holds no certificate");
}

int Analyze(const Common& c, const std::string& mode) {
  const lft::PartitionedSystem plant =
      lft::PlantFromJson(lft::ReadJsonFile(c.plant));
  const lft::AnalysisReport r =
      mode == "performance"
          ? lft::CheckQPerformance(plant.PerformanceModel(), Solver(c))
          : lft::CheckQStability(plant.A, plant.structure, Solver(c));
  Note(c, "margin " + std::to_string(r.margin));
  if (r.feasible) {
    Json doc = lft::ToJson(r.certificate);
    doc["scaled_norm"] =
        std::isfinite(r.scaled_norm) ? Json(r.scaled_norm) : Json(nullptr);
    lft::WriteJson(lft::Document(std::move(doc)), c.out);
    return kExitOk;
  }
  lft::WriteJson(lft::Document(lft::ToJson(r)), c.out);
  return kExitVerdict;
}

int Synthesize(const Common& c, const std::string& goal_text,
               const std::string& dims_text, const std::string& preset) {
  const lft::PartitionedSystem plant =
      lft::PlantFromJson(lft::ReadJsonFile(c.plant));
  const lft::Goal goal = goal_text == "performance" ? lft::Goal::kPerformance
                                                    : lft::Goal::kStabilization;
  lft::ControllerDimSpec dims;
  if (!preset.empty()) {
    if (!dims_text.empty()) {
      throw std::invalid_argument("--dims and --preset are exclusive");
    }
    dims = lft::ApplicationPreset(preset == "lpv"
                                      ? lft::PresetKind::kLpv
                                      : lft::PresetKind::kStructuredUncertainty,
                                  plant.structure);
  } else {
    dims = ParseDims(dims_text.empty() ? "unconstrained" : dims_text,
                     plant.structure);
  }
  lft::SynthesisOptions opts;
  opts.solver = Solver(c);
  const lft::SynthesisOutcome o = lft::Synthesize(plant, goal, dims, opts);
  Note(c, std::string("status ") + lft::ToString(o.status) + ": " + o.message);
  lft::WriteJson(lft::Document(lft::ToJson(o)), c.out);
  return o.success() ? kExitOk : kExitVerdict;
}

int CheckCert(const Common& c, const std::string& cert_path,
              const std::string& controller_path) {
  const lft::PartitionedSystem plant =
      lft::PlantFromJson(lft::ReadJsonFile(c.plant));
  std::optional<lft::Controller> k;
  if (!controller_path.empty()) k = LoadController(controller_path, plant);
  const lft::Certificate cert = LoadCertificate(cert_path, k.has_value());
  const double margin = lft::CertificateMargin(cert, plant, k ? &*k : nullptr);
  const bool passes = margin >= c.tol;
  Json doc{{"margin", margin},
           {"recorded_margin",
            std::isfinite(cert.margin) ? Json(cert.margin) : Json(nullptr)},
           {"tol", c.tol},
           {"passes", passes},
           {"theorem", cert.source},
           {"closed_loop", cert.closed_loop}};
  lft::WriteJson(lft::Document(std::move(doc)), c.out);
  return passes ? kExitOk : kExitVerdict;
}

int Sample(const Common& c, const std::string& controller_path, int samples,
           double radius) {
  const lft::PartitionedSystem plant =
      lft::PlantFromJson(lft::ReadJsonFile(c.plant));
  lft::OracleReport r;
  if (!controller_path.empty()) {
    const lft::Controller k = LoadController(controller_path, plant);
    r = lft::ClosedLoopGainCheck(plant, k, samples, c.seed, radius);
  } else if (plant.p1() > 0 || plant.q1() > 0) {
    r = lft::SampleRobustPerformance(plant.PerformanceModel(), samples, c.seed,
                                     radius);
  } else {
    r = lft::SampleRobustStability(plant.A, plant.structure, samples, c.seed,
                                   radius);
  }
  Note(c, r.Verdict());
  lft::WriteJson(lft::Document(lft::ToJson(r)), c.out);
  return r.violated() ? kExitVerdict : kExitOk;
}

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_option("--plant", c.plant, "plant JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--tol", c.tol, "margin threshold")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output file (default: standard output)");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_flag("--verbose", c.verbose, "progress on standard error");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust analysis and synthesis for LFT models"};
  app.require_subcommand(1);

  Common common;
  std::string mode = "stability", goal = "stabilization", dims, preset;
  std::string cert, controller;
  int samples = lft::kDefaultSamples;
  double radius = 1.0;

  auto* analyze = app.add_subcommand("analyze", "structured Lyapunov analysis");
  AddCommon(analyze, common);
  analyze->add_option("--mode", mode)
      ->check(CLI::IsMember({"stability", "performance"}));

  auto* synth = app.add_subcommand("synthesize", "output-feedback synthesis");
  AddCommon(synth, common);
  synth->add_option("--goal", goal)
      ->check(CLI::IsMember({"stabilization", "performance"}));
  synth->add_option(
      "--dims", dims,
      "static | unconstrained | k1,k2,... ('*' leaves a block free)");
  synth->add_option("--preset", preset)
      ->check(CLI::IsMember({"structured-uncertainty", "lpv"}));

  auto* check = app.add_subcommand("check-cert", "re-verify a certificate");
  AddCommon(check, common);
  check->add_option("--cert", cert)->required()->check(CLI::ExistingFile);
  check->add_option("--controller", controller)->check(CLI::ExistingFile);

  auto* sample = app.add_subcommand("sample", "sampling-based falsification");
  AddCommon(sample, common);
  sample->add_option("--controller", controller)->check(CLI::ExistingFile);
  sample->add_option("--samples", samples)->check(CLI::NonNegativeNumber);
  sample->add_option("--radius", radius)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0; every other parse error is an input error.
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*analyze) return Analyze(common, mode);
    if (*synth) return Synthesize(common, goal, dims, preset);
    if (*check) return CheckCert(common, cert, controller);
    if (*sample) return Sample(common, controller, samples, radius);
  } catch (const lft::SolverTimeoutError& e) {
    std::cerr << "lftrc: " << e.what() << " (best margin " << e.best_margin()
              << ")\n";
    return kExitVerdict;
  } catch (const std::exception& e) {
    std::cerr << "lftrc: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
