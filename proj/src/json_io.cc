#include "lft/json_io.h"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "lft/errors.h"

namespace lft {

using Eigen::MatrixXd;

namespace {

// Non-finite numbers have no JSON literal; they are written as null.
Json Number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double NumberFrom(const Json& j, const std::string& what) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw FormatError(what + ": expected a number");
  return j.get<double>();
}

const Json& Field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(what + ": missing field '" + key + "'");
  }
  return j.at(key);
}

int IntFrom(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw FormatError(what + ": expected an integer");
  return j.get<int>();
}

bool OptionalBool(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) return false;
  if (!j.at(key).is_boolean()) {
    throw FormatError(what + ": '" + key + "' is not a boolean");
  }
  return j.at(key).get<bool>();
}

// Rows and columns of a nested array; columns are -1 when there are no rows.
std::pair<int, int> Shape(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of rows");
  if (j.empty()) return {0, -1};
  int cols = -1;
  for (const auto& row : j) {
    if (!row.is_array())
      throw FormatError(what + ": expected an array of rows");
    const int c = static_cast<int>(row.size());
    if (cols >= 0 && c != cols) throw FormatError(what + ": ragged rows");
    cols = c;
  }
  return {static_cast<int>(j.size()), cols};
}

MatrixXd ParseMatrix(const Json& j, const std::string& what) {
  const auto [rows, cols] = Shape(j, what);
  MatrixXd m(rows, std::max(cols, 0));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Json& x = j[r][c];
      if (!x.is_number()) throw FormatError(what + ": non-numeric entry");
      m(r, c) = x.get<double>();
    }
  }
  return m;
}

// First known dimension among candidates, 0 when all are unknown.
int FirstKnown(std::initializer_list<int> dims) {
  for (int d : dims) {
    if (d >= 0) return d;
  }
  return 0;
}

const char* KindName(CertificateKind k) {
  return k == CertificateKind::kQPerformance ? "q-performance" : "q-stability";
}

const char* ViolationName(ViolationKind k) {
  return k == ViolationKind::kPerformance ? "performance" : "stability";
}

const char* VariableKindName(VariableKind k) {
  switch (k) {
    case VariableKind::kStructured:
      return "structured";
    case VariableKind::kScalar:
      return "scalar";
    case VariableKind::kFree:
      return "free";
  }
  return "";
}

}  // namespace

Json MatrixToJson(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd MatrixFromJson(const Json& j, int rows, int cols,
                        const std::string& what) {
  MatrixXd m = ParseMatrix(j, what);
  if (m.size() == 0 && (rows == 0 || cols == 0)) return MatrixXd(rows, cols);
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  return m;
}

Json ToJson(const BlockStructure& s) {
  Json blocks = Json::array();
  for (const auto& b : s.blocks()) {
    Json jb{{"m", b.m}, {"n", b.n}};
    if (b.full) jb["full"] = true;
    blocks.push_back(std::move(jb));
  }
  Json j{{"blocks", std::move(blocks)}};
  if (s.frequency_block()) j["frequency_block"] = *s.frequency_block();
  return j;
}

BlockStructure StructureFromJson(const Json& j) {
  const Json& blocks = Field(j, "blocks", "structure");
  if (!blocks.is_array())
    throw FormatError("structure: 'blocks' is not a list");
  std::vector<Block> out;
  for (const auto& jb : blocks) {
    Block b;
    if (jb.contains("full") && jb.at("full").is_boolean() &&
        jb.at("full").get<bool>() && !jb.contains("n")) {
      b = FullBlock(IntFrom(Field(jb, "m", "structure block"), "block m"));
    } else {
      b.m = IntFrom(Field(jb, "m", "structure block"), "block m");
      b.n = IntFrom(Field(jb, "n", "structure block"), "block n");
      b.full = OptionalBool(jb, "full", "structure block");
    }
    out.push_back(b);
  }
  BlockStructure s(std::move(out));
  if (j.contains("frequency_block") && !j.at("frequency_block").is_null()) {
    const int k = IntFrom(j.at("frequency_block"), "frequency_block");
    if (k < 0 || k >= s.num_blocks()) {
      throw StructureError("frequency_block out of range");
    }
    s = s.WithFrequencyBlock(k);
  }
  return s;
}

Json ToJson(const PartitionedSystem& p) {
  return Json{{"A", MatrixToJson(p.A)},     {"B1", MatrixToJson(p.B1)},
              {"B2", MatrixToJson(p.B2)},   {"C1", MatrixToJson(p.C1)},
              {"C2", MatrixToJson(p.C2)},   {"D11", MatrixToJson(p.D11)},
              {"D12", MatrixToJson(p.D12)}, {"D21", MatrixToJson(p.D21)},
              {"D22", MatrixToJson(p.D22)}, {"structure", ToJson(p.structure)}};
}

PartitionedSystem PlantFromJson(const Json& j) {
  if (!j.is_object()) throw FormatError("plant: expected an object");
  const std::vector<const char*> names = {"A",   "B1",  "B2",  "C1", "C2",
                                          "D11", "D12", "D21", "D22"};
  std::map<std::string, std::pair<int, int>> shape;
  for (const char* name : names) {
    if (std::string(name) == "D22" && !j.contains(name)) {
      shape[name] = {0, -1};
      continue;
    }
    shape[name] = Shape(Field(j, name, "plant"), std::string("plant ") + name);
  }
  const auto rows = [&](const char* k) {
    return shape[k].first > 0 ? shape[k].first : -1;
  };
  const auto cols = [&](const char* k) { return shape[k].second; };
  const int n = FirstKnown(
      {rows("A"), cols("A"), rows("B1"), rows("B2"), cols("C1"), cols("C2")});
  const int p1 =
      FirstKnown({n > 0 ? cols("B1") : -1, cols("D11"), cols("D21")});
  const int p2 =
      FirstKnown({n > 0 ? cols("B2") : -1, cols("D12"), cols("D22")});
  const int q1 = FirstKnown({rows("C1"), rows("D11"), rows("D12")});
  const int q2 = FirstKnown({rows("C2"), rows("D21"), rows("D22")});
  PartitionedSystem p;
  p.A = MatrixFromJson(j.at("A"), n, n, "plant A");
  p.B1 = MatrixFromJson(j.at("B1"), n, p1, "plant B1");
  p.B2 = MatrixFromJson(j.at("B2"), n, p2, "plant B2");
  p.C1 = MatrixFromJson(j.at("C1"), q1, n, "plant C1");
  p.C2 = MatrixFromJson(j.at("C2"), q2, n, "plant C2");
  p.D11 = MatrixFromJson(j.at("D11"), q1, p1, "plant D11");
  p.D12 = MatrixFromJson(j.at("D12"), q1, p2, "plant D12");
  p.D21 = MatrixFromJson(j.at("D21"), q2, p1, "plant D21");
  p.D22 = j.contains("D22") ? MatrixFromJson(j.at("D22"), q2, p2, "plant D22")
                            : MatrixXd::Zero(q2, p2);
  p.structure = StructureFromJson(Field(j, "structure", "plant"));
  p.Validate();
  return p;
}

Json ToJson(const Controller& k) {
  return Json{{"AK", MatrixToJson(k.AK)}, {"BK", MatrixToJson(k.BK)},
              {"CK", MatrixToJson(k.CK)}, {"DK", MatrixToJson(k.DK)},
              {"ctrl_dims", k.ctrl_dims}, {"structure", ToJson(k.structure)}};
}

Controller ControllerFromJson(const Json& j, const PartitionedSystem& plant) {
  if (!j.is_object()) throw FormatError("controller: expected an object");
  const Json& dims = Field(j, "ctrl_dims", "controller");
  if (!dims.is_array())
    throw FormatError("controller: 'ctrl_dims' is not a list");
  std::vector<int> ctrl_dims;
  for (const auto& d : dims) ctrl_dims.push_back(IntFrom(d, "ctrl_dims entry"));
  if (static_cast<int>(ctrl_dims.size()) != plant.structure.num_blocks()) {
    throw DimensionError("controller: one dimension per plant block expected");
  }
  for (int d : ctrl_dims) {
    if (d < 0) throw DimensionError("controller: negative dimension");
  }
  Controller k;
  k.ctrl_dims = ctrl_dims;
  k.structure = ControllerStructure(plant.structure, ctrl_dims);
  const int nk = k.structure.total_dim();
  const int p2 = plant.p2(), q2 = plant.q2();
  k.AK = MatrixFromJson(Field(j, "AK", "controller"), nk, nk, "controller AK");
  k.BK = MatrixFromJson(Field(j, "BK", "controller"), nk, q2, "controller BK");
  k.CK = MatrixFromJson(Field(j, "CK", "controller"), p2, nk, "controller CK");
  k.DK = MatrixFromJson(Field(j, "DK", "controller"), p2, q2, "controller DK");
  k.Validate(plant);
  return k;
}

Json ToJson(const CommutantElement& e) {
  Json blocks = Json::array();
  for (const auto& c : e.cores()) blocks.push_back(MatrixToJson(c));
  return Json{{"structure", ToJson(e.structure())},
              {"blocks", std::move(blocks)}};
}

CommutantElement CommutantFromJson(const Json& j) {
  const BlockStructure s =
      StructureFromJson(Field(j, "structure", "commutant"));
  const Json& blocks = Field(j, "blocks", "commutant");
  if (!blocks.is_array() || static_cast<int>(blocks.size()) != s.num_blocks()) {
    throw FormatError("commutant: one core per block expected");
  }
  std::vector<MatrixXd> cores;
  for (int k = 0; k < s.num_blocks(); ++k) {
    const int n = s.block(k).n;
    cores.push_back(MatrixFromJson(blocks[k], n, n,
                                   "commutant core " + std::to_string(k + 1)));
  }
  return CommutantElement(s, std::move(cores));
}

Json ToJson(const Certificate& c) {
  Json j{{"kind", KindName(c.kind)},
         {"theorem", c.source},
         {"X", ToJson(c.X)},
         {"margin", Number(c.margin)},
         {"closed_loop", c.closed_loop}};
  if (c.Y) j["Y"] = ToJson(*c.Y);
  return j;
}

Certificate CertificateFromJson(const Json& j) {
  Certificate c;
  const Json& kind = Field(j, "kind", "certificate");
  if (kind == "q-stability") {
    c.kind = CertificateKind::kQStability;
  } else if (kind == "q-performance") {
    c.kind = CertificateKind::kQPerformance;
  } else {
    throw FormatError("certificate: unknown kind");
  }
  const Json& source = Field(j, "theorem", "certificate");
  if (!source.is_string())
    throw FormatError("certificate: 'theorem' is not a string");
  c.source = source.get<std::string>();
  c.X = CommutantFromJson(Field(j, "X", "certificate"));
  if (j.contains("Y") && !j.at("Y").is_null())
    c.Y = CommutantFromJson(j.at("Y"));
  c.margin = j.contains("margin")
                 ? NumberFrom(j.at("margin"), "certificate margin")
                 : std::numeric_limits<double>::quiet_NaN();
  c.closed_loop = OptionalBool(j, "closed_loop", "certificate");
  return c;
}

Json ToJson(const AnalysisReport& r) {
  return Json{{"feasible", r.feasible},
              {"margin", Number(r.margin)},
              {"scaled_norm", Number(r.scaled_norm)},
              {"binding_constraint", r.binding_constraint},
              {"certificate", ToJson(r.certificate)}};
}

Json ToJson(const CouplingBlockReport& r) {
  return Json{
      {"block", r.block + 1},
      {"min_eigenvalue", Number(r.min_eigenvalue)},
      {"rank", r.rank},
      {"rank_bound", r.rank_bound ? Json(*r.rank_bound) : Json(nullptr)},
      {"psd", r.psd},
      {"passes", r.passes},
      {"minimal_ctrl_dim", r.minimal_ctrl_dim}};
}

Json ToJson(const SynthesisOutcome& o) {
  Json coupling = Json::array();
  for (const auto& c : o.coupling) coupling.push_back(ToJson(c));
  Json j{{"status", ToString(o.status)},
         {"message", o.message},
         {"failing_block",
          o.failing_block ? Json(*o.failing_block + 1) : Json(nullptr)},
         {"failing_constraint", o.failing_constraint},
         {"coupling", std::move(coupling)},
         {"minimal_dims", o.minimal_dims},
         {"heuristic_iterations", o.heuristic_iterations}};
  j["certificate"] = o.certificate ? ToJson(*o.certificate) : Json(nullptr);
  j["controller"] = o.controller ? ToJson(*o.controller) : Json(nullptr);
  j["closed_loop"] = o.closed_loop ? ToJson(*o.closed_loop) : Json(nullptr);
  return j;
}

Json ToJson(const OracleReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations) {
    violations.push_back(Json{{"kind", ViolationName(v.kind)},
                              {"sample", v.sample},
                              {"delta", MatrixToJson(v.delta)},
                              {"value", Number(v.value)}});
  }
  return Json{{"samples", r.samples},
              {"radius", r.radius},
              {"seed", r.seed},
              {"verdict", r.Verdict()},
              {"worst_sigma_min", Number(r.worst_sigma_min)},
              {"max_spectral_radius", Number(r.max_spectral_radius)},
              {"worst_norm", Number(r.worst_norm)},
              {"bound_attained", r.bound_attained},
              {"violation_count", r.violation_count},
              {"violations", std::move(violations)},
              {"max_path_discrepancy", Number(r.max_path_discrepancy)},
              {"compared_samples", r.compared_samples},
              {"coupling_consistent", r.coupling_consistent}};
}

Json ToJson(const LmiProblem& p) {
  Json vars = Json::array();
  for (const auto& g : p.groups()) {
    Json jg{{"name", g.name},
            {"kind", VariableKindName(g.kind)},
            {"offset", g.offset},
            {"size", g.size}};
    if (g.kind == VariableKind::kStructured) {
      jg["structure"] = ToJson(g.structure);
    }
    if (g.kind == VariableKind::kFree) {
      jg["rows"] = g.rows;
      jg["cols"] = g.cols;
    }
    vars.push_back(std::move(jg));
  }
  Json constraints = Json::array();
  for (const auto& c : p.constraints()) {
    Json terms = Json::array();
    for (const auto& [i, coeff] : c.expr.terms) {
      terms.push_back(Json{{"variable", p.CoordinateLabel(i)},
                           {"index", i},
                           {"coefficient", MatrixToJson(coeff)}});
    }
    constraints.push_back(Json{{"label", c.label},
                               {"strict", c.strict},
                               {"constant", MatrixToJson(c.expr.constant)},
                               {"terms", std::move(terms)}});
  }
  Json fixed = Json::array();
  for (const auto& [i, v] : p.fixed()) {
    fixed.push_back(Json{{"variable", p.CoordinateLabel(i)}, {"value", v}});
  }
  return Json{{"source", p.source()},
              {"num_variables", p.num_variables()},
              {"variables", std::move(vars)},
              {"constraints", std::move(constraints)},
              {"fixed", std::move(fixed)}};
}

Json Document(Json body) {
  body["schema"] = kSchema;
  return body;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError("'" + path + "' is not valid JSON");
  if (j.is_object() && j.contains("schema") && j.at("schema") != kSchema) {
    throw FormatError("'" + path + "' has an unsupported schema");
  }
  return j;
}

void WriteJson(const Json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace lft
