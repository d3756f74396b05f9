#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>

#include "lft/lft.h"
#include "lft/lmi.h"
#include "lft/oracle.h"
#include "lft/sdp.h"
#include "lft/structures.h"
#include "lft/synth.h"

namespace lft {

using Json = nlohmann::json;

/// Version tag carried by every top-level document.
inline constexpr char kSchema[] = "lft-robust/1";

/// Row-major nested arrays. An empty matrix is written as [] (no rows) or as
/// rows of [] (no columns).
Json MatrixToJson(const Eigen::MatrixXd& m);
/// Parses a matrix with the expected shape; [] stands for any empty shape.
/// Throws FormatError on malformed arrays and DimensionError on a shape
/// mismatch.
Eigen::MatrixXd MatrixFromJson(const Json& j, int rows, int cols,
                               const std::string& what);

/// {"blocks":[{"m":..,"n":..,"full":..}], "frequency_block":k}; the block
/// index is zero-based.
Json ToJson(const BlockStructure& s);
BlockStructure StructureFromJson(const Json& j);

Json ToJson(const PartitionedSystem& plant);
/// Dimensions are read off the matrices; D22 may be omitted (zero). Throws
/// FormatError on malformed input and DimensionError on inconsistent sizes.
PartitionedSystem PlantFromJson(const Json& j);

Json ToJson(const Controller& k);
Controller ControllerFromJson(const Json& j, const PartitionedSystem& plant);

/// {"structure":..., "blocks":[core, ...]}.
Json ToJson(const CommutantElement& e);
CommutantElement CommutantFromJson(const Json& j);

/// The tag is stored under "theorem".
Json ToJson(const Certificate& c);
Certificate CertificateFromJson(const Json& j);

Json ToJson(const AnalysisReport& r);
Json ToJson(const SynthesisOutcome& o);
Json ToJson(const OracleReport& r);
Json ToJson(const CouplingBlockReport& r);
/// Constants and coefficients with their coordinate labels, for debugging.
Json ToJson(const LmiProblem& p);

/// Adds the schema tag to a top-level document.
Json Document(Json body);
/// Reads and parses a file; a present "schema" field must match kSchema.
/// Throws FormatError.
Json ReadJsonFile(const std::string& path);
/// Writes `j` indented, or to standard output when `path` is empty or "-".
void WriteJson(const Json& j, const std::string& path);

}  // namespace lft
