#pragma once

#include "carpenter/construct.hpp"
#include "carpenter/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace carpenter {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

/// Operator access for a run: the diagonal of lambda unless a dense matrix is given.
struct OracleSpec {
  std::string kind = "diagonal";
  std::size_t n = 0;
  std::vector<double> entries; // row-major, dense only
};

struct RunConfig {
  std::string name;
  SequenceSpec lambda;
  SequenceSpec d;
  OracleSpec oracle;
  std::string demo; // non-empty for built-in models
  std::size_t window = 0;
  std::size_t steps = 0; // 0: no limit beyond the window
  std::optional<std::size_t> guard;
  std::size_t chain_cap = 16;
  Tolerances tolerances;
  std::uint64_t seed = 0;
};

nlohmann::json sequence_to_json(const SequenceSpec& s);
/// Accepts {"values": [...], "low": [...]} or {"generator": "poly", ...}; see README.
SequenceSpec sequence_from_json(const nlohmann::json& j);

RunConfig config_from_json(const nlohmann::json& j);
/// Fully resolved form: explicit values, so a result directory is self-contained.
nlohmann::json config_to_json(const RunConfig& c);
/// FormatError on unreadable or malformed files.
RunConfig load_config(const std::filesystem::path& path);

EntryOracle make_oracle(const RunConfig& c);
ConstructOptions make_options(const RunConfig& c);

std::string profile_csv(const DeltaProfile& profile);
std::string movelog_csv(const MoveLog& log);
MoveLog movelog_from_csv(const std::string& id, const std::string& text);
std::string vectors_csv(const std::vector<FrameVector>& vectors);
nlohmann::json transfer_plan_json(const TransferPlan& plan);
nlohmann::json transforms_json(const std::vector<TransformRecord>& transforms);
nlohmann::json report_json(const RunConfig& c, const ConstructionResult& r, const VerificationReport& v);
std::string defect_csv(const std::vector<DefectRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Writes config.json, vectors.csv, residuals.csv, moves_chain_<id>.csv,
/// transforms.json, delta_profile.csv, defect_table.csv and report.json.
void write_result_dir(const std::filesystem::path& dir, const RunConfig& c, const ConstructionResult& r,
                      const VerificationReport& v);

struct LoadedResult {
  RunConfig config;
  ConstructionResult result;
  nlohmann::json report;
};

/// FormatError when an artifact is missing or malformed. Constructed targets
/// are taken from the configured d, not from the report.
LoadedResult read_result_dir(const std::filesystem::path& dir);

} // namespace carpenter
