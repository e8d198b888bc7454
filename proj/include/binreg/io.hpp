#pragma once

#include "binreg/coeff_tree.hpp"
#include "binreg/dataset.hpp"
#include "binreg/experiments.hpp"
#include "binreg/grid_function.hpp"
#include "binreg/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace binreg {

using Json = nlohmann::json;

//! Malformed input: bad file contents, schema violations, out-of-range values.
class ValidationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//! Provenance stamped into every output file.
struct Provenance
{
  std::string config_hash;
  std::uint64_t seed = 0;
};

//! FNV-1a 64 of the text, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& text);
//! Hash of the canonical (sorted-key, compact) dump.
std::string config_hash(const Json& config);

// Dataset CSV: header x_1,...,x_d,y then one observation per line. Lines
// starting with '#' are comments.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data,
                       const Provenance* prov = nullptr);

// GridFunction CSV: one header line "d,R_g", then the 2^{R_g d} values in
// flat-index order.
GridFunction read_grid_csv(const std::filesystem::path& path,
                           Interpretation interpretation = Interpretation::generic);
void write_grid_csv(const std::filesystem::path& path, const GridFunction& grid,
                    const Provenance* prov = nullptr);

Json to_json(const CoeffTree& tree);
CoeffTree coeff_tree_from_json(const Json& j);

Json to_json(const TestOutcome& outcome);
Json to_json(const ExperimentReport& report);
//! Per-replicate records as CSV with a header of column names.
void write_records_csv(const std::filesystem::path& path, const ExperimentReport& report,
                       const Provenance* prov = nullptr);

// Calibration files.
Json to_json(const CalibrationResult& result);
//! Config-level constant names set by a calibration target, e.g. "simple_C".
std::map<std::string, double> calibrated_constants(const CalibrationResult& result);
//! Reads the "constants" object of a calibration file.
std::map<std::string, double> read_calibration_constants(const std::filesystem::path& path);

//! Model from its JSON description:
//!   {"dim": 1, "f": {"type": "constant" | "sine" | "haar-series" | "bump" | "grid", ...},
//!    "g": {"type": "uniform" | "linear" | "grid", ...}, "beta": b, "gamma": g}
//! Relative grid paths resolve against base_dir. Throws ValidationError.
ModelSpec model_from_json(const Json& j, const std::filesystem::path& base_dir = {});
//! The description with every default filled in.
Json resolve_model_json(const Json& j);

//! Writes text atomically enough for our purposes: to path.tmp then rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace binreg
