#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mcmot/bnb.hpp"
#include "mcmot/calibration.hpp"
#include "mcmot/coupling.hpp"
#include "mcmot/marginals.hpp"
#include "mcmot/mccormick.hpp"
#include "mcmot/mot.hpp"
#include "mcmot/payoffs.hpp"
#include "mcmot/ratio.hpp"

namespace mcmot::io {

using json = nlohmann::json;

/// Parse errors surface as Schema errors carrying the file name and position.
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& doc);
std::string sha256_file(const std::string& path);

json to_json(const MarginalSystem& system);
MarginalSystem marginals_from_json(const json& doc);

json to_json(const ValidationReport& report);

json to_json(const CouplingTensor& coupling);
CouplingTensor coupling_from_json(const json& doc);

json to_json(const CapacityBounds& bounds);
CapacityBounds bounds_from_json(const json& doc);

json to_json(const PayoffSpec& payoff);
PayoffSpec payoff_from_json(const json& doc);

json to_json(const BoundResult& result);
json to_json(const BnBReport& report);

json to_json(const CalibrationResult& result, const FeasibilityDiagnosis& diagnosis, const std::string& asset);

json to_json(const RatioRecord& record);

/// CSV `maturity_index,strike,bid,ask` plus a sidecar
/// `{"<maturity>": {"forward": F, "discount": D, "extra_points": [...]}}`.
std::vector<MarketSlice> read_option_chain(const std::string& csv_path, const std::string& sidecar_path);
void write_option_chain(const std::vector<MarketSlice>& slices, const std::string& csv_path,
                        const std::string& sidecar_path);

/// Input hashes, configuration, tool version and a UTC timestamp.
json provenance(const std::vector<std::string>& input_paths, const json& config);

const char* tool_version();

}  // namespace mcmot::io
