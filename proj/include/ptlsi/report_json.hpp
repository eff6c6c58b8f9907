#pragma once

#include "ptlsi/driver.hpp"
#include "ptlsi/experiments.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ptlsi {

using Json = nlohmann::ordered_json;

Json to_json(const PipelineConfig& cfg);
Json to_json(const InferenceOptions& opts);
Json to_json(const TruncationRegion& region);
Json to_json(const SyntheticSpec& spec);

/// Inference document. Wall-clock fields are omitted unless `include_timing`
/// so that a fixed input gives byte-identical output.
Json to_json(const InferenceResult& result, bool include_timing = false);

/// Command, arguments, configuration and build versions needed to re-run.
Json run_manifest(const std::string& command, const std::vector<std::string>& argv, const Json& config);

inline constexpr const char* kVersion = "0.1.0";

/// Pretty-printed document with a trailing newline.
std::string dump(const Json& doc);

} // namespace ptlsi
