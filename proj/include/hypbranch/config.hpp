#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "hypbranch/branches.hpp"
#include "hypbranch/verifier.hpp"

namespace hypbranch {

inline constexpr const char* kVersion = "0.1.0";

// JSON Schema of the run configuration.
Json config_schema();

// Fills defaults, canonicalizes words and checks every field. Errors name the
// offending field and value.
Json normalize_config(const Json& raw);

// Applies "dotted.path=value"; the value is parsed as JSON when possible and
// taken as a string otherwise. Array elements are addressed by index.
void apply_override(Json& config, const std::string& assignment);

// FNV-1a over the normalized config with the output block removed.
std::uint64_t config_hash(const Json& normalized);

GroupSpec group_spec_from(const Json& group_block);

// One node per vertex with |g| <= radius, colored by the first 𝓛 set that
// contains it (gray when none), with generator-labelled edges.
std::string export_dot(const BranchSets& sets, int radius);

struct RunResult {
    int exit_status = 0;
    Json manifest;
};

// Runs every task of a normalized config, writing reports, DOT files and
// manifest.json into the output directory. A one-line summary per task goes
// to log.
RunResult run_config(const Json& normalized, std::ostream& log);

} // namespace hypbranch
