#pragma once

#include <string>

#include <json.hpp>

namespace tversky {

inline constexpr const char* kToolVersion = "tversky 0.1.0";

// Hierarchical JSON config. `defaults` documents every known key; keys in the
// file that do not exist in the defaults are an error (catches typos). The
// merge is recursive for objects, replace otherwise.
nlohmann::json merge_config(const nlohmann::json& defaults, const nlohmann::json& overrides,
                            const std::string& path_prefix = "");

nlohmann::json load_config_file(const std::string& path);

// Writes the fully resolved config plus the tool version into out_dir for
// provenance (config.json), atomically.
void echo_resolved_config(const nlohmann::json& resolved, const std::string& out_dir);

void ensure_directory(const std::string& path);

}  // namespace tversky
