#include "tversky/io/config.hpp"

#include <filesystem>
#include <fstream>

#include "tversky/io/pgm.hpp"

namespace tversky {

using nlohmann::json;

json merge_config(const json& defaults, const json& overrides, const std::string& path_prefix) {
    if (!overrides.is_object() || !defaults.is_object()) return overrides;
    json out = defaults;
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        std::string key_path = path_prefix.empty() ? it.key() : path_prefix + "." + it.key();
        if (!defaults.contains(it.key()))
            throw std::invalid_argument("config: unknown key \"" + key_path + "\"");
        if (defaults[it.key()].is_object() && it.value().is_object())
            out[it.key()] = merge_config(defaults[it.key()], it.value(), key_path);
        else
            out[it.key()] = it.value();
    }
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config: top level must be an object in " + path);
    return j;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void echo_resolved_config(const json& resolved, const std::string& out_dir) {
    ensure_directory(out_dir);
    json with_version = resolved;
    with_version["tool_version"] = kToolVersion;
    write_file_atomic(out_dir + "/config.json", with_version.dump(2) + "\n");
}

}  // namespace tversky
