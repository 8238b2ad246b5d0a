#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace opls::cli {

/// Provenance record written next to every output set as manifest.json.
struct RunManifest {
    std::string command;
    std::vector<std::string> arguments; // full argv, enough to rerun
    std::string tool_version;
    unsigned long long seed = 0;
    unsigned threads = 1;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::pair<std::string, std::string>> outputs; // file name, sha256
    std::vector<std::pair<std::string, std::string>> settings;
    std::string started_at;
    std::string finished_at;
};

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// SHA-256 of a file's content; throws InputError when unreadable.
std::string file_sha256(const std::filesystem::path& path);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

std::string to_json(const RunManifest& manifest);

} // namespace opls::cli
