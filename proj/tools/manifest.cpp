#include "manifest.hpp"

#include "opls/csv.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <stdexcept>

namespace opls::cli {

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(csv::read_file(path)); }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

std::string to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["arguments"] = m.arguments;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed;
    j["threads"] = m.threads;
    auto pairs = [](const std::vector<std::pair<std::string, std::string>>& v, const char* key,
                    const char* value) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [a, b] : v) {
            arr.push_back({{key, a}, {value, b}});
        }
        return arr;
    };
    j["inputs"] = pairs(m.inputs, "path", "sha256");
    j["settings"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.settings) {
        j["settings"][k] = v;
    }
    j["outputs"] = pairs(m.outputs, "file", "sha256");
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    return j.dump(2) + "\n";
}

} // namespace opls::cli
