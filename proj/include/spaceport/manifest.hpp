/**
 * @file manifest.hpp
 * @brief Run manifests: command, resolved configuration, seed, version,
 *        input digests and wall-clock timestamps.
 */

#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace spaceport
{

    inline constexpr const char *version_string = "1.0.0";

    /// Lower-case hex SHA-256 of a file's bytes. Throws std::runtime_error if unreadable.
    std::string sha256_file(const std::string &path);
    std::string sha256_bytes(const std::string &bytes);

    /// UTC time formatted as ISO 8601 with a trailing Z.
    std::string utc_timestamp();

    struct RunManifest
    {
        std::string command;
        std::vector<std::string> argv;
        std::map<std::string, std::string> config; ///< every resolved option, as text
        std::uint64_t seed = 0;
        std::string version = version_string;
        std::map<std::string, std::string> input_digests; ///< path -> sha256
        std::string started;
        std::string finished;

        void add_input(const std::string &path) { input_digests[path] = sha256_file(path); }
        nlohmann::json to_json() const;
    };

    void write_manifest(const std::string &path, const RunManifest &manifest);

} // namespace spaceport
