#pragma once

// Run manifests: enough provenance to re-execute a command bit-identically
// given the same build (command line, seeds, config snapshot, input hashes).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridge/error.hpp"

namespace bridgecli {

// FNV-1a over the file bytes; stable across platforms.
inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bridge::DataError("cannot hash missing file " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    std::string config_snapshot;  // dumped run config, when one is in play
    std::vector<std::pair<std::string, std::string>> input_hashes;
    std::vector<std::string> artifacts;

    void write(const std::string& path) const {
        nlohmann::json j;
        j["command"] = command;
        j["argv"] = argv;
        j["seed"] = seed;
        j["config"] = config_snapshot;
        nlohmann::json hashes = nlohmann::json::object();
        for (const auto& [file, hash] : input_hashes) hashes[file] = hash;
        j["input_hashes"] = std::move(hashes);
        j["artifacts"] = artifacts;
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        j["timestamp_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        std::ofstream out(path);
        if (!out) throw bridge::DataError("cannot write manifest " + path);
        out << j.dump(2) << "\n";
    }
};

}  // namespace bridgecli
