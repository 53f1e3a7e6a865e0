#include "citerec/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include <json.hpp>

#include "citerec/util.hpp"

namespace citerec {

void RunManifest::add_config(std::string key, std::string value, std::string source) {
    config.push_back({std::move(key), std::move(value), std::move(source)});
}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs.push_back({path.string(), file_digest_hex(path)});
}

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs.push_back(path.string());
}

std::string RunManifest::run_id() const {
    std::uint64_t h = fnv1a64(command);
    for (const auto& entry : config) {
        h = fnv1a64(entry.key, h);
        h = fnv1a64("=", h);
        h = fnv1a64(entry.value, h);
        h = fnv1a64("\x1f", h);
    }
    for (const auto& input : inputs) {
        h = fnv1a64(input.digest, h);
        h = fnv1a64("\x1f", h);
    }
    return to_hex(h);
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["run_id"] = run_id();
    j["command"] = command;
    j["config"] = nlohmann::ordered_json::array();
    for (const auto& entry : config) {
        j["config"].push_back(
            {{"key", entry.key}, {"value", entry.value}, {"source", entry.source}});
    }
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& input : inputs)
        j["inputs"].push_back({{"path", input.path}, {"digest", input.digest}});
    j["outputs"] = outputs;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
    write_file_atomic(path, to_json());
}

std::string iso8601_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace citerec
