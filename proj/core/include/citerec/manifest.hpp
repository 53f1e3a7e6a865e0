#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace citerec {

/// One resolved configuration value and where it came from.
/// source is one of "flag", "env", "file", "default".
struct ConfigEntry {
    std::string key;
    std::string value;
    std::string source;
};

struct InputDigest {
    std::string path;
    std::string digest;  // fnv1a-64 of the file bytes, 16 hex chars
};

/// Record of a single command invocation: what ran, with which resolved
/// configuration, over which inputs, producing which outputs. run_id is a
/// digest of the command, the resolved configuration values, and the input
/// digests — identical runs get identical ids.
struct RunManifest {
    std::string command;
    std::vector<ConfigEntry> config;
    std::vector<InputDigest> inputs;
    std::vector<std::string> outputs;
    std::string started_at;   // ISO-8601 UTC, e.g. 2024-05-01T12:00:00Z
    std::string finished_at;

    void add_config(std::string key, std::string value, std::string source);
    /// Digests the file at `path` and records it; throws IoError if unreadable.
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);

    std::string run_id() const;
    std::string to_json() const;  // pretty-printed, stable key order
    /// Serializes to `path` (atomic replace).
    void write(const std::filesystem::path& path) const;
};

/// Current time as an ISO-8601 UTC timestamp (second precision).
std::string iso8601_utc_now();

}  // namespace citerec
