#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge::io {

/// All emitted records use ordered_json so key order is fixed by construction
/// order and re-serialization is byte-stable.
using Json = nlohmann::ordered_json;

std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);
std::string to_line(const Json& record);

/// 64-bit FNV-1a of a file's bytes, hex-encoded. Used in manifests.
std::string file_hash_hex(const std::filesystem::path& path);
std::size_t count_lines(const std::filesystem::path& path);

/// Plain key=value config with [section] headers. Lines starting with '#' are
/// comments. Keys are stored as "section.key" (or bare "key" before any
/// section header).
class Config {
public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Canonical serialization (sorted keys) used for the config hash.
    std::string canonical() const;
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Run manifest accompanying every generator/trainer output. Timing is
/// recorded for humans; determinism checks compare the per-output content
/// hashes, which depend only on the emitted bytes.
struct Manifest {
    std::string tool_version;
    std::string command;
    std::uint64_t global_seed = 0;
    struct Output {
        std::string path;   // basename of the emitted file
        std::size_t lines = 0;
        std::string hash;   // fnv1a64 hex of file bytes
    };
    std::vector<Output> outputs;
    std::int64_t elapsed_ms = 0;

    Json to_json() const;
    static Manifest from_json(const Json& j);

    /// Writes `<first output path>.manifest.json` next to the outputs.
    void write(const std::filesystem::path& path) const;
};

Manifest::Output hash_output(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on `jobs` threads. Results must be written into
/// index-addressed slots by the caller; the iteration order seen by any one
/// index is immaterial, so output content is independent of the job count.
void parallel_for_indexed(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace forge::io
