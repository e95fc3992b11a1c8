#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace arblens::cli {

/// Record of one CLI run, written as manifest.json next to its outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::map<std::string, std::filesystem::path> inputs;
    /// Every setting that affects the outputs, canonical JSON.
    nlohmann::json config = nlohmann::json::object();
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::filesystem::path> outputs;
    std::vector<std::pair<std::string, double>> timings_ms;
    std::string status = "ok";
    std::string error;

    /// FNV-1a over the config, the seed and the content digest of each input.
    [[nodiscard]] std::string config_digest() const;
    [[nodiscard]] nlohmann::json to_json() const;
    void write(const std::filesystem::path& dir) const;
};

/// Measures one stage and appends it to the manifest when destroyed.
class StageTimer {
public:
    StageTimer(RunManifest& m, std::string stage)
        : m_(m), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - start_;
        m_.timings_ms.emplace_back(stage_, d.count());
    }
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    RunManifest& m_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

/// FNV-1a of a file's bytes, hex encoded.
[[nodiscard]] std::string file_digest(const std::filesystem::path& path);

}  // namespace arblens::cli
