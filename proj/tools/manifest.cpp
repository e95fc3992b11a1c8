#include "manifest.hpp"

#include "arblens/error.hpp"
#include "arblens/simulator.hpp"

#include <fstream>
#include <sstream>

namespace arblens::cli {

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return fnv1a_hex(bytes.str());
}

std::string RunManifest::config_digest() const {
    nlohmann::json basis{{"command", command}, {"config", config}};
    if (seed) basis["seed"] = *seed;
    for (const auto& [name, path] : inputs) {
        basis["inputs"][name] = std::filesystem::exists(path) ? file_digest(path) : std::string("missing");
    }
    return fnv1a_hex(basis.dump());
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [name, path] : inputs) in[name] = path.string();
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, path] : outputs) out[name] = path.string();
    auto timings = nlohmann::json::array();
    for (const auto& [stage, ms] : timings_ms) timings.push_back({{"stage", stage}, {"ms", ms}});
    nlohmann::json j{{"tool", "arblens"},
                     {"version", ARBLENS_VERSION},
                     {"command", command},
                     {"args", args},
                     {"inputs", in},
                     {"config", config},
                     {"config_digest", config_digest()},
                     {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
                     {"outputs", out},
                     {"timings", timings},
                     {"status", status}};
    if (!error.empty()) j["error"] = error;
    return j;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "manifest.json");
    if (!f) throw Error(Errc::Io, "cannot write " + (dir / "manifest.json").string());
    f << to_json().dump(2) << '\n';
}

}  // namespace arblens::cli
