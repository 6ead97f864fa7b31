#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace uprop {

struct RunOptions {
    std::string out_dir;  // overrides config + environment when set
    long long seed = -1;  // overrides the configured seed when >= 0
    int threads = 0;      // overrides when > 0
};

struct RunSummary {
    std::string name;
    std::string out_dir;
    std::vector<std::string> artifacts;
    std::vector<std::string> lines;  // human-readable summary, also printed
    bool checks_passed = true;
};

/// Thrown by config parsing/validation; `field` carries the JSON path.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_path, const std::string& msg)
        : std::runtime_error(field_path + ": " + msg), field(std::move(field_path)) {}
};

/// Parse a config from JSON text (comments allowed) and fill defaults; the
/// result is canonical: parse(serialize(parse(x))) == parse(x).
nlohmann::json parse_config(const std::string& text);
std::string serialize_config(const nlohmann::json& config);

/// Load a config by file path or bundled scenario name.
nlohmann::json load_config(const std::string& path_or_name);

/// Bundled scenario presets (name -> JSON text with comments).
const std::map<std::string, std::string>& bundled_scenarios();

/// Validate only; throws ConfigError on the first problem.
void validate_config(const nlohmann::json& config);

/// Execute the configured method pipeline, writing artifacts and a run
/// manifest under the resolved output directory.
RunSummary run_scenario(const nlohmann::json& config, const RunOptions& opts);

}  // namespace uprop
