#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pushforward/errors.hpp"
#include "pushforward/spaces.hpp"

namespace pushforward {

inline const std::vector<std::string> kExperiments{"matrix",  "orbit",   "metrics", "invariant",
                                                   "attractor", "probe", "omega",   "witness",
                                                   "entropy", "entropy_embedded", "entropy_product", "quantize"};

struct FieldError {
    std::string field;
    std::string message;
};

/// Config file could not be parsed, or failed validation.
class ConfigError : public ParameterError {
public:
    ConfigError(std::string what, std::vector<FieldError> fields = {})
        : ParameterError(std::move(what)), fields_(std::move(fields)) {}
    const std::vector<FieldError>& fields() const noexcept { return fields_; }

private:
    std::vector<FieldError> fields_;
};

/// One experiment. `system`, `system_b` and `params` hold the corresponding
/// TOML tables converted to JSON (integers stay integers).
struct ExperimentConfig {
    std::string experiment;
    std::string name;  ///< output basename; defaults to the experiment
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = ".";
    std::size_t threads = 1;
    nlohmann::json system = nlohmann::json::object();
    nlohmann::json system_b = nlohmann::json::object();
    nlohmann::json space = nullptr;  ///< optional top-level space for metrics/quantize
    nlohmann::json params = nlohmann::json::object();
};

/// Throws ConfigError carrying "line L, column C" on TOML syntax errors.
ExperimentConfig parse_config(const std::string& toml_text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every problem with the config, without computing anything.
std::vector<FieldError> validate(const ExperimentConfig& config);

/// A system from its config table, e.g. {name = "rotation", alpha = 0.1}.
SystemMap system_from_json(const nlohmann::json& spec);

struct RunSummary {
    nlohmann::json summary;             ///< config echo, headline numbers, warnings
    std::string csv;                    ///< the data file, byte-deterministic
    std::vector<std::string> warnings;  ///< one entry per warning source
    double wall_seconds = 0.0;
};

/// Validates (throwing ConfigError), then runs the experiment in memory.
RunSummary run(const ExperimentConfig& config);

/// Writes <out_dir>/<name>.csv and <out_dir>/<name>.summary.json.
void write_outputs(const ExperimentConfig& config, const RunSummary& summary);

/// 0 success, 2 validation or parameter error, 3 estimate invalid, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

/// Shortest round-trip decimal form ('.' separator, "nan"/"inf" spelled out).
std::string format_number(double v);

}  // namespace pushforward
