#pragma once

#include "pmcal/calibrate.hpp"
#include "pmcal/cleanse.hpp"
#include "pmcal/evaluate.hpp"
#include "pmcal/synthgen.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pmcal {

/// Shortest decimal text that parses back to the same double ("nan", "inf" for non-finite).
std::string format_double(double v);

// Strict parsers: the whole field must be consumed. Errors name `field`.
double parse_double(std::string_view text, std::string_view field);
std::int64_t parse_integer(std::string_view text, std::string_view field);
bool parse_bool(std::string_view text, std::string_view field);

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
/// Malformed lines and duplicate keys throw ConfigError with the line number.
std::vector<KeyValue> parse_key_values(std::string_view text);

class KeyValueMap {
public:
    explicit KeyValueMap(const std::vector<KeyValue>& entries);

    const std::string* find(std::string_view key) const;
    const std::string& require(std::string_view key) const;

    /// Keys never looked up through find/require.
    std::vector<std::string> unused() const;
    /// Throws ConfigError listing every key that was never read.
    void reject_unused(std::string_view what) const;

    /// Distinct `<prefix><name>.` segments, e.g. sensor names under "sensor.".
    std::vector<std::string> sections(std::string_view prefix) const;

private:
    std::map<std::string, std::string, std::less<>> values_;
    mutable std::set<std::string, std::less<>> used_;
};

struct EvaluationConfig {
    eval::EvaluateOptions options;
    bool unitwise = true;  // add the fleet average as an extra candidate when enough units
};

struct PipelineConfig {
    std::vector<std::filesystem::path> candidates;
    std::filesystem::path reference;
    std::filesystem::path met;  // optional; covariates come from the reference when empty
    std::filesystem::path masks;  // optional
    std::int64_t average_interval = 0;  // seconds; 0 keeps the native grid
    bool repair = true;
    bool cleanse = true;
    cleanse::CleanseConfig cleanse_config;
    double fallback_ratio = cleanse::kDefaultFallbackRatio;
    std::size_t warmup_rows = 0;
    std::vector<calib::ModelKind> models{calib::ModelKind::OLS};
    EvaluationConfig evaluation;
    std::filesystem::path output_dir;
};

/// Relative paths are resolved against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir);

struct SensorSpec {
    std::string name;
    synth::SensorProfile profile;
};

struct SynthConfig {
    synth::TruthScenario scenario;
    std::vector<SensorSpec> sensors;  // a single default "candidate" when none are given
};

SynthConfig parse_synth_config(std::string_view text);

}  // namespace pmcal
