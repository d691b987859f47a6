#pragma once

#include "pmcal/statcore.hpp"
#include "pmcal/timeseries.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcal::eval {

inline constexpr double kDefaultFloor = 3.0;     // ug/m^3
inline constexpr double kBiasGoal = 10.0;        // percent, two-sided
inline constexpr double kPrecisionGoal = 10.0;   // percent
inline constexpr double kCvRmsGoal = 15.0;       // percent
inline constexpr double kCvRmsRangeLow = 3.0;    // ug/m^3
inline constexpr double kCvRmsRangeHigh = 200.0; // ug/m^3
inline constexpr std::size_t kSmallSample = 30;

struct RelErrorSet {
    std::vector<double> values;  // percent
    std::size_t n = 0;
    double floor = kDefaultFloor;
};

/// d_i = 100 (x_i - y_i) / y_i over pairs where both x_i and y_i reach the floor.
RelErrorSet relative_errors(const CollocatedPairs& pairs, double floor = kDefaultFloor);

struct BiasResult {
    double center = 0.0;
    double half_width = 0.0;
    bool passes = false;
    std::size_t n = 0;
    bool small_sample = false;  // n < 30
};

struct PrecisionResult {
    double sigma_ucl = 0.0;
    double cv_ucl = 0.0;
    bool passes = false;
    std::size_t n = 0;
};

// n < 2 throws InsufficientDataError.
BiasResult bias_pep(const RelErrorSet& errors);
BiasResult bias_pep(const stats::SampleStats& s);
PrecisionResult sigma_ucl(const RelErrorSet& errors);
PrecisionResult sigma_ucl(const stats::SampleStats& s);

struct CvRmsResult {
    double value = 0.0;
    std::size_t timestamps = 0;
    bool passes = false;
};

/// Root-mean-square of per-timestamp CVs across units. `reference` supplies pm2.5 for the
/// 3-200 ug/m^3 validity range. No valid timestamp throws InsufficientDataError.
CvRmsResult cv_rms(std::span<const FleetSet> sets, const Series& reference, std::size_t min_units = 3);

struct ComparabilityResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;
    double intercept_lower = 0.0;
    double intercept_upper = 0.0;
    bool slope_pass = false;
    bool intercept_pass = false;
    bool r_pass = false;
    double r_threshold_used = 0.93;
};

/// Intercept acceptance interval for a given slope.
std::pair<double, double> intercept_bounds(double slope);

/// Candidate (x) regressed on reference (y). Degenerate variance throws DomainError.
ComparabilityResult comparability(const CollocatedPairs& pairs, double r_threshold = 0.93);

struct LodOptions {
    double rh_max = 50.0;
    double rh_max_fallback = 80.0;
    double ref_max = 3.0;
    double k = 3.30;
};

struct LodResult {
    std::optional<double> value;
    std::size_t sample_size = 0;
    double rh_max_used = 50.0;
    std::string reason;  // set when value is absent
};

/// k x sd of calibrated values at rows with reference < ref_max and rh <= rh_max. Columns are
/// aligned row by row; rows without rh never qualify.
LodResult lod(std::span<const double> calibrated, std::span<const double> reference,
              std::span<const std::optional<double>> rh, const LodOptions& options = {});

struct EvaluateOptions {
    double floor = kDefaultFloor;
    double r_threshold = 0.93;
    std::size_t min_units = 3;
    LodOptions lod;
};

struct FleetInputs {
    std::vector<FleetSet> sets;
    Series reference;
};

struct EvaluationReport {
    std::size_t n = 0;           // all aligned pairs
    std::size_t n_filtered = 0;  // pairs passing the relative-error floor
    std::optional<stats::SampleStats> relative;  // d_i summary
    std::optional<stats::SampleStats> residual;  // x - y over every pair, no floor
    std::optional<BiasResult> bias;
    std::optional<PrecisionResult> precision;
    std::optional<ComparabilityResult> comparability;
    std::optional<LodResult> lod;
    std::optional<CvRmsResult> cv_rms;
    double completeness = 0.0;
    /// "metric: reason" for every absent metric, plus warnings.
    std::vector<std::string> notes;
};

/// `pairs.x` holds calibrated candidate values. Optional metrics that cannot be computed are left
/// absent with a note; the report itself never throws except for empty pairs.
EvaluationReport evaluate(const CollocatedPairs& pairs, double completeness_pct,
                          const EvaluateOptions& options = {},
                          const FleetInputs* fleet = nullptr);

/// Flat `key = value` block.
std::string to_key_values(const EvaluationReport& report);

std::string report_csv_header();
std::string report_csv_row(std::string_view candidate, std::string_view model,
                           const EvaluationReport& report);

}  // namespace pmcal::eval
