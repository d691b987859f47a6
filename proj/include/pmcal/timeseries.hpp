#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcal {

/// UTC instant in whole seconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class Channel { Pm1, Pm25, Pm10, Temp, Rh, Adc };

std::string_view channel_name(Channel c);

struct Sample {
    Timestamp timestamp = 0;
    std::optional<double> pm1;
    std::optional<double> pm25;
    std::optional<double> pm10;
    std::optional<double> temp;
    std::optional<double> rh;
    std::optional<double> adc;
    bool valid = true;
    /// Number of raw samples that contributed to this one (1 unless averaged).
    std::uint32_t support = 1;

    std::optional<double>& operator[](Channel c);
    const std::optional<double>& operator[](Channel c) const;
};

/// Reasons a sample fails the physical invariants. Empty when the sample is sound.
std::vector<std::string> sample_violations(const Sample& s);

/// Marks the sample invalid if any invariant is violated. Returns true when it stays valid.
bool enforce_invariants(Sample& s);

struct Series {
    std::string device_id;
    std::int64_t interval = 60;
    std::vector<Sample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }

    /// Throws ConfigError if timestamps are not strictly increasing or off the grid phase.
    void check_grid() const;

    /// Sample at exactly `t`, or nullptr.
    const Sample* find(Timestamp t) const;

    std::size_t valid_count() const;
};

/// Half-open [start, end) window.
struct TimeWindow {
    Timestamp start = 0;
    Timestamp end = 0;

    bool contains(Timestamp t) const { return t >= start && t < end; }
    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

class IntervalMask {
public:
    IntervalMask() = default;
    explicit IntervalMask(std::vector<TimeWindow> windows);

    void add(TimeWindow w);
    bool contains(Timestamp t) const;
    const std::vector<TimeWindow>& windows() const { return windows_; }
    bool empty() const { return windows_.empty(); }

    static IntervalMask merged(const IntervalMask& a, const IntervalMask& b);

private:
    void normalize();
    std::vector<TimeWindow> windows_;
};

struct CollocatedPairs {
    std::vector<Timestamp> timestamps;
    std::vector<double> x;  // candidate
    std::vector<double> y;  // reference
    std::vector<std::optional<double>> rh;
    std::vector<std::optional<double>> temp;

    std::size_t size() const { return x.size(); }
    bool has_rh() const;
    bool has_temp() const;
    void push_back(Timestamp t, double xv, double yv, std::optional<double> rhv = {},
                   std::optional<double> tv = {});
};

Series average_interval(const Series& series, std::int64_t target_interval);

struct RepairResult {
    Series series;
    std::size_t repaired = 0;
    std::size_t dropped_leading = 0;
};

RepairResult repair_last_valid(const Series& series);

struct MaskResult {
    Series series;
    std::size_t removed = 0;
};

MaskResult apply_mask(const Series& series, const IntervalMask& mask);

struct AlignOptions {
    Channel candidate_channel = Channel::Pm25;
    Channel reference_channel = Channel::Pm25;
    bool require_rh = false;
    bool require_temp = false;
};

/// Rows for timestamps present and valid in both series; covariates come from `covariates`
/// (pass the reference itself when it carries them).
CollocatedPairs align_collocated(const Series& candidate, const Series& reference,
                                 const Series& covariates, const AlignOptions& options = {});

double completeness(const Series& series, std::span<const Timestamp> expected_schedule);

/// Grid instants start, start+interval, ... strictly below end.
std::vector<Timestamp> grid_schedule(Timestamp start, Timestamp end, std::int64_t interval);

Series unitwise_average(std::span<const Series> fleet, std::size_t min_units = 3);

/// Per-timestamp values of one channel across a fleet (used for unit-wise precision).
struct FleetSet {
    Timestamp timestamp = 0;
    std::vector<double> values;
};

std::vector<FleetSet> fleet_sets(std::span<const Series> fleet, Channel channel = Channel::Pm25);

}  // namespace pmcal
