#pragma once

#include "pmcal/timeseries.hpp"

#include <cstdint>
#include <vector>

namespace pmcal::synth {

/// Diurnal sinusoid: mean + amplitude * sin(2*pi*(t - phase)/86400).
struct DiurnalProfile {
    double mean = 0.0;
    double amplitude = 0.0;
    double phase_s = 0.0;

    double at(Timestamp t) const;
};

struct FogEvent {
    TimeWindow window;
    double droplet_loading = 0.0;  // ug/m^3
};

struct TruthScenario {
    Timestamp start = 0;
    std::int64_t duration_s = 86400;
    std::int64_t interval_s = 60;

    // Mean-reverting log-space process for the dry pm2.5 concentration.
    double level = 30.0;           // stationary mean, ug/m^3
    double reversion_rate = 1e-4;  // 1/s
    double volatility = 0.0;       // log-space diffusion, 1/sqrt(s)

    double pm1_fraction = 0.7;
    double pm10_ratio = 1.5;

    DiurnalProfile rh{70.0, 15.0, 0.0};
    DiurnalProfile temp{25.0, 4.0, 0.0};
    double fog_rh = 97.0;  // rh floor inside fog windows

    std::vector<FogEvent> fog_events;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    std::size_t steps() const;
};

struct SensorProfile {
    double gain = 1.0;
    double offset = 0.0;
    double noise_sd = 0.0;
    double deliquescence_rh = 60.0;
    double hygro_coeff = 0.0;
    double condensation_susceptibility = 0.0;

    void validate() const;
};

struct Truth {
    Series reference;  // dry pm1/pm25/pm10
    Series met;        // rh/temp
};

Truth generate_truth(const TruthScenario& scenario, std::uint64_t seed);

struct SensorRendering {
    Series sensor;
    /// Timestamps that received droplet injection.
    std::vector<Timestamp> fog_rows;
};

/// Largest rh fed into the growth factor, keeping it finite at saturation.
inline constexpr double kGrowthRhCap = 99.0;

double growth_factor(double rh, const SensorProfile& profile);

SensorRendering simulate_sensor(const Series& truth, const Series& met,
                                const SensorProfile& profile,
                                const std::vector<FogEvent>& fog_events, std::uint64_t seed);

}  // namespace pmcal::synth
