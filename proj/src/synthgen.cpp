#include "pmcal/synthgen.hpp"

#include "pmcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pmcal::synth {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ConfigError("invalid " + field + ": " + rule);
}

bool finite(double v) { return std::isfinite(v); }

const FogEvent* fog_at(const std::vector<FogEvent>& events, Timestamp t) {
    for (const auto& e : events) {
        if (e.window.contains(t)) return &e;
    }
    return nullptr;
}

}  // namespace

double DiurnalProfile::at(Timestamp t) const {
    return mean + amplitude * std::sin(2.0 * std::numbers::pi * (static_cast<double>(t) - phase_s) / 86400.0);
}

void TruthScenario::validate() const {
    require(interval_s > 0, "interval", "must be positive");
    require(duration_s > 0, "duration", "must be positive");
    require(duration_s % interval_s == 0, "duration", "must be a multiple of interval");
    require(level > 0.0 && finite(level), "level", "must be positive");
    require(volatility >= 0.0 && finite(volatility), "volatility", "must be non-negative");
    require(volatility == 0.0 || (reversion_rate > 0.0 && finite(reversion_rate)), "reversion_rate",
            "must be positive when volatility > 0");
    require(pm1_fraction > 0.0 && pm1_fraction <= 1.0, "pm1_fraction", "must lie in (0,1]");
    require(pm10_ratio >= 1.0 && finite(pm10_ratio), "pm10_ratio", "must be >= 1");
    require(finite(rh.mean) && finite(rh.amplitude) && finite(rh.phase_s), "rh", "profile must be finite");
    require(finite(temp.mean) && finite(temp.amplitude) && finite(temp.phase_s), "temp",
            "profile must be finite");
    require(fog_rh >= 0.0 && fog_rh <= 100.0, "fog_rh", "must lie in [0,100]");
    for (const auto& e : fog_events) {
        require(e.window.start < e.window.end, "fog window", "start must precede end");
        require(e.droplet_loading >= 0.0 && finite(e.droplet_loading), "fog loading",
                "must be non-negative");
    }
}

std::size_t TruthScenario::steps() const {
    return static_cast<std::size_t>(duration_s / interval_s);
}

void SensorProfile::validate() const {
    require(gain > 0.0 && finite(gain), "gain", "must be positive");
    require(finite(offset), "offset", "must be finite");
    require(noise_sd >= 0.0 && finite(noise_sd), "noise_sd", "must be non-negative");
    require(deliquescence_rh > 0.0 && deliquescence_rh < 100.0, "deliquescence_rh", "must lie in (0,100)");
    require(hygro_coeff >= 0.0 && finite(hygro_coeff), "hygro_coeff", "must be non-negative");
    require(condensation_susceptibility >= 0.0 && finite(condensation_susceptibility),
            "condensation_susceptibility", "must be non-negative");
}

Truth generate_truth(const TruthScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // log(c / level) follows an OU process whose stationary mean is -s^2/2, so E[c] = level.
    const double dt = static_cast<double>(scenario.interval_s);
    const double s = scenario.volatility == 0.0
                         ? 0.0
                         : scenario.volatility / std::sqrt(2.0 * scenario.reversion_rate);
    const double phi = scenario.volatility == 0.0 ? 0.0 : std::exp(-scenario.reversion_rate * dt);
    const double innovation = s * std::sqrt(1.0 - phi * phi);
    const double mu = -0.5 * s * s;

    Truth truth;
    truth.reference.device_id = "reference";
    truth.reference.interval = scenario.interval_s;
    truth.met.device_id = "met";
    truth.met.interval = scenario.interval_s;
    const std::size_t n = scenario.steps();
    truth.reference.samples.reserve(n);
    truth.met.samples.reserve(n);

    double log_ratio = mu + s * normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) log_ratio = mu + (log_ratio - mu) * phi + innovation * normal(rng);
        const Timestamp t = scenario.start + static_cast<Timestamp>(i) * scenario.interval_s;
        const double pm25 = s == 0.0 ? scenario.level : scenario.level * std::exp(log_ratio);

        Sample ref;
        ref.timestamp = t;
        ref.pm25 = pm25;
        ref.pm1 = scenario.pm1_fraction * pm25;
        ref.pm10 = scenario.pm10_ratio * pm25;
        truth.reference.samples.push_back(ref);

        Sample met;
        met.timestamp = t;
        double rh = std::clamp(scenario.rh.at(t), 0.0, 100.0);
        if (fog_at(scenario.fog_events, t) != nullptr) rh = std::max(rh, scenario.fog_rh);
        met.rh = rh;
        met.temp = scenario.temp.at(t);
        truth.met.samples.push_back(met);
    }
    return truth;
}

double growth_factor(double rh, const SensorProfile& profile) {
    if (rh < profile.deliquescence_rh) return 1.0;
    const double r = std::min(rh, kGrowthRhCap);
    return 1.0 + profile.hygro_coeff * r / (100.0 - r);
}

SensorRendering simulate_sensor(const Series& truth, const Series& met,
                                const SensorProfile& profile,
                                const std::vector<FogEvent>& fog_events, std::uint64_t seed) {
    profile.validate();
    if (truth.interval != met.interval) throw ConfigError("simulate_sensor: truth and met intervals differ");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SensorRendering out;
    out.sensor.device_id = "sensor";
    out.sensor.interval = truth.interval;
    out.sensor.samples.reserve(truth.samples.size());

    for (const auto& ts : truth.samples) {
        const Sample* ms = met.find(ts.timestamp);
        if (ms == nullptr) {
            std::ostringstream os;
            os << "simulate_sensor: no meteorology at t=" << ts.timestamp;
            throw ConfigError(os.str());
        }
        // One counter feeds all three channels, so they share the noise draw; independent draws
        // would bias pm25 upward in clean air once the size ordering is enforced.
        const double z = normal(rng);
        const double g = ms->rh ? growth_factor(*ms->rh, profile) : 1.0;

        auto render = [&](const std::optional<double>& true_value) -> std::optional<double> {
            if (!true_value) return std::nullopt;
            const double dry = std::max(0.0, profile.gain * *true_value + profile.offset + profile.noise_sd * z);
            return g * dry;
        };

        Sample s;
        s.timestamp = ts.timestamp;
        s.pm1 = render(ts.pm1);
        s.pm25 = render(ts.pm25);
        s.pm10 = render(ts.pm10);
        s.rh = ms->rh;
        s.temp = ms->temp;

        if (const FogEvent* fog = fog_at(fog_events, ts.timestamp)) {
            const double droplets = fog->droplet_loading * profile.condensation_susceptibility;
            if (droplets > 0.0) {
                if (s.pm10) *s.pm10 += droplets;
                if (s.pm25) *s.pm25 += 0.1 * droplets;
                out.fog_rows.push_back(ts.timestamp);
            }
        }
        if (s.pm1 && s.pm25) s.pm25 = std::max(*s.pm25, *s.pm1);
        if (s.pm25 && s.pm10) s.pm10 = std::max(*s.pm10, *s.pm25);
        if (s.pm1 && s.pm10) s.pm10 = std::max(*s.pm10, *s.pm1);
        enforce_invariants(s);
        out.sensor.samples.push_back(s);
    }
    return out;
}

}  // namespace pmcal::synth
