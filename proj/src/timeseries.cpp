#include "pmcal/timeseries.hpp"

#include "pmcal/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

namespace pmcal {

namespace {

constexpr std::array<Channel, 6> kAllChannels{Channel::Pm1, Channel::Pm25, Channel::Pm10,
                                              Channel::Temp, Channel::Rh, Channel::Adc};

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t m) {
    return (a - floor_mod(a, m)) / m;
}

// Shifted sums: means of identical values come out exact.
struct ChannelAccumulator {
    std::array<double, 6> first{};
    std::array<double, 6> delta_sum{};
    std::array<std::uint32_t, 6> count{};

    void add(const Sample& s) {
        for (std::size_t i = 0; i < kAllChannels.size(); ++i) {
            if (const auto& v = s[kAllChannels[i]]) {
                if (count[i] == 0) first[i] = *v;
                delta_sum[i] += *v - first[i];
                ++count[i];
            }
        }
    }

    void write_means(Sample& out) const {
        for (std::size_t i = 0; i < kAllChannels.size(); ++i) {
            if (count[i] > 0) out[kAllChannels[i]] = first[i] + delta_sum[i] / count[i];
        }
    }
};

void check_phase_compatible(const Series& a, const Series& b, const char* what) {
    if (a.interval != b.interval) {
        std::ostringstream os;
        os << what << ": interval mismatch (" << a.interval << " s vs " << b.interval << " s)";
        throw ConfigError(os.str());
    }
}

}  // namespace

std::string_view channel_name(Channel c) {
    switch (c) {
        case Channel::Pm1: return "pm1";
        case Channel::Pm25: return "pm25";
        case Channel::Pm10: return "pm10";
        case Channel::Temp: return "temp";
        case Channel::Rh: return "rh";
        case Channel::Adc: return "adc";
    }
    return "?";
}

std::optional<double>& Sample::operator[](Channel c) {
    switch (c) {
        case Channel::Pm1: return pm1;
        case Channel::Pm25: return pm25;
        case Channel::Pm10: return pm10;
        case Channel::Temp: return temp;
        case Channel::Rh: return rh;
        case Channel::Adc: return adc;
    }
    return pm25;
}

const std::optional<double>& Sample::operator[](Channel c) const {
    return const_cast<Sample&>(*this)[c];
}

std::vector<std::string> sample_violations(const Sample& s) {
    std::vector<std::string> out;
    for (Channel c : kAllChannels) {
        const auto& v = s[c];
        if (v && !std::isfinite(*v)) out.push_back(std::string(channel_name(c)) + " is not finite");
    }
    for (Channel c : {Channel::Pm1, Channel::Pm25, Channel::Pm10, Channel::Adc}) {
        const auto& v = s[c];
        if (v && std::isfinite(*v) && *v < 0.0)
            out.push_back(std::string(channel_name(c)) + " is negative");
    }
    if (s.rh && std::isfinite(*s.rh) && (*s.rh < 0.0 || *s.rh > 100.0))
        out.push_back("rh outside [0,100]");
    if (s.pm1 && s.pm25 && *s.pm1 > *s.pm25) out.push_back("pm1 exceeds pm25");
    if (s.pm25 && s.pm10 && *s.pm25 > *s.pm10) out.push_back("pm25 exceeds pm10");
    if (s.pm1 && s.pm10 && *s.pm1 > *s.pm10) out.push_back("pm1 exceeds pm10");
    return out;
}

bool enforce_invariants(Sample& s) {
    if (!sample_violations(s).empty()) s.valid = false;
    return s.valid;
}

void Series::check_grid() const {
    if (interval <= 0) throw ConfigError("series interval must be positive");
    if (samples.empty()) return;
    const std::int64_t phase = floor_mod(samples.front().timestamp, interval);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Timestamp t = samples[i].timestamp;
        if (i > 0 && t <= samples[i - 1].timestamp) {
            std::ostringstream os;
            os << "series '" << device_id << "': timestamps not strictly increasing at index " << i;
            throw ConfigError(os.str());
        }
        if (floor_mod(t, interval) != phase) {
            std::ostringstream os;
            os << "series '" << device_id << "': timestamp " << t << " is off the " << interval
               << " s grid";
            throw ConfigError(os.str());
        }
    }
}

const Sample* Series::find(Timestamp t) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const Sample& s, Timestamp v) { return s.timestamp < v; });
    if (it == samples.end() || it->timestamp != t) return nullptr;
    return &*it;
}

std::size_t Series::valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.valid; }));
}

IntervalMask::IntervalMask(std::vector<TimeWindow> windows) : windows_(std::move(windows)) {
    normalize();
}

void IntervalMask::add(TimeWindow w) {
    windows_.push_back(w);
    normalize();
}

bool IntervalMask::contains(Timestamp t) const {
    auto it = std::upper_bound(windows_.begin(), windows_.end(), t,
                               [](Timestamp v, const TimeWindow& w) { return v < w.start; });
    if (it == windows_.begin()) return false;
    return std::prev(it)->contains(t);
}

IntervalMask IntervalMask::merged(const IntervalMask& a, const IntervalMask& b) {
    std::vector<TimeWindow> all = a.windows_;
    all.insert(all.end(), b.windows_.begin(), b.windows_.end());
    return IntervalMask(std::move(all));
}

void IntervalMask::normalize() {
    for (const auto& w : windows_) {
        if (!(w.start < w.end)) throw ConfigError("mask window must satisfy start < end");
    }
    std::sort(windows_.begin(), windows_.end(),
              [](const TimeWindow& l, const TimeWindow& r) { return l.start < r.start; });
    std::vector<TimeWindow> out;
    for (const auto& w : windows_) {
        if (!out.empty() && w.start <= out.back().end) {
            out.back().end = std::max(out.back().end, w.end);
        } else {
            out.push_back(w);
        }
    }
    windows_ = std::move(out);
}

bool CollocatedPairs::has_rh() const {
    return !rh.empty() && std::all_of(rh.begin(), rh.end(), [](const auto& v) { return v.has_value(); });
}

bool CollocatedPairs::has_temp() const {
    return !temp.empty() &&
           std::all_of(temp.begin(), temp.end(), [](const auto& v) { return v.has_value(); });
}

void CollocatedPairs::push_back(Timestamp t, double xv, double yv, std::optional<double> rhv,
                                std::optional<double> tv) {
    timestamps.push_back(t);
    x.push_back(xv);
    y.push_back(yv);
    rh.push_back(rhv);
    temp.push_back(tv);
}

Series average_interval(const Series& series, std::int64_t target_interval) {
    if (series.interval <= 0) throw ConfigError("series interval must be positive");
    if (target_interval <= 0 || target_interval % series.interval != 0) {
        std::ostringstream os;
        os << "target interval " << target_interval << " s is not a positive multiple of "
           << series.interval << " s";
        throw ConfigError(os.str());
    }
    Series out;
    out.device_id = series.device_id;
    out.interval = target_interval;
    if (series.samples.empty()) return out;

    const std::int64_t phase = floor_mod(series.samples.front().timestamp, series.interval);
    auto window_of = [&](Timestamp t) {
        return phase + floor_div(t - phase, target_interval) * target_interval;
    };

    std::size_t i = 0;
    const auto& in = series.samples;
    while (i < in.size()) {
        const Timestamp start = window_of(in[i].timestamp);
        ChannelAccumulator acc;
        std::uint32_t support = 0;
        for (; i < in.size() && in[i].timestamp < start + target_interval; ++i) {
            if (!in[i].valid) continue;
            acc.add(in[i]);
            ++support;
        }
        if (support == 0) continue;
        Sample s;
        s.timestamp = start;
        s.support = support;
        acc.write_means(s);
        enforce_invariants(s);
        out.samples.push_back(s);
    }
    return out;
}

RepairResult repair_last_valid(const Series& series) {
    RepairResult r;
    r.series.device_id = series.device_id;
    r.series.interval = series.interval;
    const Sample* last_valid = nullptr;
    for (const auto& s : series.samples) {
        if (s.valid) {
            r.series.samples.push_back(s);
            last_valid = &s;
            continue;
        }
        if (last_valid == nullptr) {
            ++r.dropped_leading;
            continue;
        }
        Sample copy = *last_valid;
        copy.timestamp = s.timestamp;
        r.series.samples.push_back(copy);
        ++r.repaired;
    }
    return r;
}

MaskResult apply_mask(const Series& series, const IntervalMask& mask) {
    MaskResult r;
    r.series.device_id = series.device_id;
    r.series.interval = series.interval;
    for (const auto& s : series.samples) {
        if (mask.contains(s.timestamp)) {
            ++r.removed;
        } else {
            r.series.samples.push_back(s);
        }
    }
    return r;
}

CollocatedPairs align_collocated(const Series& candidate, const Series& reference,
                                 const Series& covariates, const AlignOptions& options) {
    check_phase_compatible(candidate, reference, "align_collocated");
    CollocatedPairs pairs;
    auto ci = candidate.samples.begin();
    auto ri = reference.samples.begin();
    while (ci != candidate.samples.end() && ri != reference.samples.end()) {
        if (ci->timestamp < ri->timestamp) {
            ++ci;
            continue;
        }
        if (ri->timestamp < ci->timestamp) {
            ++ri;
            continue;
        }
        const Timestamp t = ci->timestamp;
        const auto& xv = (*ci)[options.candidate_channel];
        const auto& yv = (*ri)[options.reference_channel];
        if (ci->valid && ri->valid && xv && yv) {
            std::optional<double> rh;
            std::optional<double> temp;
            if (const Sample* cov = covariates.find(t); cov != nullptr && cov->valid) {
                rh = cov->rh;
                temp = cov->temp;
            }
            const bool keep = (!options.require_rh || rh) && (!options.require_temp || temp);
            if (keep) pairs.push_back(t, *xv, *yv, rh, temp);
        }
        ++ci;
        ++ri;
    }
    return pairs;
}

double completeness(const Series& series, std::span<const Timestamp> expected_schedule) {
    if (expected_schedule.empty()) throw DomainError("completeness: empty expected schedule");
    std::size_t hits = 0;
    for (Timestamp t : expected_schedule) {
        const Sample* s = series.find(t);
        if (s != nullptr && s->valid) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(expected_schedule.size());
}

std::vector<Timestamp> grid_schedule(Timestamp start, Timestamp end, std::int64_t interval) {
    if (interval <= 0) throw ConfigError("schedule interval must be positive");
    std::vector<Timestamp> out;
    for (Timestamp t = start; t < end; t += interval) out.push_back(t);
    return out;
}

Series unitwise_average(std::span<const Series> fleet, std::size_t min_units) {
    if (fleet.empty()) throw ConfigError("unitwise_average: empty fleet");
    if (min_units < 1) throw ConfigError("unitwise_average: min_units must be at least 1");
    for (const auto& unit : fleet) {
        check_phase_compatible(fleet.front(), unit, "unitwise_average");
        if (!unit.samples.empty() && !fleet.front().samples.empty() &&
            floor_mod(unit.samples.front().timestamp, unit.interval) !=
                floor_mod(fleet.front().samples.front().timestamp, unit.interval)) {
            throw ConfigError("unitwise_average: grid phase mismatch in '" + unit.device_id + "'");
        }
    }

    struct Slot {
        ChannelAccumulator acc;
        std::uint32_t units = 0;
    };
    std::map<Timestamp, Slot> slots;
    for (const auto& unit : fleet) {
        for (const auto& s : unit.samples) {
            if (!s.valid) continue;
            auto& slot = slots[s.timestamp];
            slot.acc.add(s);
            ++slot.units;
        }
    }

    Series out;
    out.device_id = "unitwise";
    out.interval = fleet.front().interval;
    for (const auto& [t, slot] : slots) {
        if (slot.units < min_units) continue;
        Sample s;
        s.timestamp = t;
        s.support = slot.units;
        slot.acc.write_means(s);
        enforce_invariants(s);
        out.samples.push_back(s);
    }
    return out;
}

std::vector<FleetSet> fleet_sets(std::span<const Series> fleet, Channel channel) {
    std::map<Timestamp, std::vector<double>> by_time;
    for (const auto& unit : fleet) {
        for (const auto& s : unit.samples) {
            if (s.valid && s[channel]) by_time[s.timestamp].push_back(*s[channel]);
        }
    }
    std::vector<FleetSet> out;
    out.reserve(by_time.size());
    for (auto& [t, values] : by_time) out.push_back({t, std::move(values)});
    return out;
}

}  // namespace pmcal
