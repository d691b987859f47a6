#pragma once

#include "pmcal/timeseries.hpp"

#include <optional>
#include <vector>

namespace testing {

inline pmcal::Sample pm25_sample(pmcal::Timestamp t, double v) {
    pmcal::Sample s;
    s.timestamp = t;
    s.pm25 = v;
    return s;
}

inline pmcal::Series pm25_series(std::int64_t interval, pmcal::Timestamp start, const std::vector<double>& values,
                                 std::string id = "dev") {
    pmcal::Series s;
    s.device_id = std::move(id);
    s.interval = interval;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.samples.push_back(pm25_sample(start + static_cast<pmcal::Timestamp>(i) * interval, values[i]));
    }
    return s;
}

inline std::vector<double> pm25_values(const pmcal::Series& s) {
    std::vector<double> out;
    for (const auto& x : s.samples) out.push_back(x.pm25.value_or(-1.0));
    return out;
}

inline std::vector<pmcal::Timestamp> timestamps(const pmcal::Series& s) {
    std::vector<pmcal::Timestamp> out;
    for (const auto& x : s.samples) out.push_back(x.timestamp);
    return out;
}

}  // namespace testing
