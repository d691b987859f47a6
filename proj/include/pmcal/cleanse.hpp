#pragma once

#include "pmcal/timeseries.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pmcal::cleanse {

struct CleanseConfig {
    double beta = 2.5;
    double c_low = 20.0;   // ug/m^3
    double h_low = 80.0;   // percent
    std::size_t window_size = 30;

    void validate() const;
};

inline constexpr double kDefaultFallbackRatio = 3.0;

/// FIFO of accepted pm10/pm1 ratios. Length is fixed at the configured window size.
class RatioWindow {
public:
    RatioWindow() = default;
    /// Throws DomainError unless every ratio is positive and finite and there are at least 3.
    explicit RatioWindow(std::vector<double> ratios);

    std::size_t size() const { return ratios_.size(); }
    const std::deque<double>& ratios() const { return ratios_; }
    double mean() const;
    double sd() const;

    /// Evicts the oldest ratio and appends `r`.
    void push(double r);

    friend bool operator==(const RatioWindow&, const RatioWindow&) = default;

private:
    std::deque<double> ratios_;
};

enum class Verdict { AcceptNoUpdate, AcceptUpdate, Reject };

std::string_view verdict_name(Verdict v);

enum class Note { None, LowConcentration, UndefinedRatio, MissingRh, MissingPm };

std::string_view note_name(Note n);

struct CleanseDecision {
    Verdict verdict = Verdict::AcceptNoUpdate;
    std::optional<double> ratio;
    double window_mean = 0.0;
    double window_sd = 0.0;
    Note note = Note::None;
};

struct PmTriple {
    double pm1 = 0.0;
    double pm25 = 0.0;
    double pm10 = 0.0;
};

struct WarmupRow {
    double pm1 = 0.0;
    double pm25 = 0.0;
    double pm10 = 0.0;
    double rh = 0.0;
};

RatioWindow init_window(std::span<const WarmupRow> warmup, const CleanseConfig& config,
                        double fallback_ratio = kDefaultFallbackRatio);

/// One step of the streaming ratio gate. Updates `window` in place on ACCEPT_UPDATE only.
CleanseDecision cleanse_step(RatioWindow& window, const PmTriple& pm, std::optional<double> rh,
                             const CleanseConfig& config);

struct AuditRow {
    Timestamp timestamp = 0;
    CleanseDecision decision;
};

struct CleanseResult {
    Series cleansed;
    std::vector<Timestamp> rejected;
    std::vector<AuditRow> audit;
    std::size_t missing_rh = 0;
    std::size_t undefined_ratio = 0;
    RatioWindow final_window;
};

/// Single forward pass over `pm_series`; rh is looked up by timestamp in `rh_source`.
CleanseResult cleanse_series(const Series& pm_series, const Series& rh_source,
                             const CleanseConfig& config, RatioWindow init);

}  // namespace pmcal::cleanse
