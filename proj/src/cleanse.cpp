#include "pmcal/cleanse.hpp"

#include "pmcal/error.hpp"

#include <cmath>
#include <sstream>

namespace pmcal::cleanse {

void CleanseConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("cleanse.beta must be >= 0");
    if (!(c_low >= 0.0) || !std::isfinite(c_low)) throw ConfigError("cleanse.c_low must be >= 0");
    if (!(h_low >= 0.0 && h_low <= 100.0)) throw ConfigError("cleanse.h_low must lie in [0,100]");
    if (window_size < 3) throw ConfigError("cleanse.window_size must be >= 3");
}

RatioWindow::RatioWindow(std::vector<double> ratios) : ratios_(ratios.begin(), ratios.end()) {
    if (ratios_.size() < 3) throw DomainError("ratio window needs at least 3 entries");
    for (double r : ratios_) {
        if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("ratio window entries must be positive and finite");
    }
}

double RatioWindow::mean() const {
    double sum = 0.0;
    for (double r : ratios_) sum += r;
    return sum / static_cast<double>(ratios_.size());
}

double RatioWindow::sd() const {
    const double m = mean();
    double ss = 0.0;
    for (double r : ratios_) ss += (r - m) * (r - m);
    return std::sqrt(ss / static_cast<double>(ratios_.size() - 1));
}

void RatioWindow::push(double r) {
    ratios_.pop_front();
    ratios_.push_back(r);
}

std::string_view note_name(Note n) {
    switch (n) {
        case Note::None: return "";
        case Note::LowConcentration: return "low_concentration";
        case Note::UndefinedRatio: return "undefined_ratio";
        case Note::MissingRh: return "missing_rh";
        case Note::MissingPm: return "missing_pm";
    }
    return "";
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::AcceptNoUpdate: return "ACCEPT_NO_UPDATE";
        case Verdict::AcceptUpdate: return "ACCEPT_UPDATE";
        case Verdict::Reject: return "REJECT";
    }
    return "?";
}

RatioWindow init_window(std::span<const WarmupRow> warmup, const CleanseConfig& config,
                        double fallback_ratio) {
    config.validate();
    if (!(fallback_ratio > 0.0) || !std::isfinite(fallback_ratio)) {
        throw DomainError("init_window: fallback ratio must be positive");
    }
    std::vector<double> qualifying;
    for (const auto& row : warmup) {
        if (row.rh < config.h_low && row.pm25 >= config.c_low && row.pm1 > 0.0) {
            const double r = row.pm10 / row.pm1;
            if (r > 0.0 && std::isfinite(r)) qualifying.push_back(r);
        }
    }
    // Newest last; keep only the most recent window_size ratios.
    std::vector<double> ratios;
    const std::size_t take = std::min(qualifying.size(), config.window_size);
    ratios.assign(config.window_size - take, fallback_ratio);
    ratios.insert(ratios.end(), qualifying.end() - static_cast<std::ptrdiff_t>(take), qualifying.end());
    return RatioWindow(std::move(ratios));
}

CleanseDecision cleanse_step(RatioWindow& window, const PmTriple& pm, std::optional<double> rh,
                             const CleanseConfig& config) {
    CleanseDecision d;
    d.window_mean = window.mean();
    d.window_sd = window.sd();
    if (pm.pm1 > 0.0) d.ratio = pm.pm10 / pm.pm1;

    if (pm.pm25 < config.c_low) {
        d.verdict = Verdict::AcceptNoUpdate;
        d.note = Note::LowConcentration;
        return d;
    }
    if (!d.ratio || !std::isfinite(*d.ratio)) {
        d.ratio.reset();
        d.verdict = Verdict::AcceptNoUpdate;
        d.note = Note::UndefinedRatio;
        return d;
    }
    if (!rh) {
        d.verdict = Verdict::AcceptNoUpdate;
        d.note = Note::MissingRh;
        return d;
    }
    if (*rh < config.h_low || *d.ratio < d.window_mean + config.beta * d.window_sd) {
        window.push(*d.ratio);
        d.verdict = Verdict::AcceptUpdate;
        return d;
    }
    d.verdict = Verdict::Reject;
    return d;
}

CleanseResult cleanse_series(const Series& pm_series, const Series& rh_source,
                             const CleanseConfig& config, RatioWindow init) {
    config.validate();
    if (pm_series.interval != rh_source.interval) {
        std::ostringstream os;
        os << "cleanse_series: grid mismatch (" << pm_series.interval << " s vs "
           << rh_source.interval << " s)";
        throw ConfigError(os.str());
    }
    if (init.size() != config.window_size) {
        throw ConfigError("cleanse_series: initial window length differs from window_size");
    }

    CleanseResult result;
    result.cleansed.device_id = pm_series.device_id;
    result.cleansed.interval = pm_series.interval;
    RatioWindow window = std::move(init);

    for (const auto& s : pm_series.samples) {
        if (!s.valid || !s.pm1 || !s.pm25 || !s.pm10) {
            CleanseDecision d;
            d.window_mean = window.mean();
            d.window_sd = window.sd();
            d.note = Note::MissingPm;
            result.audit.push_back({s.timestamp, d});
            result.cleansed.samples.push_back(s);
            continue;
        }
        std::optional<double> rh;
        if (const Sample* r = rh_source.find(s.timestamp); r != nullptr && r->valid) rh = r->rh;

        const auto d = cleanse_step(window, {*s.pm1, *s.pm25, *s.pm10}, rh, config);
        if (d.note == Note::MissingRh) ++result.missing_rh;
        if (d.note == Note::UndefinedRatio) ++result.undefined_ratio;
        result.audit.push_back({s.timestamp, d});
        if (d.verdict == Verdict::Reject) {
            result.rejected.push_back(s.timestamp);
        } else {
            result.cleansed.samples.push_back(s);
        }
    }
    result.final_window = std::move(window);
    return result;
}

}  // namespace pmcal::cleanse
