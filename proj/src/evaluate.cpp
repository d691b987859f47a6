#include "pmcal/evaluate.hpp"

#include "pmcal/config.hpp"
#include "pmcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pmcal::eval {

namespace {

stats::SampleStats require_two(const stats::SampleStats& s, const char* what) {
    if (s.n < 2 || !s.sd) {
        throw InsufficientDataError(std::string(what) + " needs at least 2 relative errors, got " +
                                    std::to_string(s.n));
    }
    return s;
}

stats::SampleStats stats_of(const RelErrorSet& errors) {
    if (errors.values.empty()) {
        return {};
    }
    return stats::sample_stats(errors.values);
}

}  // namespace

RelErrorSet relative_errors(const CollocatedPairs& pairs, double floor) {
    if (!(floor >= 0.0)) throw DomainError("relative error floor must be >= 0");
    RelErrorSet out;
    out.floor = floor;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double x = pairs.x[i];
        const double y = pairs.y[i];
        if (x >= floor && y >= floor && y > 0.0) out.values.push_back(100.0 * (x - y) / y);
    }
    out.n = out.values.size();
    return out;
}

BiasResult bias_pep(const stats::SampleStats& s) {
    require_two(s, "bias_pep");
    const double df = static_cast<double>(s.n - 1);
    BiasResult out;
    out.n = s.n;
    out.center = s.mean;
    out.half_width = stats::t_quantile(0.95, df) * *s.sd / std::sqrt(static_cast<double>(s.n));
    // The whole confidence interval has to sit inside the goal band.
    out.passes = out.center - out.half_width >= -kBiasGoal && out.center + out.half_width <= kBiasGoal;
    out.small_sample = s.n < kSmallSample;
    return out;
}

BiasResult bias_pep(const RelErrorSet& errors) { return bias_pep(stats_of(errors)); }

PrecisionResult sigma_ucl(const stats::SampleStats& s) {
    require_two(s, "sigma_ucl");
    const double df = static_cast<double>(s.n - 1);
    PrecisionResult out;
    out.n = s.n;
    out.sigma_ucl = *s.sd * std::sqrt(df / stats::chi2_quantile(0.1, df));
    out.cv_ucl = out.sigma_ucl * std::sqrt(0.5);
    out.passes = out.sigma_ucl < kPrecisionGoal;
    return out;
}

PrecisionResult sigma_ucl(const RelErrorSet& errors) { return sigma_ucl(stats_of(errors)); }

CvRmsResult cv_rms(std::span<const FleetSet> sets, const Series& reference, std::size_t min_units) {
    if (min_units < 2) throw ConfigError("cv_rms: min_units must be at least 2");
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& set : sets) {
        if (set.values.size() < min_units) continue;
        const Sample* ref = reference.find(set.timestamp);
        if (ref == nullptr || !ref->valid || !ref->pm25) continue;
        if (*ref->pm25 < kCvRmsRangeLow || *ref->pm25 > kCvRmsRangeHigh) continue;
        const auto s = stats::sample_stats(set.values);
        if (!(s.mean > 0.0)) continue;
        const double cv = 100.0 * *s.sd / s.mean;
        sum_sq += cv * cv;
        ++count;
    }
    if (count == 0) throw InsufficientDataError("cv_rms: no timestamp satisfies the validity rules");
    CvRmsResult out;
    out.value = std::sqrt(sum_sq / static_cast<double>(count));
    out.timestamps = count;
    out.passes = out.value <= kCvRmsGoal;
    return out;
}

std::pair<double, double> intercept_bounds(double slope) {
    return {std::max(-2.0, 15.05 - 17.32 * slope), std::min(2.0, 15.05 - 13.20 * slope)};
}

ComparabilityResult comparability(const CollocatedPairs& pairs, double r_threshold) {
    if (!(r_threshold >= 0.93 && r_threshold <= 0.95)) {
        throw ConfigError("comparability: r_threshold must lie in [0.93, 0.95]");
    }
    const std::size_t n = pairs.size();
    if (n < 3) throw InsufficientDataError("comparability needs at least 3 pairs");
    const double xm = stats::sample_stats(pairs.x).mean;
    const double ym = stats::sample_stats(pairs.y).mean;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        syy += (pairs.y[i] - ym) * (pairs.y[i] - ym);
        sxy += (pairs.x[i] - xm) * (pairs.y[i] - ym);
    }
    if (!(syy > 0.0)) throw DomainError("comparability: reference has zero variance");

    ComparabilityResult out;
    out.slope = sxy / syy;
    out.intercept = xm - out.slope * ym;
    out.r = stats::pearson_r(pairs.x, pairs.y);
    std::tie(out.intercept_lower, out.intercept_upper) = intercept_bounds(out.slope);
    out.slope_pass = out.slope >= 0.90 && out.slope <= 1.10;
    out.intercept_pass = out.intercept >= out.intercept_lower && out.intercept <= out.intercept_upper;
    out.r_threshold_used = r_threshold;
    out.r_pass = out.r >= r_threshold;
    return out;
}

LodResult lod(std::span<const double> calibrated, std::span<const double> reference,
              std::span<const std::optional<double>> rh, const LodOptions& options) {
    if (calibrated.size() != reference.size() || calibrated.size() != rh.size()) {
        throw ConfigError("lod: column lengths differ");
    }
    if (!(options.k > 0.0)) throw ConfigError("lod: k must be positive");

    auto select = [&](double rh_max) {
        std::vector<double> low;
        for (std::size_t i = 0; i < calibrated.size(); ++i) {
            if (reference[i] < options.ref_max && rh[i] && *rh[i] <= rh_max) low.push_back(calibrated[i]);
        }
        return low;
    };

    LodResult out;
    out.rh_max_used = options.rh_max;
    auto low = select(options.rh_max);
    if (low.empty()) {
        out.rh_max_used = options.rh_max_fallback;
        low = select(options.rh_max_fallback);
    }
    out.sample_size = low.size();
    if (low.size() < 2) {
        out.reason = "low-concentration sample has " + std::to_string(low.size()) + " rows (need 2)";
        return out;
    }
    out.value = options.k * *stats::sample_stats(low).sd;
    return out;
}

EvaluationReport evaluate(const CollocatedPairs& pairs, double completeness_pct,
                          const EvaluateOptions& options, const FleetInputs* fleet) {
    if (pairs.size() == 0) throw InsufficientDataError("evaluate: no collocated pairs");
    EvaluationReport report;
    report.n = pairs.size();
    report.completeness = completeness_pct;

    auto attempt = [&](const char* metric, auto&& body) {
        try {
            body();
        } catch (const Error& e) {
            report.notes.push_back(std::string(metric) + ": " + e.what());
        }
    };

    const auto errors = relative_errors(pairs, options.floor);
    report.n_filtered = errors.n;
    if (errors.n > 0) report.relative = stats::sample_stats(errors.values);

    std::vector<double> residuals(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) residuals[i] = pairs.x[i] - pairs.y[i];
    report.residual = stats::sample_stats(residuals);

    attempt("bias", [&] {
        report.bias = bias_pep(errors);
        if (report.bias->small_sample) {
            report.notes.push_back("bias: fewer than 30 relative errors; interval is unreliable");
        }
    });
    attempt("precision", [&] { report.precision = sigma_ucl(errors); });
    attempt("comparability", [&] { report.comparability = comparability(pairs, options.r_threshold); });
    attempt("lod", [&] {
        auto result = lod(pairs.x, pairs.y, pairs.rh, options.lod);
        if (!result.value) report.notes.push_back("lod: " + result.reason);
        report.lod = std::move(result);
    });
    if (fleet != nullptr) {
        attempt("cv_rms", [&] { report.cv_rms = cv_rms(fleet->sets, fleet->reference, options.min_units); });
    } else {
        report.notes.push_back("cv_rms: not a fleet evaluation");
    }
    return report;
}

namespace {

std::string flag(bool b) { return b ? "1" : "0"; }

template <class T, class F>
std::string field(const std::optional<T>& v, F&& get) {
    return v ? get(*v) : std::string();
}

}  // namespace

std::string to_key_values(const EvaluationReport& r) {
    std::ostringstream os;
    os << "n = " << r.n << '\n';
    os << "n_filtered = " << r.n_filtered << '\n';
    os << "completeness = " << format_double(r.completeness) << '\n';
    if (r.relative) {
        os << "relative.mean = " << format_double(r.relative->mean) << '\n';
        if (r.relative->sd) os << "relative.sd = " << format_double(*r.relative->sd) << '\n';
    }
    if (r.residual) {
        os << "residual.mean = " << format_double(r.residual->mean) << '\n';
        if (r.residual->sd) os << "residual.sd = " << format_double(*r.residual->sd) << '\n';
    }
    if (r.bias) {
        os << "bias.center = " << format_double(r.bias->center) << '\n';
        os << "bias.half_width = " << format_double(r.bias->half_width) << '\n';
        os << "bias.pass = " << flag(r.bias->passes) << '\n';
        os << "bias.rule = ci_within_goal\n";
    }
    if (r.precision) {
        os << "precision.sigma_ucl = " << format_double(r.precision->sigma_ucl) << '\n';
        os << "precision.cv_ucl = " << format_double(r.precision->cv_ucl) << '\n';
        os << "precision.pass = " << flag(r.precision->passes) << '\n';
        os << "precision.rule = sigma_ucl\n";
    }
    if (r.comparability) {
        const auto& c = *r.comparability;
        os << "comparability.slope = " << format_double(c.slope) << '\n';
        os << "comparability.intercept = " << format_double(c.intercept) << '\n';
        os << "comparability.intercept_lower = " << format_double(c.intercept_lower) << '\n';
        os << "comparability.intercept_upper = " << format_double(c.intercept_upper) << '\n';
        os << "comparability.r = " << format_double(c.r) << '\n';
        os << "comparability.r_threshold = " << format_double(c.r_threshold_used) << '\n';
        os << "comparability.slope_pass = " << flag(c.slope_pass) << '\n';
        os << "comparability.intercept_pass = " << flag(c.intercept_pass) << '\n';
        os << "comparability.r_pass = " << flag(c.r_pass) << '\n';
    }
    if (r.lod) {
        if (r.lod->value) os << "lod.value = " << format_double(*r.lod->value) << '\n';
        os << "lod.sample_size = " << r.lod->sample_size << '\n';
        os << "lod.rh_max = " << format_double(r.lod->rh_max_used) << '\n';
    }
    if (r.cv_rms) {
        os << "cv_rms.value = " << format_double(r.cv_rms->value) << '\n';
        os << "cv_rms.timestamps = " << r.cv_rms->timestamps << '\n';
        os << "cv_rms.pass = " << flag(r.cv_rms->passes) << '\n';
    }
    for (std::size_t i = 0; i < r.notes.size(); ++i) os << "note." << i << " = " << r.notes[i] << '\n';
    return os.str();
}

std::string report_csv_header() {
    return "candidate,model,n,bias_center,bias_hw,sigma_ucl,cv_ucl,cv_rms,slope,intercept,r,lod,eta,"
           "bias_pass,precision_pass,cv_rms_pass,slope_pass,intercept_pass,r_pass";
}

std::string report_csv_row(std::string_view candidate, std::string_view model, const EvaluationReport& r) {
    auto num = [](double v) { return format_double(v); };
    const std::vector<std::string> cells{
        std::string(candidate),
        std::string(model),
        std::to_string(r.n),
        field(r.bias, [&](const BiasResult& b) { return num(b.center); }),
        field(r.bias, [&](const BiasResult& b) { return num(b.half_width); }),
        field(r.precision, [&](const PrecisionResult& p) { return num(p.sigma_ucl); }),
        field(r.precision, [&](const PrecisionResult& p) { return num(p.cv_ucl); }),
        field(r.cv_rms, [&](const CvRmsResult& c) { return num(c.value); }),
        field(r.comparability, [&](const ComparabilityResult& c) { return num(c.slope); }),
        field(r.comparability, [&](const ComparabilityResult& c) { return num(c.intercept); }),
        field(r.comparability, [&](const ComparabilityResult& c) { return num(c.r); }),
        r.lod && r.lod->value ? num(*r.lod->value) : std::string(),
        num(r.completeness),
        field(r.bias, [](const BiasResult& b) { return flag(b.passes); }),
        field(r.precision, [](const PrecisionResult& p) { return flag(p.passes); }),
        field(r.cv_rms, [](const CvRmsResult& c) { return flag(c.passes); }),
        field(r.comparability, [](const ComparabilityResult& c) { return flag(c.slope_pass); }),
        field(r.comparability, [](const ComparabilityResult& c) { return flag(c.intercept_pass); }),
        field(r.comparability, [](const ComparabilityResult& c) { return flag(c.r_pass); }),
    };
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

}  // namespace pmcal::eval
