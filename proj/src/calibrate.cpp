#include "pmcal/calibrate.hpp"

#include "pmcal/config.hpp"
#include "pmcal/error.hpp"
#include "pmcal/statcore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pmcal::calib {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Regressors {
    double x;
    std::optional<double> rh;
    std::optional<double> temp;
};

// Row of the design matrix without the leading 1.
std::vector<double> regressor_row(ModelKind kind, const Regressors& r) {
    auto need = [](const std::optional<double>& v, const char* column) {
        if (!v) throw ConfigError(std::string("model requires the '") + column + "' column");
        return *v;
    };
    switch (kind) {
        case ModelKind::OLS: return {r.x};
        case ModelKind::MLH: return {r.x, need(r.rh, "rh")};
        case ModelKind::MLT: return {r.x, need(r.temp, "temp")};
        case ModelKind::MLHT: return {r.x, need(r.rh, "rh"), need(r.temp, "temp")};
        case ModelKind::ADV: {
            const double rh = need(r.rh, "rh");
            return {r.x, rh, r.x * rh};
        }
    }
    return {};
}

// Column-major dense matrix, just enough for a pivoted Householder QR.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
};

struct LeastSquaresSolution {
    std::vector<double> beta;
    std::vector<double> unscaled_variance;  // diag((X'X)^-1)
};

// Householder QR with column pivoting on column-equilibrated X.
LeastSquaresSolution solve_least_squares(Matrix x, std::vector<double> y) {
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;

    std::vector<double> scale(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x(i, j) * x(i, j);
        s = std::sqrt(s);
        if (s == 0.0) throw SingularDesignError("design matrix has an all-zero column");
        scale[j] = s;
        for (std::size_t i = 0; i < n; ++i) x(i, j) /= s;
    }

    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> norms(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x(i, j) * x(i, j);
        norms[j] = s;
    }

    for (std::size_t k = 0; k < p; ++k) {
        // Pivot on the largest remaining column norm.
        std::size_t best = k;
        for (std::size_t j = k + 1; j < p; ++j) {
            if (norms[j] > norms[best]) best = j;
        }
        if (best != k) {
            for (std::size_t i = 0; i < n; ++i) std::swap(x(i, k), x(i, best));
            std::swap(norms[k], norms[best]);
            std::swap(perm[k], perm[best]);
        }

        double alpha = 0.0;
        for (std::size_t i = k; i < n; ++i) alpha += x(i, k) * x(i, k);
        alpha = std::sqrt(alpha);
        if (alpha <= kRankTolerance) {
            throw SingularDesignError("design matrix is rank deficient (collinear regressors)");
        }
        if (x(k, k) > 0.0) alpha = -alpha;

        std::vector<double> v(n - k);
        for (std::size_t i = k; i < n; ++i) v[i - k] = x(i, k);
        v[0] -= alpha;
        double vnorm2 = 0.0;
        for (double e : v) vnorm2 += e * e;

        auto reflect = [&](auto&& get) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * get(i);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) get(i) -= f * v[i - k];
        };
        if (vnorm2 > 0.0) {
            for (std::size_t j = k; j < p; ++j) reflect([&](std::size_t i) -> double& { return x(i, j); });
            reflect([&](std::size_t i) -> double& { return y[i]; });
        }
        for (std::size_t j = k + 1; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += x(i, j) * x(i, j);
            norms[j] = s;
        }
    }

    // Back substitution for the permuted, scaled coefficients.
    std::vector<double> z(p);
    for (std::size_t kk = p; kk-- > 0;) {
        double s = y[kk];
        for (std::size_t j = kk + 1; j < p; ++j) s -= x(kk, j) * z[j];
        z[kk] = s / x(kk, kk);
    }

    // R^-1, upper triangular.
    Matrix rinv(p, p);
    for (std::size_t col = 0; col < p; ++col) {
        for (std::size_t kk = col + 1; kk-- > 0;) {
            double s = (kk == col) ? 1.0 : 0.0;
            for (std::size_t j = kk + 1; j <= col; ++j) s -= x(kk, j) * rinv(j, col);
            rinv(kk, col) = s / x(kk, kk);
        }
    }

    LeastSquaresSolution out;
    out.beta.assign(p, 0.0);
    out.unscaled_variance.assign(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        const std::size_t j = perm[k];
        out.beta[j] = z[k] / scale[j];
        double s = 0.0;
        for (std::size_t c = k; c < p; ++c) s += rinv(k, c) * rinv(k, c);
        out.unscaled_variance[j] = s / (scale[j] * scale[j]);
    }
    return out;
}

double linear_predictor(const FittedModel& model, const std::vector<double>& regressors) {
    double v = model.coefficients.front().value;
    for (std::size_t j = 0; j < regressors.size(); ++j) v += model.coefficients[j + 1].value * regressors[j];
    return v;
}

}  // namespace

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::OLS: return "OLS";
        case ModelKind::MLH: return "MLH";
        case ModelKind::MLT: return "MLT";
        case ModelKind::MLHT: return "MLHT";
        case ModelKind::ADV: return "ADV";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (ModelKind k : {ModelKind::OLS, ModelKind::MLH, ModelKind::MLT, ModelKind::MLHT, ModelKind::ADV}) {
        if (model_name(k) == upper) return k;
    }
    throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::vector<std::string> coefficient_names(ModelKind kind) {
    switch (kind) {
        case ModelKind::OLS: return {"intercept", "x"};
        case ModelKind::MLH: return {"intercept", "x", "rh"};
        case ModelKind::MLT: return {"intercept", "x", "temp"};
        case ModelKind::MLHT: return {"intercept", "x", "rh", "temp"};
        case ModelKind::ADV: return {"intercept", "x", "rh", "x_rh"};
    }
    return {};
}

bool needs_rh(ModelKind kind) {
    return kind == ModelKind::MLH || kind == ModelKind::MLHT || kind == ModelKind::ADV;
}

bool needs_temp(ModelKind kind) { return kind == ModelKind::MLT || kind == ModelKind::MLHT; }

double FittedModel::coefficient(std::string_view name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return c.value;
    }
    throw ConfigError("model has no coefficient '" + std::string(name) + "'");
}

FittedModel fit(ModelKind kind, const CollocatedPairs& pairs) {
    const std::size_t n = pairs.size();
    const auto names = coefficient_names(kind);
    const std::size_t p = names.size();
    if (needs_rh(kind) && !pairs.has_rh()) {
        throw ConfigError(std::string(model_name(kind)) + " requires the 'rh' column for every row");
    }
    if (needs_temp(kind) && !pairs.has_temp()) {
        throw ConfigError(std::string(model_name(kind)) + " requires the 'temp' column for every row");
    }
    if (n < p + 2) {
        std::ostringstream os;
        os << model_name(kind) << " fit needs at least " << p + 2 << " rows, got " << n;
        throw InsufficientDataError(os.str());
    }

    Matrix design(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = regressor_row(kind, {pairs.x[i], pairs.rh[i], pairs.temp[i]});
        design(i, 0) = 1.0;
        for (std::size_t j = 0; j < row.size(); ++j) design(i, j + 1) = row[j];
    }
    const auto solution = solve_least_squares(design, pairs.y);

    FittedModel model;
    model.kind = kind;
    model.n = n;
    for (std::size_t j = 0; j < p; ++j) model.coefficients.push_back({names[j], solution.beta[j], 0.0});

    std::vector<double> residuals(n);
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fitted = 0.0;
        for (std::size_t j = 0; j < p; ++j) fitted += design(i, j) * solution.beta[j];
        residuals[i] = pairs.y[i] - fitted;
        ssr += residuals[i] * residuals[i];
    }
    const double dof = static_cast<double>(n - p);
    model.residual_sd = std::sqrt(ssr / dof);

    const double t = stats::t_quantile(0.975, dof);
    for (std::size_t j = 0; j < p; ++j) {
        model.coefficients[j].half_width = t * model.residual_sd * std::sqrt(solution.unscaled_variance[j]);
    }

    const double y_mean = stats::sample_stats(pairs.y).mean;
    double sst = 0.0;
    for (double v : pairs.y) sst += (v - y_mean) * (v - y_mean);
    model.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 1.0;

    model.x_mean = stats::sample_stats(pairs.x).mean;
    for (double v : pairs.x) model.x_sxx += (v - model.x_mean) * (v - model.x_mean);

    auto& diag = model.diagnostics;
    diag.residual_mean = stats::sample_stats(residuals).mean;
    double lag = 0.0;
    double diff2 = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        lag += residuals[i] * residuals[i - 1];
        diff2 += (residuals[i] - residuals[i - 1]) * (residuals[i] - residuals[i - 1]);
    }
    diag.lag1_autocorrelation = ssr > 0.0 ? lag / ssr : kNaN;
    diag.durbin_watson = ssr > 0.0 ? diff2 / ssr : kNaN;
    return model;
}

double predict(const FittedModel& model, double x, std::optional<double> rh, std::optional<double> temp) {
    return linear_predictor(model, regressor_row(model.kind, {x, rh, temp}));
}

std::vector<double> predict(const FittedModel& model, const CollocatedPairs& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out.push_back(predict(model, pairs.x[i], pairs.rh[i], pairs.temp[i]));
    }
    return out;
}

std::vector<PredictionBound> prediction_bounds(const FittedModel& model, std::span<const double> x_grid,
                                               double level) {
    if (model.kind != ModelKind::OLS) {
        throw ConfigError("prediction bounds are only supported for OLS models");
    }
    if (!(level > 0.0 && level < 1.0)) throw DomainError("prediction level must lie in (0,1)");
    if (model.n < 3 || !(model.x_sxx > 0.0)) throw InsufficientDataError("model lacks spread in x");
    const double t = stats::t_quantile(0.5 * (1.0 + level), static_cast<double>(model.n - 2));
    const double inv_n = 1.0 / static_cast<double>(model.n);
    std::vector<PredictionBound> out;
    out.reserve(x_grid.size());
    for (double x : x_grid) {
        const double fit_value = predict(model, x);
        const double dx = x - model.x_mean;
        const double hw = t * model.residual_sd * std::sqrt(1.0 + inv_n + dx * dx / model.x_sxx);
        out.push_back({x, fit_value, fit_value - hw, fit_value + hw});
    }
    return out;
}

std::map<std::string, FittedModel> fleet_calibrate(
    const FittedModel& unitwise_model, const std::map<std::string, ZeroAirSamples>& zero_samples) {
    std::map<std::string, FittedModel> out;
    for (const auto& [device, zero] : zero_samples) {
        if (zero.readings.empty()) {
            throw InsufficientDataError("fleet_calibrate: device '" + device + "' has no zero-air samples");
        }
        const double mean_reading = stats::sample_stats(zero.readings).mean;
        FittedModel personal = unitwise_model;
        personal.coefficients.front().value = 0.0;
        const double shared_terms = predict(personal, mean_reading, zero.rh, zero.temp);
        personal.coefficients.front().value = -shared_terms;
        personal.coefficients.front().half_width = kNaN;
        out.emplace(device, std::move(personal));
    }
    return out;
}

std::string serialize(const FittedModel& model) {
    std::ostringstream os;
    os << "kind = " << model_name(model.kind) << '\n';
    os << "n = " << model.n << '\n';
    for (const auto& c : model.coefficients) {
        os << "coef." << c.name << " = " << format_double(c.value) << '\n';
        os << "coef." << c.name << ".half_width = " << format_double(c.half_width) << '\n';
    }
    os << "r_squared = " << format_double(model.r_squared) << '\n';
    os << "residual_sd = " << format_double(model.residual_sd) << '\n';
    os << "x_mean = " << format_double(model.x_mean) << '\n';
    os << "x_sxx = " << format_double(model.x_sxx) << '\n';
    os << "diag.residual_mean = " << format_double(model.diagnostics.residual_mean) << '\n';
    os << "diag.lag1_autocorrelation = " << format_double(model.diagnostics.lag1_autocorrelation) << '\n';
    os << "diag.durbin_watson = " << format_double(model.diagnostics.durbin_watson) << '\n';
    return os.str();
}

FittedModel parse_model(std::string_view text) {
    const KeyValueMap kv(parse_key_values(text));
    FittedModel model;
    model.kind = parse_model_kind(kv.require("kind"));
    model.n = static_cast<std::size_t>(parse_integer(kv.require("n"), "n"));
    for (const auto& name : coefficient_names(model.kind)) {
        const std::string key = "coef." + name;
        model.coefficients.push_back({name, parse_double(kv.require(key), key),
                                      parse_double(kv.require(key + ".half_width"), key + ".half_width")});
    }
    model.r_squared = parse_double(kv.require("r_squared"), "r_squared");
    model.residual_sd = parse_double(kv.require("residual_sd"), "residual_sd");
    model.x_mean = parse_double(kv.require("x_mean"), "x_mean");
    model.x_sxx = parse_double(kv.require("x_sxx"), "x_sxx");
    model.diagnostics.residual_mean = parse_double(kv.require("diag.residual_mean"), "diag.residual_mean");
    model.diagnostics.lag1_autocorrelation =
        parse_double(kv.require("diag.lag1_autocorrelation"), "diag.lag1_autocorrelation");
    model.diagnostics.durbin_watson = parse_double(kv.require("diag.durbin_watson"), "diag.durbin_watson");
    return model;
}

}  // namespace pmcal::calib
