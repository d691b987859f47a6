#pragma once

#include "pmcal/timeseries.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcal::calib {

/// Regressor sets: OLS {x}; MLH {x, rh}; MLT {x, temp}; MLHT {x, rh, temp}; ADV {x, rh, x*rh}.
enum class ModelKind { OLS, MLH, MLT, MLHT, ADV };

std::string_view model_name(ModelKind kind);
/// Case-insensitive; throws ConfigError for unknown names.
ModelKind parse_model_kind(std::string_view name);

/// Coefficient names in fit order, intercept first.
std::vector<std::string> coefficient_names(ModelKind kind);
bool needs_rh(ModelKind kind);
bool needs_temp(ModelKind kind);

struct Coefficient {
    std::string name;
    double value = 0.0;
    /// 95% confidence half-width; NaN when not estimated (fleet intercepts).
    double half_width = 0.0;
};

struct FitDiagnostics {
    double residual_mean = 0.0;
    double lag1_autocorrelation = 0.0;
    double durbin_watson = 0.0;
};

struct FittedModel {
    ModelKind kind = ModelKind::OLS;
    std::vector<Coefficient> coefficients;
    std::size_t n = 0;
    double r_squared = 0.0;
    double residual_sd = 0.0;
    // Candidate-column summary kept for prediction bounds.
    double x_mean = 0.0;
    double x_sxx = 0.0;
    FitDiagnostics diagnostics;

    /// Throws ConfigError for a name the model does not carry.
    double coefficient(std::string_view name) const;
};

/// Least-squares fit with reference as dependent and candidate (plus covariates) as regressors.
FittedModel fit(ModelKind kind, const CollocatedPairs& pairs);

double predict(const FittedModel& model, double x, std::optional<double> rh = std::nullopt,
               std::optional<double> temp = std::nullopt);

/// Predictions for every row of `pairs` (x column plus covariates).
std::vector<double> predict(const FittedModel& model, const CollocatedPairs& pairs);

struct PredictionBound {
    double x = 0.0;
    double fit = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Two-sided prediction interval for a new observation; OLS models only.
std::vector<PredictionBound> prediction_bounds(const FittedModel& model,
                                               std::span<const double> x_grid,
                                               double level = 0.95);

struct ZeroAirSamples {
    std::vector<double> readings;
    std::optional<double> rh;
    std::optional<double> temp;
};

/// Shares the unit-wise model's non-intercept coefficients and picks each device's intercept so
/// its mean clean-air reading maps to zero.
std::map<std::string, FittedModel> fleet_calibrate(
    const FittedModel& unitwise_model, const std::map<std::string, ZeroAirSamples>& zero_samples);

/// Flat `key = value` block, 17 significant digits.
std::string serialize(const FittedModel& model);
FittedModel parse_model(std::string_view text);

}  // namespace pmcal::calib
