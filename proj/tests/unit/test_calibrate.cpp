#include "oracles.hpp"
#include "pmcal/calibrate.hpp"
#include "pmcal/error.hpp"
#include "pmcal/statcore.hpp"
#include "pmcal/synthgen.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace pmcal;
using namespace pmcal::calib;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CollocatedPairs linear(int n, double b0, double b1) {
    CollocatedPairs p;
    for (int i = 0; i < n; ++i) p.push_back(i * 60, i * 1.5 + 2, b0 + b1 * (i * 1.5 + 2));
    return p;
}

FittedModel hand_model(ModelKind kind, std::vector<double> beta) {
    FittedModel m;
    m.kind = kind;
    const auto names = coefficient_names(kind);
    for (std::size_t i = 0; i < names.size(); ++i) m.coefficients.push_back({names[i], beta[i], 0.0});
    return m;
}

}  // namespace

TEST_CASE("model names round-trip and are case-insensitive") {
    for (auto k : {ModelKind::OLS, ModelKind::MLH, ModelKind::MLT, ModelKind::MLHT, ModelKind::ADV}) {
        CHECK(parse_model_kind(model_name(k)) == k);
    }
    CHECK(parse_model_kind("mlh") == ModelKind::MLH);
    CHECK_THROWS_AS(parse_model_kind("RMA"), ConfigError);
    CHECK(coefficient_names(ModelKind::ADV) == std::vector<std::string>{"intercept", "x", "rh", "x_rh"});
}

TEST_CASE("exact line is recovered by OLS") {
    const auto m = fit(ModelKind::OLS, linear(20, 3.0, 2.0));
    CHECK_THAT(m.coefficient("intercept"), WithinAbs(3.0, 1e-12));
    CHECK_THAT(m.coefficient("x"), WithinAbs(2.0, 1e-12));
    CHECK_THAT(m.residual_sd, WithinAbs(0.0, 1e-12));
    CHECK_THAT(m.r_squared, WithinAbs(1.0, 1e-12));
    for (const auto& c : m.coefficients) CHECK_THAT(c.half_width, WithinAbs(0.0, 1e-10));
}

TEST_CASE("exact plane is recovered by MLH") {
    CollocatedPairs p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 40; ++i) {
        const double x = u(rng), rh = u(rng);
        p.push_back(i, x, 1 + 0.9 * x + 0.1 * rh, rh);
    }
    const auto m = fit(ModelKind::MLH, p);
    CHECK_THAT(m.coefficient("intercept"), WithinAbs(1.0, 1e-9));
    CHECK_THAT(m.coefficient("x"), WithinAbs(0.9, 1e-9));
    CHECK_THAT(m.coefficient("rh"), WithinAbs(0.1, 1e-9));
}

TEST_CASE("random 50-row fits match the normal-equation oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 2.0);
    for (auto kind : {ModelKind::OLS, ModelKind::MLH, ModelKind::MLT, ModelKind::MLHT, ModelKind::ADV}) {
        CollocatedPairs p;
        std::vector<std::vector<double>> design;
        for (int i = 0; i < 50; ++i) {
            const double x = 5 + 80 * u(rng), rh = 20 + 75 * u(rng), t = -5 + 35 * u(rng);
            const double y = 2 + 0.8 * x - 0.1 * rh + 0.3 * t + 0.002 * x * rh + noise(rng);
            p.push_back(i, x, y, rh, t);
            std::vector<double> row{1, x};
            if (needs_rh(kind)) row.push_back(rh);
            if (needs_temp(kind)) row.push_back(t);
            if (kind == ModelKind::ADV) row.push_back(x * rh);
            design.push_back(row);
        }
        const auto m = fit(kind, p);
        const auto ref = oracle::normal_equations(design, p.y);
        REQUIRE(m.coefficients.size() == ref.size());
        for (std::size_t j = 0; j < ref.size(); ++j) CHECK_THAT(m.coefficients[j].value, WithinRel(ref[j], 1e-9));
    }
}

TEST_CASE("half-widths follow the t critical value and the standard error") {
    // Simple regression: se(b1) = s / sqrt(Sxx).
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    CollocatedPairs p;
    for (int i = 0; i < 30; ++i) p.push_back(i, i, 1 + 2 * i + noise(rng));
    const auto m = fit(ModelKind::OLS, p);
    const double se = m.residual_sd / std::sqrt(m.x_sxx);
    CHECK_THAT(m.coefficients[1].half_width, WithinRel(stats::t_quantile(0.975, 28) * se, 1e-9));
}

TEST_CASE("fit error contracts") {
    auto p = linear(10, 1, 1);
    CHECK_THROWS_WITH(fit(ModelKind::MLH, p), ContainsSubstring("rh"));
    CHECK_THROWS_AS(fit(ModelKind::MLT, p), ConfigError);
    CollocatedPairs flat;
    for (int i = 0; i < 10; ++i) flat.push_back(i, 5.0, i);
    CHECK_THROWS_AS(fit(ModelKind::OLS, flat), SingularDesignError);
    CHECK_THROWS_AS(fit(ModelKind::OLS, linear(3, 1, 1)), InsufficientDataError);
    CollocatedPairs collinear;
    for (int i = 0; i < 10; ++i) collinear.push_back(i, i, 2.0 * i + 1, 3.0 * i);
    CHECK_THROWS_AS(fit(ModelKind::MLH, collinear), SingularDesignError);
}

TEST_CASE("prediction") {
    const auto ols = hand_model(ModelKind::OLS, {3, 2});
    CHECK(predict(ols, 5.0) == 13.0);
    const auto adv = hand_model(ModelKind::ADV, {1, 2, 3, 4});
    CHECK(predict(adv, 5.0, 0.0) == 1 + 2 * 5.0);
    CHECK(predict(adv, 2.0, 10.0) == 1 + 4 + 30 + 80);
    CHECK_THROWS_AS(predict(adv, 2.0), ConfigError);
    const auto mlht = hand_model(ModelKind::MLHT, {1, 1, 1, 1});
    CHECK_THROWS_AS(predict(mlht, 1.0, 1.0), ConfigError);
    // Not clamped.
    CHECK(predict(hand_model(ModelKind::OLS, {-5, 1}), 1.0) == -4.0);
}

TEST_CASE("training predictions reproduce the R-squared decomposition") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 3.0);
    CollocatedPairs p;
    for (int i = 0; i < 200; ++i) {
        const double rh = 30 + (i % 60);
        p.push_back(i, i * 0.3, 4 + 1.1 * i * 0.3 + 0.05 * rh + noise(rng), rh);
    }
    const auto m = fit(ModelKind::MLH, p);
    const auto yhat = predict(m, p);
    double ybar = 0;
    for (double y : p.y) ybar += y;
    ybar /= p.size();
    double sst = 0, sse = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sst += (p.y[i] - ybar) * (p.y[i] - ybar);
        sse += (p.y[i] - yhat[i]) * (p.y[i] - yhat[i]);
    }
    CHECK_THAT(1 - sse / sst, WithinAbs(m.r_squared, 1e-12));
    CHECK_THAT(std::sqrt(sse / (p.size() - 3)), WithinRel(m.residual_sd, 1e-12));
}

TEST_CASE("prediction bounds") {
    const auto exact = fit(ModelKind::OLS, linear(10, 1, 2));
    const std::vector<double> grid{0, 5, 10};
    for (const auto& b : prediction_bounds(exact, grid)) {
        CHECK_THAT(b.lower, WithinAbs(b.fit, 1e-9));
        CHECK_THAT(b.upper, WithinAbs(b.fit, 1e-9));
    }

    std::mt19937_64 rng(20);
    std::normal_distribution<double> noise(0.0, 1.5);
    CollocatedPairs p;
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        const double x = 3 + 2.5 * i;
        p.push_back(i, x, 2 + 0.95 * x + noise(rng));
        xs.push_back(x);
        ys.push_back(p.y.back());
    }
    const auto m = fit(ModelKind::OLS, p);
    std::vector<double> g{-10, 0, m.x_mean, 25, 60, 100};
    const auto got = prediction_bounds(m, g);
    const auto ref = oracle::ols_prediction_bounds(xs, ys, g, oracle::t_quantile(0.975, 18));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK_THAT(got[i].lower, WithinRel(ref[i].lower, 1e-9));
        CHECK_THAT(got[i].upper, WithinRel(ref[i].upper, 1e-9));
        CHECK_THAT(got[i].upper - got[i].fit, WithinRel(got[i].fit - got[i].lower, 1e-9));
    }
    const double narrowest = got[2].upper - got[2].lower;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i != 2) CHECK(got[i].upper - got[i].lower > narrowest);
    }
    CHECK_THROWS_AS(prediction_bounds(hand_model(ModelKind::MLH, {1, 1, 1}), g), ConfigError);
}

TEST_CASE("fleet calibration offsets") {
    const auto zero = hand_model(ModelKind::OLS, {0, 1});
    auto devs = fleet_calibrate(zero, {{"a", {{0.0}, {}, {}}}});
    CHECK(devs.at("a").coefficient("intercept") == 0.0);

    devs = fleet_calibrate(zero, {{"a", {{-1.0}, {}, {}}}, {"b", {{0.0}, {}, {}}}, {"c", {{1.0}, {}, {}}}});
    CHECK(devs.at("a").coefficient("intercept") == 1.0);
    CHECK(devs.at("b").coefficient("intercept") == 0.0);
    CHECK(devs.at("c").coefficient("intercept") == -1.0);
    CHECK(devs.at("c").coefficient("x") == 1.0);
    CHECK(std::isnan(devs.at("c").coefficients[0].half_width));

    CHECK_THROWS_AS(fleet_calibrate(zero, {{"a", {{}, {}, {}}}}), InsufficientDataError);

    // Covariate terms are evaluated at the supplied clean-air conditions.
    const auto mlh = hand_model(ModelKind::MLH, {0, 2, 0.5});
    devs = fleet_calibrate(mlh, {{"a", {{1.0, 3.0}, 40.0, {}}}});
    CHECK_THAT(predict(devs.at("a"), 2.0, 40.0), WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(fleet_calibrate(mlh, {{"a", {{1.0}, {}, {}}}}), ConfigError);
}

TEST_CASE("fleet calibration recovers per-unit offsets from a simulated fleet") {
    synth::TruthScenario scenario;
    scenario.duration_s = 3 * 86400;
    scenario.volatility = 0.004;
    const auto truth = synth::generate_truth(scenario, 101);
    const std::vector<double> offsets{2.0, 4.0, 6.5};
    const double noise_sd = 0.8;
    const double gain = 1.2;

    std::vector<Series> units;
    Series zero_truth = truth.reference;
    for (auto& s : zero_truth.samples) s.pm1 = s.pm25 = s.pm10 = 0.0;
    zero_truth.samples.resize(400);
    std::map<std::string, ZeroAirSamples> zero;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        synth::SensorProfile prof;
        prof.gain = gain;
        prof.offset = offsets[i];
        prof.noise_sd = noise_sd;
        prof.hygro_coeff = 0.0;
        units.push_back(synth::simulate_sensor(truth.reference, truth.met, prof, {}, 200 + i).sensor);
        const auto z = synth::simulate_sensor(zero_truth, truth.met, prof, {}, 300 + i).sensor;
        ZeroAirSamples zs;
        for (const auto& s : z.samples) zs.readings.push_back(*s.pm25);
        zero.emplace("unit" + std::to_string(i), std::move(zs));
    }
    const auto avg = unitwise_average(units, 3);
    const auto pairs = align_collocated(avg, truth.reference, truth.reference);
    const auto model = fit(ModelKind::OLS, pairs);
    CHECK_THAT(model.coefficient("x"), WithinRel(1.0 / gain, 0.01));

    const auto devs = fleet_calibrate(model, zero);
    const double tol = 3 * noise_sd / std::sqrt(400.0);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const auto& d = devs.at("unit" + std::to_string(i));
        const double recovered = -d.coefficient("intercept") / d.coefficient("x");
        CHECK_THAT(recovered, WithinAbs(offsets[i], tol));
    }
}

TEST_CASE("serialized models parse back exactly") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 1.0);
    CollocatedPairs p;
    for (int i = 0; i < 60; ++i) p.push_back(i, i * 0.7, 1 + i * 0.77 + noise(rng), 40 + i % 17, 10 + i % 5);
    for (auto kind : {ModelKind::OLS, ModelKind::MLHT, ModelKind::ADV}) {
        const auto m = fit(kind, p);
        const auto back = parse_model(serialize(m));
        CHECK(serialize(back) == serialize(m));
        CHECK(back.kind == m.kind);
        CHECK(back.n == m.n);
        for (std::size_t j = 0; j < m.coefficients.size(); ++j) {
            CHECK(back.coefficients[j].value == m.coefficients[j].value);
            CHECK(back.coefficients[j].half_width == m.coefficients[j].half_width);
        }
        CHECK(back.residual_sd == m.residual_sd);
    }
    auto fleet = fleet_calibrate(fit(ModelKind::OLS, p), {{"a", {{1.0}, {}, {}}}});
    const auto back = parse_model(serialize(fleet.at("a")));
    CHECK(std::isnan(back.coefficients[0].half_width));
    CHECK_THROWS_AS(parse_model("kind = OLS\n"), ConfigError);
}
