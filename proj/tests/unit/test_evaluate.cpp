#include "fixtures/appendix_table.hpp"
#include "oracles.hpp"
#include "pmcal/error.hpp"
#include "pmcal/evaluate.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace pmcal;
using namespace pmcal::eval;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

stats::SampleStats summary(std::size_t n, double mean, double sd) { return {n, mean, sd}; }

CollocatedPairs pairs_of(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<std::optional<double>>& rh = {}) {
    CollocatedPairs p;
    for (std::size_t i = 0; i < x.size(); ++i) {
        p.push_back(static_cast<Timestamp>(i) * 60, x[i], y[i], rh.empty() ? std::nullopt : rh[i]);
    }
    return p;
}

}  // namespace

TEST_CASE("relative errors") {
    auto same = pairs_of({5, 10, 20}, {5, 10, 20});
    for (double d : relative_errors(same).values) CHECK(d == 0.0);

    auto low = pairs_of({2.9, 110}, {5.0, 100});
    const auto e = relative_errors(low);
    REQUIRE(e.n == 1);
    CHECK_THAT(e.values[0], WithinAbs(10.0, 1e-12));
    CHECK(relative_errors(pairs_of({}, {})).n == 0);
    CHECK(relative_errors(low, 0.0).n == 2);
    CHECK_THROWS_AS(relative_errors(low, -1.0), DomainError);
}

TEST_CASE("bias of identical pairs is zero and passes") {
    auto p = pairs_of({5, 10, 20, 40}, {5, 10, 20, 40});
    const auto b = bias_pep(relative_errors(p));
    CHECK(b.center == 0.0);
    CHECK(b.half_width == 0.0);
    CHECK(b.passes);
    CHECK(b.small_sample);
}

TEST_CASE("bias and precision reproduce the published table") {
    for (const auto& row : fixtures::appendix_rows()) {
        INFO(row.candidate << " " << row.model);
        double sd = row.sd;
        if (std::isnan(sd)) {
            const double df = static_cast<double>(row.n - 1);
            sd = row.sigma_ucl * std::sqrt(oracle::chi2_quantile(0.1, df) / df);
        }
        const auto s = summary(row.n, row.mean, sd);
        const auto b = bias_pep(s);
        CHECK(b.center == row.mean);
        CHECK_THAT(b.half_width, WithinAbs(row.half_width, 0.005));
        if (!std::isnan(row.sd)) CHECK_THAT(sigma_ucl(s).sigma_ucl, WithinAbs(row.sigma_ucl, 0.005));
    }
}

TEST_CASE("bias spot rows") {
    auto b = bias_pep(summary(7497, 3.696, 17.278));
    CHECK_THAT(b.half_width, WithinAbs(0.328, 0.0005));
    CHECK(b.passes);
    b = bias_pep(summary(7562, 6.147, 23.995));
    CHECK_THAT(b.half_width, WithinAbs(0.454, 0.0005));
    // Containment reading: a centre inside the band with an interval poking out fails.
    CHECK_FALSE(bias_pep(summary(10, 9.5, 2.0)).passes);
    CHECK_THROWS_AS(bias_pep(summary(1, 3.0, 0.0)), InsufficientDataError);
    CHECK_THROWS_AS(bias_pep(RelErrorSet{}), InsufficientDataError);
}

TEST_CASE("precision spot rows") {
    const auto p = sigma_ucl(summary(7453, 2.411, 16.438));
    CHECK_THAT(p.sigma_ucl, WithinAbs(16.613, 0.0005));
    CHECK_FALSE(p.passes);
    CHECK_THAT(62.655 * std::sqrt(0.5), WithinAbs(44.304, 0.0005));
    CHECK(sigma_ucl(summary(7320, 21.636, 61.989)).cv_ucl == sigma_ucl(summary(7320, 21.636, 61.989)).sigma_ucl * std::sqrt(0.5));

    auto flat = pairs_of({11, 22, 33}, {10, 20, 30});
    const auto z = sigma_ucl(relative_errors(flat));
    CHECK_THAT(z.sigma_ucl, WithinAbs(0.0, 1e-12));
    CHECK(z.passes);
}

TEST_CASE("CV_RMS examples") {
    Series ref = testing::pm25_series(60, 0, {50, 50, 50});
    std::vector<FleetSet> same{{0, {4, 4, 4}}, {60, {9, 9, 9}}};
    CHECK(cv_rms(same, ref, 3).value == 0.0);

    std::vector<FleetSet> one{{0, {8, 12}}};
    CHECK_THAT(cv_rms(one, ref, 2).value, WithinAbs(28.2843, 1e-4));

    std::vector<FleetSet> two{{0, {5, 5}}, {60, {8, 12}}};
    const auto r = cv_rms(two, ref, 2);
    CHECK_THAT(r.value, WithinAbs(20.0, 1e-12));
    CHECK(r.timestamps == 2);
    CHECK_FALSE(r.passes);
}

TEST_CASE("CV_RMS validity rules") {
    Series ref = testing::pm25_series(60, 0, {2.5, 250, 50, 50});
    std::vector<FleetSet> sets{{0, {8, 12}}, {60, {8, 12}}, {120, {8, 12}}, {180, {1, 1, 1}}};
    const auto r = cv_rms(sets, ref, 3);
    CHECK(r.timestamps == 1);
    CHECK(r.value == 0.0);
    CHECK_THROWS_AS(cv_rms(std::vector<FleetSet>{{0, {8, 12}}}, ref, 3), InsufficientDataError);
    CHECK_THROWS_AS(cv_rms(sets, ref, 1), ConfigError);
}

TEST_CASE("comparability of a perfect candidate") {
    auto p = pairs_of({5, 10, 20, 40}, {5, 10, 20, 40});
    const auto c = comparability(p);
    CHECK_THAT(c.slope, WithinAbs(1.0, 1e-14));
    CHECK_THAT(c.intercept, WithinAbs(0.0, 1e-12));
    CHECK(c.r == 1.0);
    CHECK(c.slope_pass);
    CHECK(c.intercept_pass);
    CHECK(c.r_pass);
}

TEST_CASE("intercept bounds at unit slope") {
    const auto [lo, hi] = intercept_bounds(1.0);
    CHECK_THAT(lo, WithinAbs(-2.0, 1e-12));
    CHECK_THAT(hi, WithinAbs(1.85, 1e-12));
}

TEST_CASE("comparability of a doubled, shifted candidate") {
    std::vector<double> ref{4, 9, 15, 22, 30}, cand;
    for (double y : ref) cand.push_back(2 * y + 3);
    const auto c = comparability(pairs_of(cand, ref));
    CHECK_THAT(c.slope, WithinAbs(2.0, 1e-12));
    CHECK_THAT(c.intercept, WithinAbs(3.0, 1e-12));
    CHECK_FALSE(c.slope_pass);
    CHECK_FALSE(c.intercept_pass);
    CHECK(c.r_pass);
    CHECK_THROWS_AS(comparability(pairs_of({1, 2, 3}, {5, 5, 5})), DomainError);
    CHECK_THROWS_AS(comparability(pairs_of({1, 1, 1}, {1, 2, 3})), DomainError);
    CHECK_THROWS_AS(comparability(pairs_of(cand, ref), 0.9), ConfigError);
}

TEST_CASE("LOD") {
    std::vector<double> cal{2, 2, 2, 50}, ref{1, 1, 1, 60};
    std::vector<std::optional<double>> rh{40, 40, 40, 40};
    auto r = lod(cal, ref, rh);
    REQUIRE(r.value);
    CHECK(*r.value == 0.0);
    CHECK(r.sample_size == 3);

    std::vector<double> c2{9, 10, 11};
    std::vector<double> r2{1, 2, 2.5};
    std::vector<std::optional<double>> h2{30, 30, 30};
    r = lod(c2, r2, h2);
    CHECK_THAT(*r.value, WithinAbs(3.30, 1e-12));

    std::vector<std::optional<double>> humid{70, 75, 60};
    r = lod(c2, r2, humid);
    CHECK(r.rh_max_used == 80.0);
    CHECK_THAT(*r.value, WithinAbs(3.30, 1e-12));

    std::vector<std::optional<double>> wet{90, 90, 90};
    r = lod(c2, r2, wet);
    CHECK_FALSE(r.value);
    CHECK_FALSE(r.reason.empty());

    // Negative calibrated values remain in the low sample.
    std::vector<double> neg{-1, 1};
    std::vector<double> rn{1, 1};
    std::vector<std::optional<double>> hn{10, 10};
    CHECK_THAT(*lod(neg, rn, hn).value, WithinAbs(3.30 * std::sqrt(2.0), 1e-12));
}

TEST_CASE("LOD factor is the two-sided 5%/5% normal multiplier") {
    CHECK(LodOptions{}.k == 3.30);
    CHECK_THAT(2 * stats::normal_quantile(0.95), WithinAbs(3.30, 0.011));
}

TEST_CASE("report for a perfect candidate") {
    std::vector<double> v;
    std::vector<std::optional<double>> rh;
    for (int i = 0; i < 50; ++i) {
        v.push_back(1 + i);
        rh.push_back(40.0);
    }
    const auto rep = evaluate(pairs_of(v, v, rh), 100.0);
    REQUIRE(rep.bias);
    CHECK(rep.bias->center == 0.0);
    CHECK(rep.bias->half_width == 0.0);
    CHECK(rep.precision->sigma_ucl == 0.0);
    CHECK_THAT(rep.comparability->slope, WithinAbs(1.0, 1e-14));
    CHECK_THAT(rep.comparability->intercept, WithinAbs(0.0, 1e-12));
    CHECK(rep.comparability->r == 1.0);
    CHECK((rep.bias->passes && rep.precision->passes && rep.comparability->slope_pass &&
           rep.comparability->intercept_pass && rep.comparability->r_pass));
    CHECK(rep.n == 50);
    CHECK(rep.n_filtered == 48);
    CHECK_FALSE(rep.cv_rms.has_value());
}

TEST_CASE("report fields equal the sub-operations") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 2.0);
    CollocatedPairs p;
    for (int i = 0; i < 300; ++i) {
        const double y = 1 + i * 0.2;
        p.push_back(i * 60, y * 1.05 + noise(rng), y, 30.0 + i % 40);
    }
    const auto rep = evaluate(p, 97.5);
    const auto e = relative_errors(p);
    CHECK(rep.bias->center == bias_pep(e).center);
    CHECK(rep.bias->half_width == bias_pep(e).half_width);
    CHECK(rep.precision->sigma_ucl == sigma_ucl(e).sigma_ucl);
    CHECK(rep.comparability->slope == comparability(p).slope);
    CHECK(rep.comparability->r == comparability(p).r);
    CHECK(*rep.lod->value == *lod(p.x, p.y, p.rh).value);
    CHECK(rep.completeness == 97.5);

    const std::string row = report_csv_row("s1", "OLS", rep);
    CHECK(row.rfind("s1,OLS,300,", 0) == 0);
    const std::string header = report_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK_THAT(to_key_values(rep), ContainsSubstring("bias.rule = ci_within_goal"));
}

TEST_CASE("failed metrics are absent with a reason rather than aborting") {
    auto p = pairs_of({1, 2}, {1, 1});
    const auto rep = evaluate(p, 50.0);
    CHECK_FALSE(rep.bias);
    CHECK_FALSE(rep.comparability);
    CHECK_FALSE(rep.notes.empty());
    CHECK_THROWS_AS(evaluate(pairs_of({}, {}), 0.0), InsufficientDataError);
}
