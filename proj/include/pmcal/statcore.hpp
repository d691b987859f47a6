#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace pmcal::stats {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    /// Sample standard deviation (n-1 denominator); absent for n == 1.
    std::optional<double> sd;
};

/// Throws InsufficientDataError on empty input.
SampleStats sample_stats(std::span<const double> values);

// Regularized incomplete functions. Arguments outside their domain throw DomainError.
double incomplete_beta(double a, double b, double x);   // I_x(a, b)
double lower_gamma_p(double a, double x);               // P(a, x)
double upper_gamma_q(double a, double x);               // Q(a, x) = 1 - P(a, x)

double normal_cdf(double z);
double normal_quantile(double p);

double t_cdf(double t, double df);
double t_pdf(double t, double df);
double chi2_cdf(double x, double df);
double chi2_pdf(double x, double df);

/// Inverse Student-t CDF. p in (0,1), df >= 1 (real-valued).
double t_quantile(double p, double df);

/// Inverse chi-square CDF. p in (0,1), df >= 1 (real-valued).
double chi2_quantile(double p, double df);

/// Pearson correlation clamped to [-1, 1]. Zero variance in either column throws DomainError.
double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace pmcal::stats
