#include "pmcal/statcore.hpp"

#include "pmcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace pmcal::stats {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

void require_probability(double p, const char* fn) {
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream os;
        os << fn << ": probability " << p << " outside (0,1)";
        throw DomainError(os.str());
    }
}

void require_df(double df, const char* fn) {
    if (!(df >= 1.0) || !std::isfinite(df)) {
        std::ostringstream os;
        os << fn << ": degrees of freedom " << df << " must be finite and >= 1";
        throw DomainError(os.str());
    }
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw DomainError("incomplete_beta: continued fraction did not converge");
}

double gamma_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw DomainError("lower_gamma_p: series did not converge");
}

double gamma_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
        }
    }
    throw DomainError("upper_gamma_q: continued fraction did not converge");
}

// Solves f(x) = 0 for increasing f on [lo, hi] with f(lo) <= 0 <= f(hi).
// Newton steps from `guess` using slope `fprime`, falling back to bisection.
double solve_increasing(const std::function<double(double)>& f,
                        const std::function<double(double)>& fprime, double lo, double hi,
                        double guess) {
    double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
    for (int iter = 0; iter < 2000; ++iter) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double slope = fprime(x);
        double next = (slope > 0.0 && std::isfinite(slope)) ? x - fx / slope : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double scale = std::max(std::fabs(next), std::numeric_limits<double>::min());
        if (std::fabs(next - x) <= 2.0 * kEps * scale || (hi - lo) <= 2.0 * kEps * scale) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace

SampleStats sample_stats(std::span<const double> values) {
    if (values.empty()) throw InsufficientDataError("sample_stats: empty input");
    SampleStats s;
    s.n = values.size();
    const double shift = values.front();
    double delta_sum = 0.0;
    for (double v : values) delta_sum += v - shift;
    s.mean = shift + delta_sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double lower_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw DomainError("lower_gamma_p: a must be positive");
    if (!(x >= 0.0)) throw DomainError("lower_gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double upper_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw DomainError("upper_gamma_q: a must be positive");
    if (!(x >= 0.0)) throw DomainError("upper_gamma_q: x must be non-negative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
    require_probability(p, "normal_quantile");
    // Acklam's rational approximation, then one Halley step against erfc.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double z;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(z) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
    return z - u / (1.0 + 0.5 * z * u);
}

double t_pdf(double t, double df) {
    require_df(df, "t_pdf");
    const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                            0.5 * std::log(df * std::numbers::pi);
    return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

double t_cdf(double t, double df) {
    require_df(df, "t_cdf");
    if (std::isnan(t)) throw DomainError("t_cdf: NaN argument");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

double chi2_pdf(double x, double df) {
    require_df(df, "chi2_pdf");
    if (x < 0.0) return 0.0;
    const double k = 0.5 * df;
    if (x == 0.0) {
        if (df < 2.0) return std::numeric_limits<double>::infinity();
        return df == 2.0 ? 0.5 : 0.0;
    }
    return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - std::lgamma(k));
}

double chi2_cdf(double x, double df) {
    require_df(df, "chi2_cdf");
    if (x <= 0.0) return 0.0;
    return lower_gamma_p(0.5 * df, 0.5 * x);
}

double t_quantile(double p, double df) {
    require_probability(p, "t_quantile");
    require_df(df, "t_quantile");
    if (p == 0.5) return 0.0;
    // Work on the upper half using the tail mass, which keeps precision near p -> 1.
    const bool upper = p > 0.5;
    const double tail = upper ? 1.0 - p : p;
    auto f = [&](double t) { return tail - 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t)); };
    auto fprime = [&](double t) { return t_pdf(t, df); };
    double hi = 1.0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw DomainError("t_quantile: could not bracket root");
    }
    const double guess = std::fabs(normal_quantile(tail));
    const double t = solve_increasing(f, fprime, 0.0, hi, guess);
    return upper ? t : -t;
}

double chi2_quantile(double p, double df) {
    require_probability(p, "chi2_quantile");
    require_df(df, "chi2_quantile");
    const double k = 0.5 * df;
    std::function<double(double)> f;
    if (p <= 0.5) {
        f = [&](double x) { return lower_gamma_p(k, 0.5 * x) - p; };
    } else {
        const double q = 1.0 - p;
        f = [&, q](double x) { return q - upper_gamma_q(k, 0.5 * x); };
    }
    auto fprime = [&](double x) { return chi2_pdf(x, df); };
    double hi = std::max(df, 1.0);
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw DomainError("chi2_quantile: could not bracket root");
    }
    // Wilson-Hilferty starting point.
    const double z = normal_quantile(p);
    const double h = 2.0 / (9.0 * df);
    const double guess = df * std::pow(std::max(1.0 - h + z * std::sqrt(h), 0.0), 3.0);
    return solve_increasing(f, fprime, 0.0, hi, guess);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson_r: length mismatch");
    if (x.size() < 2) throw InsufficientDataError("pearson_r: need at least two pairs");
    const double mx = sample_stats(x).mean;
    const double my = sample_stats(y).mean;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson_r: zero variance column");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace pmcal::stats
