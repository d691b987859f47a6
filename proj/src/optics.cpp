#include "pmcal/optics.hpp"

#include "pmcal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pmcal::optics {

namespace {

using cdouble = std::complex<double>;

constexpr double kMaxSizeParameter = 1e4;

// Logarithmic derivative D_n(z) = psi_n'(z)/psi_n(z) at a single order, by modified
// Lentz evaluation of the continued fraction for J_{n-1/2}(z)/J_{n+1/2}(z).
cdouble log_derivative_cf(int n, cdouble z) {
    const double nu = n + 0.5;
    auto a = [&](int k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        return sign * 2.0 * (nu + k - 1) / z;
    };
    constexpr double tiny = 1e-300;
    cdouble f = a(1);
    if (std::abs(f) < tiny) f = tiny;
    cdouble c = f;
    cdouble d = 0.0;
    for (int k = 2; k < 100000; ++k) {
        const cdouble ak = a(k);
        d = ak + d;
        if (std::abs(d) < tiny) d = tiny;
        c = ak + 1.0 / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const cdouble delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return -static_cast<double>(n) / z + f;
}

void require_finite_positive(double v, const char* what) {
    if (!std::isfinite(v) || !(v > 0.0)) {
        std::ostringstream os;
        os << what << " must be finite and positive (got " << v << ")";
        throw DomainError(os.str());
    }
}

std::vector<SizeBin> sorted_bins(const std::vector<SizeBin>& bins) {
    std::vector<SizeBin> out = bins;
    std::sort(out.begin(), out.end(),
              [](const SizeBin& l, const SizeBin& r) { return l.diameter_um < r.diameter_um; });
    return out;
}

}  // namespace

int wiscombe_terms(double size_parameter) {
    return static_cast<int>(std::ceil(size_parameter + 4.0 * std::cbrt(size_parameter) + 2.0));
}

MieIntensity mie_intensity(double size_parameter, std::complex<double> refractive_index,
                           double angle_deg, std::optional<int> terms) {
    const double x = size_parameter;
    if (!std::isfinite(x) || !std::isfinite(refractive_index.real()) ||
        !std::isfinite(refractive_index.imag()) || !std::isfinite(angle_deg)) {
        throw DomainError("mie_intensity: non-finite input");
    }
    if (!(x > 0.0)) throw DomainError("mie_intensity: size parameter must be positive");
    if (x > kMaxSizeParameter) throw DomainError("mie_intensity: size parameter above 1e4");
    if (!(refractive_index.real() > 0.0) || refractive_index.imag() < 0.0) {
        throw DomainError("mie_intensity: refractive index needs positive real and non-negative imaginary part");
    }
    if (angle_deg < 0.0 || angle_deg > 180.0) throw DomainError("mie_intensity: angle outside [0,180]");

    const int nstop = terms.value_or(wiscombe_terms(x));
    if (nstop < 1) throw DomainError("mie_intensity: series needs at least one term");

    const cdouble m = refractive_index;
    const cdouble y = m * x;
    const int nstart = std::max(nstop, static_cast<int>(std::ceil(std::abs(y)))) + 16;

    std::vector<cdouble> dn(static_cast<std::size_t>(nstart) + 1);
    dn[nstart] = log_derivative_cf(nstart, y);
    for (int n = nstart; n >= 1; --n) {
        const cdouble en = static_cast<double>(n) / y;
        dn[n - 1] = en - 1.0 / (dn[n] + en);
    }

    const double mu = std::cos(angle_deg * std::numbers::pi / 180.0);

    double psi_prev = std::cos(x);  // psi_{-1}
    double psi = std::sin(x);       // psi_0
    double chi_prev = -std::sin(x);
    double chi = std::cos(x);
    cdouble xi = cdouble(psi, -chi);

    double pi_prev = 0.0;  // pi_0
    double pi_n = 1.0;     // pi_1
    cdouble s1 = 0.0;
    cdouble s2 = 0.0;

    for (int n = 1; n <= nstop; ++n) {
        const double dnn = n;
        const double psi_n = (2.0 * dnn - 1.0) * psi / x - psi_prev;
        const double chi_n = (2.0 * dnn - 1.0) * chi / x - chi_prev;
        const cdouble xi_n(psi_n, -chi_n);

        const cdouble da = dn[n] / m + dnn / x;
        const cdouble db = dn[n] * m + dnn / x;
        const cdouble an = (da * psi_n - psi) / (da * xi_n - xi);
        const cdouble bn = (db * psi_n - psi) / (db * xi_n - xi);

        const double tau_n = dnn * mu * pi_n - (dnn + 1.0) * pi_prev;
        const double fn = (2.0 * dnn + 1.0) / (dnn * (dnn + 1.0));
        s1 += fn * (an * pi_n + bn * tau_n);
        s2 += fn * (an * tau_n + bn * pi_n);

        psi_prev = psi;
        psi = psi_n;
        chi_prev = chi;
        chi = chi_n;
        xi = xi_n;

        const double pi_next = ((2.0 * dnn + 1.0) * mu * pi_n - (dnn + 1.0) * pi_prev) / dnn;
        pi_prev = pi_n;
        pi_n = pi_next;
    }
    return {std::norm(s1), std::norm(s2)};
}

MieIntensity rayleigh_intensity(double size_parameter, std::complex<double> refractive_index,
                                double angle_deg) {
    const cdouble m2 = refractive_index * refractive_index;
    const double k2 = std::norm((m2 - 1.0) / (m2 + 2.0));
    const double i1 = std::pow(size_parameter, 6) * k2;
    const double c = std::cos(angle_deg * std::numbers::pi / 180.0);
    return {i1, i1 * c * c};
}

double particle_mass(double density, double diameter_um) {
    if (!(density > 0.0) || !std::isfinite(density)) throw DomainError("particle_mass: density must be positive");
    if (!(diameter_um >= 0.0) || !std::isfinite(diameter_um)) throw DomainError("particle_mass: diameter must be non-negative");
    // g/cm^3 * um^3 = 1e-12 g = 1e-6 ug
    return density * std::numbers::pi * diameter_um * diameter_um * diameter_um / 6.0 * 1e-6;
}

void AerosolAssumptions::validate() const {
    require_finite_positive(density, "density");
    if (refractive_index.real() < 1.0 || refractive_index.imag() < 0.0) {
        throw DomainError("refractive index needs real part >= 1 and imaginary part >= 0");
    }
    require_finite_positive(cut_diameter_um, "cut diameter");
    if (size_distribution.empty()) throw DomainError("size distribution is empty");
    double total = 0.0;
    const auto bins = sorted_bins(size_distribution);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        require_finite_positive(bins[i].diameter_um, "bin diameter");
        if (!(bins[i].weight >= 0.0) || !std::isfinite(bins[i].weight)) {
            throw DomainError("bin weight must be finite and non-negative");
        }
        if (i > 0 && !(bins[i].diameter_um > bins[i - 1].diameter_um)) {
            throw DomainError("bin diameters must be distinct");
        }
        total += bins[i].weight;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw DomainError("size distribution weights must sum to 1");
}

void OpticalGeometry::validate() const {
    require_finite_positive(wavelength_um, "wavelength");
    require_finite_positive(calibration_constant, "calibration constant");
    if (!(angle_deg > 0.0 && angle_deg < 180.0)) throw DomainError("observation angle must be in (0,180)");
}

double opc_mass_concentration(const BinCounts& bins, const AerosolAssumptions& assumptions) {
    if (bins.bin_midpoints_um.size() != bins.counts.size()) {
        throw DomainError("opc_mass_concentration: midpoints and counts differ in length");
    }
    const double volume_m3 = bins.flow_rate_lpm * bins.duration_s / 60.0 * 1e-3;
    if (!(volume_m3 > 0.0) || !std::isfinite(volume_m3)) {
        throw DomainError("opc_mass_concentration: sampled volume must be positive");
    }
    for (std::size_t i = 1; i < bins.bin_midpoints_um.size(); ++i) {
        if (!(bins.bin_midpoints_um[i] > bins.bin_midpoints_um[i - 1])) {
            throw DomainError("opc_mass_concentration: bin midpoints must increase");
        }
    }
    double mass_ug = 0.0;
    for (std::size_t i = 0; i < bins.counts.size(); ++i) {
        const double d = bins.bin_midpoints_um[i];
        if (d > assumptions.cut_diameter_um) break;
        mass_ug += static_cast<double>(bins.counts[i]) * particle_mass(assumptions.density, d);
    }
    return mass_ug / volume_m3;
}

double pnm_sensitivity(const AerosolAssumptions& assumptions, const OpticalGeometry& geometry) {
    assumptions.validate();
    geometry.validate();
    double sum = 0.0;
    for (const auto& bin : sorted_bins(assumptions.size_distribution)) {
        if (bin.diameter_um > assumptions.cut_diameter_um) {
            throw DomainError("pnm_sensitivity: size distribution extends beyond the cut diameter");
        }
        if (bin.weight == 0.0) continue;
        const double x = std::numbers::pi * bin.diameter_um / geometry.wavelength_um;
        const auto mie = mie_intensity(x, assumptions.refractive_index, geometry.angle_deg);
        const double d3 = bin.diameter_um * bin.diameter_um * bin.diameter_um;
        sum += bin.weight / (assumptions.density * d3) * (mie.i1 + mie.i2);
    }
    return geometry.calibration_constant * sum;
}

double pnm_signal_from_mass(double mass_concentration, double sensitivity) {
    return mass_concentration * sensitivity;
}

double pnm_mass_from_signal(double signal, double sensitivity) {
    if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
        throw DomainError("pnm_mass_from_signal: sensitivity must be positive");
    }
    return signal / sensitivity;
}

}  // namespace pmcal::optics
