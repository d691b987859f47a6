#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace pmcal::optics {

/// Perpendicular (|S1|^2) and parallel (|S2|^2) scattered intensity functions.
struct MieIntensity {
    double i1 = 0.0;
    double i2 = 0.0;
};

/// Series length ceil(x + 4 x^(1/3) + 2).
int wiscombe_terms(double size_parameter);

/// Mie intensity functions for a homogeneous sphere.
///
/// `size_parameter` is pi*d/lambda, `angle_deg` the scattering angle measured from the
/// forward direction. `terms` overrides the Wiscombe truncation (used to study convergence).
/// Throws DomainError for non-finite or non-physical input and for size parameters above 1e4.
MieIntensity mie_intensity(double size_parameter, std::complex<double> refractive_index,
                           double angle_deg, std::optional<int> terms = std::nullopt);

/// Rayleigh-limit intensity functions: i1 = x^6 |(m^2-1)/(m^2+2)|^2, i2 = i1 cos^2(theta).
MieIntensity rayleigh_intensity(double size_parameter, std::complex<double> refractive_index,
                                double angle_deg);

/// Mass of a sphere in micrograms from density (g/cm^3) and diameter (um).
double particle_mass(double density, double diameter_um);

struct SizeBin {
    double diameter_um = 0.0;
    double weight = 0.0;
};

struct AerosolAssumptions {
    double density = 1.65;                          // g/cm^3
    std::complex<double> refractive_index{1.5, 0.0};
    std::vector<SizeBin> size_distribution;         // weights sum to 1, diameters increasing
    double cut_diameter_um = 2.5;

    void validate() const;
};

struct OpticalGeometry {
    double wavelength_um = 0.65;
    double angle_deg = 90.0;
    double calibration_constant = 1.0;

    void validate() const;
};

struct BinCounts {
    std::vector<double> bin_midpoints_um;
    std::vector<std::uint64_t> counts;
    double flow_rate_lpm = 1.0;
    double duration_s = 60.0;
};

/// OPC mass concentration (ug/m^3) from per-bin counts, summing bins at or below the cut.
double opc_mass_concentration(const BinCounts& bins, const AerosolAssumptions& assumptions);

/// PNM signal per unit mass concentration (per ug/m^3, up to the calibration constant).
double pnm_sensitivity(const AerosolAssumptions& assumptions, const OpticalGeometry& geometry);

double pnm_signal_from_mass(double mass_concentration, double sensitivity);
double pnm_mass_from_signal(double signal, double sensitivity);

}  // namespace pmcal::optics
