#pragma once

#include <numbers>

namespace qmem {

// SI units throughout. Rb-87 data from the standard D-line reference tables
// (hyperfine splitting and line wavelengths in vacuum), CODATA 2018 for the
// fundamental constants.
struct PhysicalConstants {
    double m_atom = 1.443160648e-25;        // kg, 86.909180527 u
    double k_B = 1.380649e-23;              // J/K
    double hbar = 1.054571817e-34;          // J s
    double c = 299792458.0;                 // m/s
    double g_earth = 9.81;                  // m/s^2
    double nu_hf = 6.834682610904290e9;     // Hz, 5S1/2 F=1 <-> F=2
    double lambda_D2 = 780.241209686e-9;    // m
    double lambda_D1 = 794.978851156e-9;    // m
    double gamma_D2 = 2.0 * std::numbers::pi * 6.0666e6;  // rad/s natural linewidth

    double omega_hf() const { return 2.0 * std::numbers::pi * nu_hf; }
    double omega_D2() const { return 2.0 * std::numbers::pi * c / lambda_D2; }
    double omega_D1() const { return 2.0 * std::numbers::pi * c / lambda_D1; }
    // Angular optical frequency of light at the given vacuum wavelength.
    double omega_of(double wavelength) const { return 2.0 * std::numbers::pi * c / wavelength; }

    // Throws InvalidArgument if any value is non-positive or non-finite.
    void validate() const;
};

inline const PhysicalConstants& default_constants() {
    static const PhysicalConstants k{};
    return k;
}

}  // namespace qmem
