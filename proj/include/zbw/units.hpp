#pragma once

#include <string>

#include "errors.hpp"

namespace zbw {

// Laboratory constants in eV / angstrom / second units. Dynamics runs in
// natural units (m_e = hbar = c = 1); these sets convert at the boundaries.
//
// The default "paper" set uses the rounded literals that the channeling
// reference arithmetic was done with, so golden numbers reproduce exactly;
// the "precise" set derives everything from CODATA inputs.
struct ConstantSet {
    std::string name;
    double mec2;      // electron rest energy, eV
    double c;         // speed of light, angstrom/s
    double hbar;      // reduced Planck constant, eV s
    double e2;        // Gaussian e^2, eV angstrom
    double lambda_e;  // zitter radius hbar / (2 m_e c), angstrom
    double omega_e;   // zitter frequency 2 m_e c^2 / hbar, 1/s

    double hbar_c() const { return hbar * c; }                 // eV angstrom
    // natural unit sizes expressed in lab units
    double length_unit() const { return hbar * c / mec2; }     // angstrom (= 2 lambda_e)
    double time_unit() const { return hbar / mec2; }           // seconds
    double energy_unit() const { return mec2; }                // eV
    double field_unit() const { return mec2 / length_unit(); } // eV/angstrom
};

inline ConstantSet paper_constants() {
    return {
        "paper",
        0.511e6,
        3.0e18,
        6.582119569e-16,
        14.4,
        1.9308e-3,
        1.5527e21,
    };
}

inline ConstantSet precise_constants() {
    ConstantSet s;
    s.name = "precise";
    s.mec2 = 510998.95069;
    s.c = 2.99792458e18;
    s.hbar = 6.582119569e-16;
    s.e2 = s.hbar_c() / 137.035999084;
    s.lambda_e = s.hbar_c() / (2.0 * s.mec2);
    s.omega_e = 2.0 * s.mec2 / s.hbar;
    return s;
}

inline ConstantSet constants_by_name(const std::string& name) {
    if (name == "paper") return paper_constants();
    if (name == "precise") return precise_constants();
    throw config_error("unknown constant set '" + name + "' (expected paper or precise)");
}

}  // namespace zbw
