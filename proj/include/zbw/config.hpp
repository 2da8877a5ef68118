#pragma once

// Run configuration: a flat JSON document with strict validation, canonical
// serialization, and a stable content hash stamped into output headers.

#include <array>
#include <cstdint>
#include <string>

namespace zbw::io {

struct RunConfig {
    // physical setup
    std::string constants = "paper";  // constant set: paper | precise
    double d_angstrom = 3.84;         // interatomic spacing along the string
    double Z = 14.0;                  // atomic number of the string atoms
    double crystal_length_angstrom = 1.0e4;
    double r0_angstrom = 0.5;  // transverse orbit radius for orbit runs
    double p_mev = 0.0;          // beam momentum; 0 selects the clock resonance

    // trajectory integration
    std::string mode = "lightlike";  // lightlike | timelike
    std::string field = "none";      // none | uniform | lindhard
    // uniform field components E1,E2,E3,B1,B2,B3 in natural units
    std::array<double, 6> uniform_field{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    double periods = 100.0;  // run length in internal periods
    long steps_per_period = 256;
    long stride = 16;             // decimation of emitted trajectory samples
    double tol_invariant = 1e-8;  // drift gate: exceeding it fails the run

    // momentum scan
    double p_min_mev = 79.0;
    double p_max_mev = 83.0;
    long scan_steps = 97;
    long scan_order = 1;  // 1: drive at twice the passage frequency; 2: near it
    double ejection_threshold = 8.0;
    long workers = 4;

    // parametric-stability map
    double floquet_q = 1.0;
    double floquet_h = 9.283e-3;
    double floquet_omega_min = 2.0;
    double floquet_omega_max = 0.0;  // 0: single point at floquet_omega_min
    long floquet_points = 1;

    // spinor equation checks
    long dirac_samples = 1000;

    // output
    std::string units = "natural";  // natural | lab columns in trajectory files
    std::string out_dir = ".";
};

// Parse and validate a JSON document. Unknown keys, wrong types, and
// out-of-range values raise config_error naming the offending key.
RunConfig parse_config(const std::string& text);

// Canonical serialization (sorted keys, round-trip exact numbers).
// parse_config(serialize_config(c)) reproduces c field for field.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a 64-bit hash of the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace zbw::io
