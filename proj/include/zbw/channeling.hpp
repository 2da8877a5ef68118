#pragma once

// Crystal channeling in the continuum-string approximation: transverse
// Lindhard potential, channeled-orbit frequencies, Floquet analysis of the
// longitudinally modulated radial motion, the zitter-driven parametric
// resonance, and beam-momentum scans.
//
// This module works in laboratory units (eV, angstrom, second; beam momenta
// in MeV/c) with the constant sets from units.hpp. The make_*_field bridges
// at the bottom convert a lab potential into the natural units of the
// dynamics module.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "units.hpp"

namespace zbw::chan {

// ---------- crystal and beam parameters ----------

struct ChannelParams {
    double d = 3.84;                // interatomic spacing along the string, angstrom
    double Z = 14.0;                // atomic number
    double k = 52.5;                // string coupling Z e^2 / d, eV
    double a = 0.190;               // Fermi-Thomas screening radius, angstrom
    double C2 = 3.0;                // screening constant squared
    double crystal_length = 1.0e4;  // angstrom

    double Ca() const { return std::sqrt(C2) * a; }
    double atoms() const { return crystal_length / d; }
};

// construct a parameter set honouring the coupling invariant k = Z e^2 / d
ChannelParams params_from_z(double Z, double d, const ConstantSet& cs);

struct BeamParams {
    double p = 0.0;               // beam momentum, MeV/c
    double gamma = 0.0;           // time dilation factor E / (m_e c^2)
    double M = 0.0;               // transverse effective mass gamma m_e, eV s^2 / angstrom^2
    double omega0 = 0.0;          // atomic passage frequency 2 pi zdot / d, 1/s
    double zdot = 0.0;            // longitudinal speed, angstrom/s
    double p_second_order = 0.0;  // doubled momentum 2p (second-order condition)
};

BeamParams beam_from_momentum(double p_mev, double d, const ConstantSet& cs);

// beam at the clock resonance p = d (m_e c)^2 / h for spacing d
BeamParams beam_kinematics(double d, const ConstantSet& cs);

// ---------- string potential ----------

struct Lindhard {
    double U;   // potential, eV (negative well for the electron)
    double U1;  // dU/dr, eV/angstrom
    double U2;  // d2U/dr2, eV/angstrom^2
};

// continuum potential U = -k ln(1 + (Ca/r)^2) with closed-form derivatives
Lindhard lindhard(double r, const ChannelParams& cp);

// single-atom screened potential whose infinite-string average reproduces
// the continuum form above (electron sign)
double lindhard_atom_potential(double R, const ChannelParams& cp, const ConstantSet& cs);

// thin-string average (1/d) Int v_atom(sqrt(r^2 + z^2)) dz over the whole
// line, by adaptive quadrature with interval-doubling truncation. Throws
// invariant_error carrying a residual estimate when the tail fails to
// converge (e.g. an unscreened Coulomb potential).
double string_average(const std::function<double(double)>& v_atom, double d, double r);

// screened effective radius R = -U1/U2
double effective_radius(double r, const ChannelParams& cp);

// ---------- channeled orbits ----------

struct CircularOrbit {
    double thetadot0 = 0.0;    // angular rate of the circular orbit, 1/s
    double L = 0.0;            // angular momentum M r0^2 thetadot0, eV s
    double Omega0 = 0.0;       // radial oscillation rate about the orbit, 1/s
    double revolutions = 0.0;  // turns completed while crossing crystal_length
};

// circular orbit balance thetadot0^2 = U1 / (M r0) and its radial normal
// mode Omega0^2 = (3 U1 + r0 U2) / (M r0)
CircularOrbit circular_orbit(double r0, const BeamParams& beam, const ChannelParams& cp);

// transverse two-dimensional orbit integration in lab time
struct OrbitSample {
    double t = 0.0;
    double x = 0.0, y = 0.0;    // angstrom
    double vx = 0.0, vy = 0.0;  // angstrom/s
};

struct OrbitRun {
    std::vector<OrbitSample> samples;
    double L_drift = 0.0;  // worst relative angular-momentum drift
    double r_min = 0.0;
    double r_max = 0.0;
};

OrbitRun integrate_orbit(double r0, double thetadot0, const BeamParams& beam,
                         const ChannelParams& cp, double t_end, long steps, long stride = 16);

// slow-times-fast factorization x = a cos(Omega t) cos(omega0 t)
double modulated_orbit(double a, double Omega, double omega0, double t);

struct SplitFrequencies {
    double plus = 0.0;   // omega0 + Omega
    double minus = 0.0;  // omega0 - Omega
};

SplitFrequencies split_frequencies(double omega0, double Omega);

// ---------- zitter drive and parametric resonance ----------

struct PerturbationTerms {
    double force_r = 0.0;        // radial drive lambda_e U2 P cos(omega_z t / gamma + delta), eV/angstrom
    double omega_z = 0.0;        // shifted rotation frequency at time t, 1/s
    double shift_modulus = 0.0;  // gamma U1 c / (m_e c^2), 1/s
    double h = 0.0;              // modulation depth lambda_e / R
    double R = 0.0;              // effective radius at r, angstrom
};

PerturbationTerms zitter_perturbation(double r, const BeamParams& beam, const ChannelParams& cp,
                                      double t, double delta, const ConstantSet& cs);

struct ResonanceBand {
    std::complex<double> s;         // growth exponent, 1/s (imaginary when stable)
    double width = 0.0;             // full band width h omega0, rad/s
    double per_atom = 0.0;          // Re s per atomic period 2 pi / omega0
    double atoms_to_double = 0.0;   // ln 2 / per_atom (infinite when stable)
    bool stable = true;
};

// two-sideband resonance solution s^2 = [(h omega0 / 2)^2 - epsilon^2] / 4
// for a drive at omega = 2 omega0 + epsilon
ResonanceBand parametric_resonance(double h, double omega0, double epsilon);

// band width mapped onto beam momentum, Delta p = h p
double momentum_width(double h, double p_mev);

// ---------- Floquet analysis of x'' + q (1 + h cos(omega t)) x = 0 ----------

struct FloquetResult {
    std::complex<double> s;            // adopted exponent (monodromy route), 1/s
    std::complex<double> s_recursion;  // harmonic-series route; NaN when recursion_ok is false
    bool recursion_ok = false;
    bool methods_agree = false;
    std::vector<std::complex<double>> coeff_ratios;  // a_n / a_{n-1}, n = 1..6
    bool stable = true;
    double width = 0.0;  // h sqrt(q) when the drive sits inside the principal band
};

// The exponent is computed two independent ways: by the truncated three-term
// recursion of the harmonic series (solved through its determinant) and by
// integrating the 2x2 fundamental system over one period. Both values are
// reported; disagreement beyond 1% clears methods_agree instead of silently
// picking one. Exponents are folded to Re s >= 0, Im s in [0, omega/2].
FloquetResult floquet_exponent(double q, double h, double omega);

// ---------- radial integration and envelope fit ----------

struct RadialOptions {
    long steps_per_period = 1536;  // RK4 resolution per drive (or natural) period
    bool slow_factor = false;      // multiply the restoring term by 1 + cos(sqrt(q) t)
    double fit_fraction = 0.8;     // trailing fraction of envelope points used in the fit
    int max_refinements = 2;       // step halvings the sanity check may request
    long stride = 32;              // decimation of the returned samples
    double energy_tol_per_period = 1e-12;  // conservative-case energy budget
};

struct RadialRun {
    std::vector<double> t, x, v;          // decimated trajectory
    std::vector<double> env_t, env;       // per-period amplitude envelope
    double exponent = 0.0;                // fitted growth exponent, 1/s
    double exponent_per_period = 0.0;     // exponent * 2 pi / sqrt(q)
    double fit_residual = 0.0;            // rms residual of the log-envelope fit
    double energy_drift = 0.0;            // relative drift (conservative case only)
    long steps = 0;
    double dt = 0.0;
};

// RK4 integration of x'' + q (1 + cos(sqrt(q) t))_opt (1 + h cos(omega t)) x = 0
// with an envelope fit of the amplitude growth. A step-size sanity check
// (half-step comparison, plus energy conservation in the undriven case)
// refines the step up to max_refinements times and then throws.
RadialRun integrate_radial(double x0, double v0, double q, double h, double omega,
                           double t_end, const RadialOptions& opt = {});

// ---------- momentum scan ----------

struct ScanRow {
    double p = 0.0;                // MeV/c
    double growth_per_atom = 0.0;  // best growth exponent per atomic period over the radii
    double atoms_to_double = 0.0;
    bool ejected = false;          // growth factor over the crystal exceeds the threshold
    double ejected_fraction = 0.0; // fraction of sampled radii above the threshold
};

struct ScanOptions {
    int order = 1;           // 1: drive at 2 omega0 (closed form); 2: drive near omega0 (Floquet)
    double threshold = 8.0;  // amplitude growth factor counting as ejection
    int workers = 4;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    double center = 0.0;  // interpolated growth maximum, MeV/c
    double fwhm = 0.0;    // full width at half maximum of the growth curve, MeV/c
    int peaks = 0;        // number of contiguous above-half-maximum clusters
};

// default orbit-radius samples: uniform over [0.15, 0.9] angstrom
std::vector<double> default_radii(int n = 16);

ScanResult momentum_scan(double p_min, double p_max, int steps, const std::vector<double>& radii,
                         const ChannelParams& cp, const ConstantSet& cs,
                         const ScanOptions& opt = {});

// ---------- natural-units field bridge ----------

// lab profile {V, V', V''} in eV and angstroms -> static field in natural units
dyn::StaticRadialField make_static_field(const std::function<std::array<double, 3>(double)>& lab_profile,
                                         const ConstantSet& cs, double q = dyn::kElectronCharge);

dyn::StaticRadialField make_lindhard_field(const ChannelParams& cp, const ConstantSet& cs,
                                           double q = dyn::kElectronCharge);

}  // namespace zbw::chan
