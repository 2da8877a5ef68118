#pragma once

// Verification layer connecting the particle model to the real Dirac
// equation: analytic spinor fields, equation residuals, the frame of local
// observables, the projected (zitter) Dirac equation with its null charge
// current, and the gauge-algebra property of the projected mass term.
// Natural units m_e = hbar = c = 1 throughout; electron charge -1.

#include <array>
#include <functional>

#include "dynamics.hpp"
#include "errors.hpp"
#include "sta.hpp"

namespace zbw::dirac {

using sta::Mv;

// the phase plane of the plane-wave family, g2 g1 (= i sigma3)
Mv phase_plane();

// right projector 1/2 (1 + sigma2) selecting the electron component, and
// its complement 1/2 (1 - sigma2) selecting the neutrino component
Mv electron_projector();
Mv neutrino_projector();

// Spinor field with analytic coordinate partial derivatives. psi(x) is an
// even multivector; dpsi(x, mu) is the partial derivative along x^mu.
struct SpinorField {
    std::function<Mv(const Mv& x)> psi;
    std::function<Mv(const Mv& x, int mu)> dpsi;
};

// vector potential evaluator: grade-1 A(x)
using PotentialFn = std::function<Mv(const Mv& x)>;

PotentialFn zero_potential();

// family psi(x) = psi0 exp(phase_plane() p.x / hbar) with constant psi0, p
SpinorField plane_wave(const Mv& psi0, const Mv& p);

// Plane wave that solves both equation forms: psi0 = I R0 carries the
// duality angle that puts the momentum on the positive branch
// p = m_e R0 g0 ~R0.
struct PlaneWaveSolution {
    SpinorField field;
    Mv psi0;
    Mv p;
};
PlaneWaveSolution electron_plane_wave(const sta::Rotor& attitude);

// vector derivative gamma^mu d_mu psi (index raised by the metric)
Mv spinor_gradient(const SpinorField& field, const Mv& x);

// residual of the Dirac equation:
//   grad(psi) i sigma3 hbar - q A psi - m_e psi gamma0
Mv dirac_residual(const SpinorField& field, const PotentialFn& A, const Mv& x,
                  double q = dyn::kElectronCharge);

// field whose spinor is the projected psi+ = psi electron_projector()
SpinorField project_electron(const SpinorField& field);

// Residual of the projected equation, evaluated on psi+ = psi 1/2 (1+sigma2):
//   grad(psi+) i sigma3 hbar - q A psi+ sigma3 - m_e psi+ gamma0
// The result lies in the right ideal of the projector: residual times
// 1/2 (1 - sigma2) returns it unchanged, for any field.
Mv zitter_dirac_residual(const SpinorField& field, const PotentialFn& A, const Mv& x,
                         double q = dyn::kElectronCharge);

// Frame of local observables carried by the wave function at one event,
// from the canonical factorization psi = (rho e^(I beta))^(1/2) R.
struct LocalObservables {
    double rho;   // scalar density, >= 0
    double beta;  // duality angle
    sta::Vec4 v;  // velocity e0 = R g0 ~R
    sta::Vec4 s;  // spin vector (hbar/2) e3
    sta::Vec4 u;  // null velocity e0 + e2
    sta::Bivec S_bar;  // spin bivector (hbar/2) e2 e1 = i s v
    sta::Bivec S;      // null spin bivector (hbar/2) u e1, with the duality
                       // angle absorbed as a rotation of e1 toward e3
    sta::Vec4 J;       // charge current q rho u; null
    Mv rho_u;          // projected velocity density psi gamma+ ~psi = rho u
    Mv rho_S;          // projected spin density psi+ i sigma3 hbar ~psi+ = rho S
    // interaction energy densities with the field bivector passed in:
    // (1/2) <F psi i sigma3 hbar ~psi> and (1/2) <F psi+ i sigma3 hbar ~psi+>
    double interaction_density;
    double zitter_interaction_density;
};

LocalObservables local_observables(const SpinorField& field, const Mv& x,
                                   const Mv& F = Mv(), double q = dyn::kElectronCharge);

// Check of one candidate gauge element U acting by right multiplication:
// U must be even, unit, and leave the mass-term vector g0 invariant under
// ~U g0 U. The chi-only (pseudoscalar) subgroup must in addition commute
// with the electron projector, so it preserves the electron/neutrino split.
struct GaugeReport {
    Mv U;
    bool even = false;
    double unit_deviation = 0.0;    // distance of U ~U from a unit-modulus phase
    double gamma0_deviation = 0.0;  // |~U g0 U - g0|
    double split_deviation = 0.0;   // chi-only part: |P U_chi - U_chi P|
    bool passed = false;
};

// tolerance applied to every deviation in the report
inline constexpr double kGaugeTol = 1e-12;

GaugeReport gauge_element_check(const Mv& U);

// builds U = exp(i theta / 2) exp(I chi / 2) from the rotation generators
// i sigma_k and the pseudoscalar, then checks it
GaugeReport electroweak_gauge_check(const std::array<double, 3>& theta, double chi);

}  // namespace zbw::dirac
