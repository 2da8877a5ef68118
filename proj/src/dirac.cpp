#include "zbw/dirac.hpp"

#include <cmath>

namespace zbw::dirac {

using sta::coeff_norm;
using sta::gamma;
using sta::grade;
using sta::is_even;
using sta::is_grade;
using sta::Mv;
using sta::pseudoscalar;
using sta::reverse;
using sta::scalar_product;
using sta::sigma;

Mv phase_plane() { return gamma(2) * gamma(1); }

Mv electron_projector() { return (Mv::scalar(1.0) + sigma(2)) * 0.5; }

Mv neutrino_projector() { return (Mv::scalar(1.0) - sigma(2)) * 0.5; }

PotentialFn zero_potential() {
    return [](const Mv&) { return Mv(); };
}

SpinorField plane_wave(const Mv& psi0, const Mv& p) {
    if (!is_even(psi0)) throw domain_error("plane_wave: psi0 is not even");
    if (!is_grade(p, 1)) throw domain_error("plane_wave: momentum is not a vector");
    const Mv plane = phase_plane();
    // exp(plane * theta) = cos(theta) + plane sin(theta), since plane^2 = -1
    auto rotor_at = [plane, p](const Mv& x) {
        const double theta = scalar_product(p, x);
        return Mv::scalar(std::cos(theta)) + plane * std::sin(theta);
    };
    SpinorField f;
    f.psi = [psi0, rotor_at](const Mv& x) { return psi0 * rotor_at(x); };
    f.dpsi = [psi0, rotor_at, plane, p](const Mv& x, int mu) {
        // d(p.x)/dx^mu is the covariant component of p
        const double p_mu = (mu == 0) ? p.c[1] : -p.c[1 + mu];
        return psi0 * plane * rotor_at(x) * p_mu;
    };
    return f;
}

PlaneWaveSolution electron_plane_wave(const sta::Rotor& attitude) {
    const Mv psi0 = pseudoscalar() * attitude.mv();
    const Mv p = attitude.apply(gamma(0)) * dyn::kMe;
    return {plane_wave(psi0, p), psi0, p};
}

Mv spinor_gradient(const SpinorField& field, const Mv& x) {
    Mv out;
    for (int mu = 0; mu < 4; ++mu) {
        const double sign = (mu == 0) ? 1.0 : -1.0;  // index raised by the metric
        out += gamma(mu) * field.dpsi(x, mu) * sign;
    }
    return out;
}

Mv dirac_residual(const SpinorField& field, const PotentialFn& A, const Mv& x, double q) {
    const Mv psi = field.psi(x);
    return spinor_gradient(field, x) * phase_plane() - A(x) * psi * q - psi * gamma(0);
}

SpinorField project_electron(const SpinorField& field) {
    const Mv P = electron_projector();
    SpinorField out;
    out.psi = [field, P](const Mv& x) { return field.psi(x) * P; };
    out.dpsi = [field, P](const Mv& x, int mu) { return field.dpsi(x, mu) * P; };
    return out;
}

Mv zitter_dirac_residual(const SpinorField& field, const PotentialFn& A, const Mv& x,
                         double q) {
    const SpinorField proj = project_electron(field);
    const Mv psi_p = proj.psi(x);
    return spinor_gradient(proj, x) * phase_plane() - A(x) * psi_p * sigma(3) * q -
           psi_p * gamma(0);
}

LocalObservables local_observables(const SpinorField& field, const Mv& x, const Mv& F,
                                   double q) {
    const Mv psi = field.psi(x);
    if (!is_even(psi))
        throw domain_error("local_observables: the spinor is not even at the given event");
    if (!is_grade(F, 2))
        throw domain_error("local_observables: the field argument is not a bivector");
    const Mv n = psi * reverse(psi);
    const double scale = coeff_norm(psi);
    if (std::hypot(n.c[0], n.c[15]) <= 1e-12 * std::max(1.0, scale * scale))
        throw domain_error("local_observables: the density vanishes at the given event");

    const sta::CanonicalForm form = sta::canonical_decompose(psi);
    const dyn::Frame e = dyn::frame_of(form.rotor.mv());

    const Mv v = e.e0;
    const Mv s = e.e3 * 0.5;
    const Mv u = e.e0 + e.e2;
    const Mv S_bar = e.e2 * e.e1 * 0.5;
    // duality angle absorbed as a rotation of e1 toward e3
    const Mv e1_rot = e.e1 * std::cos(form.beta) + e.e3 * std::sin(form.beta);
    const Mv S = u * e1_rot * 0.5;
    const Mv J = u * (q * form.rho);

    const Mv psi_p = psi * electron_projector();
    const Mv rho_u = psi * (gamma(0) + gamma(2)) * reverse(psi);
    const Mv rho_S = psi_p * phase_plane() * reverse(psi_p);

    return LocalObservables{
        form.rho,
        form.beta,
        sta::Vec4(v),
        sta::Vec4(s),
        sta::Vec4(u),
        sta::Bivec(S_bar),
        sta::Bivec(S),
        sta::Vec4(J),
        rho_u,
        rho_S,
        0.5 * scalar_product(F, psi * phase_plane() * reverse(psi)),
        0.5 * scalar_product(F, rho_S),
    };
}

GaugeReport gauge_element_check(const Mv& U) {
    GaugeReport r;
    r.U = U;
    r.even = is_even(U);
    // U reverse(U) must be a unit-modulus scalar-plus-pseudoscalar: the
    // hypercharge factor exp(i chi/2) reverses to itself, so the product
    // carries a pseudoscalar phase rather than collapsing to 1.
    const Mv n = U * reverse(U);
    Mv residue = n;
    residue.c[0] = 0.0;
    residue.c[15] = 0.0;
    r.unit_deviation = std::hypot(std::hypot(n.c[0], n.c[15]) - 1.0, coeff_norm(residue));
    r.gamma0_deviation = coeff_norm(reverse(U) * gamma(0) * U - gamma(0));
    r.split_deviation = 0.0;
    r.passed = r.even && r.unit_deviation <= kGaugeTol && r.gamma0_deviation <= kGaugeTol;
    return r;
}

GaugeReport electroweak_gauge_check(const std::array<double, 3>& theta, double chi) {
    const Mv i = pseudoscalar();
    Mv generator;
    for (int k = 0; k < 3; ++k) generator += i * sigma(k + 1) * (0.5 * theta[k]);
    const Mv U_theta = sta::exp_bivector(generator);
    const Mv U_chi = Mv::scalar(std::cos(chi / 2.0)) + i * std::sin(chi / 2.0);

    GaugeReport r = gauge_element_check(U_theta * U_chi);
    const Mv P = electron_projector();
    r.split_deviation = coeff_norm(P * U_chi - U_chi * P);
    r.passed = r.passed && r.split_deviation <= kGaugeTol;
    return r;
}

}  // namespace zbw::dirac
