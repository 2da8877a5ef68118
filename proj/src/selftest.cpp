#include "zbw/selftest.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <ostream>
#include <random>
#include <string>

#include "zbw/channeling.hpp"
#include "zbw/config.hpp"
#include "zbw/dirac.hpp"
#include "zbw/dynamics.hpp"
#include "zbw/errors.hpp"
#include "zbw/sta.hpp"
#include "zbw/units.hpp"

namespace zbw::io {

namespace {

using sta::coeff_norm;
using sta::Mv;

constexpr double kPi = 3.14159265358979323846;

std::string short_num(double x, int precision = 6) {
    std::array<char, 48> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                                   std::chars_format::general, precision);
    return std::string(buf.data(), res.ptr);
}

struct Reporter {
    std::ostream& out;
    SelftestCounts counts;

    void record(const std::string& name, double value, double tol, const std::string& detail) {
        const bool ok = value <= tol;
        out << (ok ? "  ok   " : "  FAIL ") << name << ": " << detail << "\n";
        if (ok)
            ++counts.passed;
        else
            ++counts.failed;
    }

    // residual-style check: value must not exceed tol
    void check(const std::string& name, double value, double tol) {
        record(name, value, tol, short_num(value) + " (tolerance " + short_num(tol) + ")");
    }

    // tabulated-value check: relative deviation from `expected` within rel_tol
    void check_rel(const std::string& name, double value, double expected, double rel_tol) {
        const double dev = std::abs(value - expected) / std::abs(expected);
        record(name, dev, rel_tol,
               short_num(value) + " vs " + short_num(expected) + " (relative deviation " +
                   short_num(dev) + ", tolerance " + short_num(rel_tol) + ")");
    }

    // windowed check: |value - center| within half_width
    void check_window(const std::string& name, double value, double center, double half_width) {
        record(name, std::abs(value - center), half_width,
               short_num(value) + " vs " + short_num(center) + " +- " + short_num(half_width));
    }

    void note(const std::string& text) {
        out << "  note " << text << "\n";
        ++counts.notes;
    }
};

// ---------- deterministic samplers ----------

double pick(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Mv random_mv(std::mt19937& rng, double scale) {
    Mv a;
    for (int i = 0; i < sta::kBlades; ++i) a.c[i] = pick(rng, -scale, scale);
    return a;
}

Mv random_bivector(std::mt19937& rng, double scale) {
    Mv b;
    for (int i = 5; i <= 10; ++i) b.c[i] = pick(rng, -scale, scale);
    return b;
}

Mv random_vector(std::mt19937& rng, double scale) {
    Mv v;
    for (int mu = 0; mu < 4; ++mu) v.c[1 + mu] = pick(rng, -scale, scale);
    return v;
}

Mv random_even(std::mt19937& rng) {
    const double beta = pick(rng, -3.0, 3.0);
    const double rho = pick(rng, 0.3, 2.5);
    const Mv phase =
        Mv::scalar(std::cos(beta / 2.0)) + sta::pseudoscalar() * std::sin(beta / 2.0);
    return phase * sta::exp_bivector(random_bivector(rng, 0.8)) * std::sqrt(rho);
}

// ---------- section: algebra ----------

void algebra_section(Reporter& rep) {
    rep.out << "[algebra]\n";
    std::mt19937 rng(101);

    double worst_metric = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            const double eta = mu == nu ? (mu == 0 ? 1.0 : -1.0) : 0.0;
            const Mv anti = sta::gamma(mu) * sta::gamma(nu) + sta::gamma(nu) * sta::gamma(mu) -
                            Mv::scalar(2.0 * eta);
            worst_metric = std::max(worst_metric, sta::max_abs_coeff(anti));
        }
    }
    rep.check("generator anticommutators reproduce the metric", worst_metric, 0.0);

    double worst_assoc = 0.0, worst_rev = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Mv a = random_mv(rng, 1.0), b = random_mv(rng, 1.0), c = random_mv(rng, 1.0);
        const double scale = coeff_norm(a) * coeff_norm(b) * coeff_norm(c) + 1.0;
        worst_assoc = std::max(worst_assoc, coeff_norm((a * b) * c - a * (b * c)) / scale);
        worst_rev = std::max(worst_rev, coeff_norm(sta::reverse(a * b) -
                                                   sta::reverse(b) * sta::reverse(a)) /
                                            (coeff_norm(a) * coeff_norm(b) + 1.0));
    }
    rep.check("product associativity (50 random triples)", worst_assoc, 1e-12);
    rep.check("reversion is an anti-automorphism (50 random pairs)", worst_rev, 1e-12);

    double worst_unit = 0.0, worst_iso = 0.0, worst_round = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Mv r = sta::exp_bivector(random_bivector(rng, 0.8));
        worst_unit = std::max(worst_unit, coeff_norm(r * sta::reverse(r) - Mv::scalar(1.0)));
        const Mv v = random_vector(rng, 2.0);
        worst_iso = std::max(worst_iso,
                             std::abs(sta::scalar_product(sta::sandwich(r, v), sta::sandwich(r, v)) -
                                      sta::scalar_product(v, v)) /
                                 (coeff_norm(v) * coeff_norm(v) + 1.0));

        const Mv psi = random_even(rng);
        const sta::CanonicalForm form = sta::canonical_decompose(psi);
        const Mv phase = Mv::scalar(std::cos(form.beta / 2.0)) +
                         sta::pseudoscalar() * std::sin(form.beta / 2.0);
        const Mv rebuilt = phase * form.rotor.mv() * std::sqrt(form.rho);
        worst_round = std::max(worst_round, coeff_norm(rebuilt - psi) / coeff_norm(psi));
    }
    rep.check("bivector exponentials are unit rotors (50 samples)", worst_unit, 1e-12);
    rep.check("rotor action preserves vector norms (50 samples)", worst_iso, 1e-12);
    rep.check("canonical factorization round trip (50 samples)", worst_round, 1e-12);
}

// ---------- section: dynamics ----------

dyn::ParticleState on_shell_state(const dyn::Field& field, const Mv& z0) {
    const Mv S0 = 0.5 * sta::outer(sta::gamma(0) + sta::gamma(2), sta::gamma(1));
    const double phi0 = dyn::spin_potential(S0, field.F(z0), dyn::kElectronCharge);
    return dyn::make_state(z0, Mv::scalar(1.0), sta::gamma(0) - phi0 * sta::gamma(2),
                           dyn::kElectronCharge);
}

double worst_monitor_drift(const dyn::Monitors& mon) {
    return std::max({mon.kappa1_drift, mon.mass_integral_drift, mon.rotor_norm_drift,
                     mon.gauge_drift, mon.energy_drift});
}

void dynamics_section(Reporter& rep, const RunConfig& cfg) {
    rep.out << "[dynamics]\n";

    // free helix against the closed form
    {
        const Mv p = sta::gamma(0);
        const Mv S0 = 0.5 * sta::outer(sta::gamma(0) + sta::gamma(2), sta::gamma(1));
        const Mv z0;
        const dyn::FreeSolution start =
            dyn::free_solution(p, S0, z0, dyn::VelocityMode::lightlike, 0.0);
        const dyn::ZeroField field;
        const long per_period = 2500;
        double worst = 0.0, worst_radius = 0.0;
        dyn::SampleSink sink = [&](const dyn::Sample& smp) {
            const dyn::FreeSolution ref =
                dyn::free_solution(p, S0, z0, dyn::VelocityMode::lightlike, smp.state.tau);
            worst = std::max(worst, coeff_norm(smp.state.z - ref.state.z));
            worst = std::max(worst, coeff_norm(smp.state.p - ref.state.p));
            const dyn::Observables o = dyn::observables(smp.state);
            const Mv radius = sta::inner(o.S, smp.state.p);
            worst_radius = std::max(
                worst_radius,
                std::abs(std::sqrt(-sta::scalar_product(radius, radius)) - dyn::kLambdaE));
        };
        dyn::integrate(start.state, field, kPi / per_period, 10 * per_period, nullptr, &sink, 25);
        rep.check("free helix against the closed form, 10 periods", worst, 1e-9);
        rep.check("helix radius stays at the half Compton wavelength", worst_radius, 1e-10);
    }

    // invariant drifts across the three driven field shapes
    {
        const dyn::UniformField electric(5e-4 * sta::sigma(1));
        const dyn::UniformField magnetic(1e-3 * sta::dual(sta::sigma(3)));
        const double kappa = 1e-6;
        const dyn::StaticRadialField radial(
            [kappa](double r) {
                return std::array<double, 3>{0.5 * kappa * r * r, kappa * r, kappa};
            },
            dyn::kElectronCharge);
        const struct {
            const char* name;
            const dyn::Field& field;
            Mv z0;
        } cases[] = {
            {"uniform electric field", electric, Mv()},
            {"uniform magnetic field", magnetic, Mv()},
            {"static string potential", radial, 50.0 * sta::gamma(1)},
        };
        for (const auto& cs_case : cases) {
            dyn::Monitors mon;
            const dyn::ParticleState end = dyn::integrate(
                on_shell_state(cs_case.field, cs_case.z0), cs_case.field, -1.0, 2000, &mon);
            rep.check(std::string("invariant drifts, ") + cs_case.name + " (10 periods)",
                      worst_monitor_drift(mon), cfg.tol_invariant);
            const dyn::Observables o = dyn::observables(end);
            rep.check(std::string("velocity stays null, ") + cs_case.name,
                      std::abs(sta::scalar_product(o.u, o.u)), 1e-12);
            rep.check(std::string("spin bivector stays null, ") + cs_case.name,
                      coeff_norm(o.S * o.S), 1e-12);
        }
    }

    // uniform-field closed form
    {
        const Mv f = 1e-3 * sta::dual(sta::sigma(3));
        const dyn::UniformField field(f);
        const dyn::ParticleState start = on_shell_state(field, Mv());
        const long per_period = 3200;
        double worst = 0.0, worst_pi2 = 0.0;
        const dyn::Observables o0 = dyn::observables(start);
        const Mv pi0 = start.p - o0.u;
        const double pi2_0 = sta::scalar_product(pi0, pi0);
        dyn::SampleSink sink = [&](const dyn::Sample& smp) {
            const dyn::Observables o = dyn::observables(smp.state);
            const Mv pi = smp.state.p - o.u;
            worst_pi2 = std::max(worst_pi2, std::abs(sta::scalar_product(pi, pi) - pi2_0));
            if (smp.step % per_period != 0) return;  // closed form only at period marks
            const dyn::ConstantFieldSolution ref =
                dyn::constant_field_solution(start, f, smp.state.tau);
            worst = std::max(worst, coeff_norm(smp.state.z - ref.state.z));
            worst = std::max(worst, coeff_norm(smp.state.p - ref.state.p));
        };
        const double m0 = o0.m;
        dyn::integrate(start, field, (kPi / m0) / per_period, 5 * per_period, nullptr, &sink, 32);
        rep.check("uniform-field closed form, 5 periods", worst, 1e-8);
        rep.check("kinetic-momentum invariant drift", worst_pi2, 1e-9);
    }
}

// ---------- section: channeling ----------

void channeling_section(Reporter& rep, const RunConfig& cfg, const ConstantSet& cs) {
    rep.out << "[channeling]\n";
    const chan::ChannelParams cp = chan::params_from_z(cfg.Z, cfg.d_angstrom, cs);

    const chan::Lindhard l = chan::lindhard(0.5, cp);
    rep.check_rel("string potential U at 0.5 A [eV]", l.U, -18.9, 0.01);
    rep.check_rel("string potential r U' at 0.5 A [eV]", 0.5 * l.U1, 31.7, 0.01);
    rep.check_rel("string potential r^2 U'' at 0.5 A [eV]", 0.25 * l.U2, -76.0, 0.01);

    const chan::BeamParams beam = chan::beam_kinematics(cfg.d_angstrom, cs);
    rep.check_rel("clock-resonance beam momentum [MeV/c]", beam.p, 80.874, 1e-3);
    rep.check_rel("beam time-dilation factor", beam.gamma, 158.0, 0.01);
    rep.check_rel("second-order beam momentum [MeV/c]", beam.p_second_order, 161.7, 1e-3);

    const chan::PerturbationTerms pt = chan::zitter_perturbation(0.5, beam, cp, 0.0, 0.0, cs);
    rep.check_rel("modulation depth h at 0.5 A", pt.h, 9.283e-3, 0.01);
    rep.check_rel("effective screened radius at 0.5 A [A]", pt.R, 0.208, 0.01);
    rep.check_rel("resonant momentum width [MeV/c]", chan::momentum_width(pt.h, beam.p), 0.751,
                  0.02);

    const chan::ResonanceBand band = chan::parametric_resonance(pt.h, beam.omega0, 0.0);
    rep.check_rel("band-center growth per atomic period", band.per_atom, 1.46e-2, 0.01);
    rep.check_window("atomic periods to double the amplitude", band.atoms_to_double, 47.0, 3.0);

    const chan::FloquetResult f = chan::floquet_exponent(1.0, 0.05, 2.0);
    rep.check("parametric map: the two exponent routes agree",
              (f.recursion_ok && f.methods_agree) ? 0.0 : 1.0, 0.0);
    rep.check_rel("band-center exponent vs the two-sideband form", f.s.real(), 0.05 / 4.0, 0.02);
}

// ---------- section: spinor bridge ----------

void dirac_section(Reporter& rep) {
    rep.out << "[spinor bridge]\n";
    std::mt19937 rng(404);
    const auto A = dirac::zero_potential();

    double worst_standard = 0.0, worst_projected = 0.0, worst_identity = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const sta::Rotor attitude(sta::exp_bivector(random_bivector(rng, 0.8)));
        const dirac::PlaneWaveSolution sol = dirac::electron_plane_wave(attitude);
        for (int i = 0; i < 3; ++i) {
            const Mv x = random_vector(rng, 3.0);
            worst_standard =
                std::max(worst_standard, coeff_norm(dirac::dirac_residual(sol.field, A, x)));
            worst_projected = std::max(
                worst_projected, coeff_norm(dirac::zitter_dirac_residual(sol.field, A, x)));
            const dirac::LocalObservables obs = dirac::local_observables(sol.field, x);
            const Mv e2 = obs.u.mv() - obs.v.mv();
            const Mv identity = (Mv::scalar(1.0) - e2 * obs.v.mv()) * dyn::kMe;
            worst_identity =
                std::max(worst_identity, coeff_norm(sol.p * obs.u.mv() - identity));
        }
    }
    rep.check("plane-wave residual, standard equation", worst_standard, 1e-12);
    rep.check("plane-wave residual, projected equation", worst_projected, 1e-12);
    rep.check("momentum-velocity frame identity", worst_identity, 1e-12);

    double worst_gauge = 0.0;
    bool all_gauge = true;
    for (int i = 0; i < 200; ++i) {
        const std::array<double, 3> theta{pick(rng, -3.0, 3.0), pick(rng, -3.0, 3.0),
                                          pick(rng, -3.0, 3.0)};
        const dirac::GaugeReport r = dirac::electroweak_gauge_check(theta, pick(rng, -3.0, 3.0));
        all_gauge = all_gauge && r.passed;
        worst_gauge = std::max(worst_gauge, r.gamma0_deviation);
    }
    rep.check("mass-term invariance over 200 gauge elements",
              all_gauge ? worst_gauge : 1.0, 1e-12);

    double worst_reduction = 0.0;
    for (int i = 0; i < 20; ++i) {
        const dirac::SpinorField field =
            dirac::plane_wave(random_even(rng), random_vector(rng, 1.5));
        const dirac::LocalObservables obs = dirac::local_observables(field, random_vector(rng, 3.0));
        worst_reduction = std::max(
            worst_reduction, coeff_norm(obs.rho_S - obs.S.mv() * obs.rho) / obs.rho);
    }
    rep.check("projected spin density reduces to the null spin plane", worst_reduction, 1e-10);
}

// ---------- section: documented discrepancies ----------

void discrepancy_section(Reporter& rep, const RunConfig& cfg, const ConstantSet& cs) {
    rep.out << "[discrepancies]\n";
    const chan::ChannelParams cp = chan::params_from_z(cfg.Z, cfg.d_angstrom, cs);
    const chan::BeamParams beam = chan::beam_kinematics(cfg.d_angstrom, cs);
    // the tabulated orbit values are all quoted at the r0 = 0.5 A worked example
    const double r0 = 0.5;
    const chan::CircularOrbit orb = chan::circular_orbit(r0, beam, cp);
    const chan::Lindhard l = chan::lindhard(r0, cp);

    // 1: slow-orbit modulation rate, adjudicated by a monodromy integration
    {
        const chan::FloquetResult mono =
            chan::floquet_exponent(orb.Omega0 * orb.Omega0, 1.0, beam.omega0);
        rep.note(
            "slow-orbit modulation rate: the tabulated coefficient Omega^2 = (3/2) Omega0^2 "
            "conflicts with the quoted rate 0.857e-3 omega0 (= Omega0); a monodromy "
            "integration of the fully modulated radial equation gives Im s / Omega0 = " +
            short_num(mono.s.imag() / orb.Omega0, 9) +
            ", so Omega = Omega0 is adopted and the (3/2) coefficient is rejected");
    }

    // 2: channeled-orbit frequency table vs the governing formulas
    {
        const double rev_per_um = orb.revolutions * 1.0e4 / cp.crystal_length;
        const double alt =
            std::sqrt((r0 * l.U1 - l.U) / (beam.M * r0 * r0));
        rep.note(
            "channeled-orbit frequencies at r0 = " + short_num(r0) +
            " A: tabulated thetadot0 = 4.75e15 1/s, Omega0 = 4.21e15 1/s, 2.52 rev/um; the "
            "governing formulas give " +
            short_num(orb.thetadot0) + " 1/s, " + short_num(orb.Omega0) + " 1/s, " +
            short_num(rev_per_um) +
            " rev/um; the tabulated circular rate instead matches sqrt((r0 U' - U) / (M r0^2)) "
            "= " +
            short_num(alt) + " 1/s to " + short_num(std::abs(alt / 4.75e15 - 1.0)) +
            " relative");
    }

    // 3: rotation-rate shift modulus
    {
        const chan::PerturbationTerms pt = chan::zitter_perturbation(r0, beam, cp, 0.0, 0.0, cs);
        rep.note(
            "rotation-rate shift modulus: tabulated 1.96e16 1/s; the governing expression "
            "gamma U' c / (m_e c^2) gives " +
            short_num(pt.shift_modulus) + " 1/s at r0 = " + short_num(r0) +
            " A, a factor " + short_num(pt.shift_modulus / 1.96e16) +
            " larger, consistent with the speed of light entering once as 1e18 instead of "
            "3e18 angstrom/s");
    }

    // 4: separated closed form in a homogeneous field
    {
        const Mv axis_b = 1e-3 * sta::dual(sta::sigma(3));
        const double e_perp = 1e-6;
        const auto worst_dev = [](const Mv& f) {
            const dyn::UniformField field(f);
            const dyn::ParticleState start = on_shell_state(field, Mv());
            const long per_period = 3200;
            double worst = 0.0;
            // the closed form integrates its position quadrature from tau = 0,
            // so evaluate it at period boundaries rather than every sample
            dyn::SampleSink sink = [&](const dyn::Sample& smp) {
                const dyn::ConstantFieldSolution ref =
                    dyn::constant_field_solution(start, f, smp.state.tau);
                worst = std::max(worst, coeff_norm(smp.state.z - ref.state.z));
                worst = std::max(worst, coeff_norm(smp.state.p - ref.state.p));
            };
            const double m0 = dyn::observables(start).m;
            dyn::integrate(start, field, (kPi / m0) / per_period, 10 * per_period, nullptr,
                           &sink, per_period);
            return worst;
        };
        const double dev_b = worst_dev(axis_b);
        const double dev_e = worst_dev(axis_b + e_perp * sta::sigma(1));
        rep.note(
            "homogeneous-field factorization: the separated boost-times-rotation closed form "
            "is exact for an axial magnetic field (deviation " +
            short_num(dev_b) + " over 10 periods) but first order in a transverse electric "
            "component: deviation " +
            short_num(dev_e) + " at E_perp = " + short_num(e_perp) + ", a ratio of " +
            short_num(dev_e / e_perp) + " per unit transverse field");
    }

    // 5: normalization of the projected interaction density
    {
        std::mt19937 rng(505);
        const dirac::SpinorField field =
            dirac::plane_wave(random_even(rng), random_vector(rng, 1.5));
        const Mv x = random_vector(rng, 3.0);
        const Mv F = random_bivector(rng, 1.0);
        const dirac::LocalObservables obs = dirac::local_observables(field, x, F);
        const dyn::RestFrameView view =
            dyn::rest_frame_split(obs.S.mv(), obs.v.mv(), dyn::kElectronCharge);
        const dyn::RelativeField rest = dyn::deboost_field(F, obs.v.mv());
        const dyn::Vec3 unit_dipole = -1.0 * view.r;
        const double dipole_form =
            obs.rho * (dyn::dot(rest.E, unit_dipole) - dyn::dot(rest.B, view.s));
        rep.note(
            "projected interaction density: the tabulated rest-frame reduction rho (E.d - "
            "B.s) evaluates to twice the projected density (sample: dipole form " +
            short_num(dipole_form) + ", projected density " +
            short_num(obs.zitter_interaction_density) +
            "); the half-weight density, which matches the particle model through 2 q "
            "<density> = rho Phi, is adopted");
    }
}

}  // namespace

SelftestCounts run_selftest(std::ostream& out, const RunConfig& cfg) {
    const ConstantSet cs = constants_by_name(cfg.constants);
    Reporter rep{out, SelftestCounts{}};
    algebra_section(rep);
    dynamics_section(rep, cfg);
    channeling_section(rep, cfg, cs);
    dirac_section(rep);
    discrepancy_section(rep, cfg, cs);
    out << "selftest: " << rep.counts.passed << " checks passed, " << rep.counts.failed
        << " failed, " << rep.counts.notes << " documented discrepancies\n";
    return rep.counts;
}

}  // namespace zbw::io
