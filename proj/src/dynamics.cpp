#include "zbw/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace zbw::dyn {

using sta::coeff_norm;
using sta::commutator;
using sta::dual;
using sta::gamma;
using sta::grade;
using sta::inner;
using sta::is_grade;
using sta::max_abs_coeff;
using sta::outer;
using sta::pseudoscalar;
using sta::reverse;
using sta::Rotor;
using sta::sandwich;
using sta::scalar_product;
using sta::sigma;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mv gamma_upper(int mu) { return (mu == 0) ? gamma(0) : -gamma(mu); }

double rotor_norm_scalar(const Mv& r) { return (r * reverse(r)).c[0]; }

}  // namespace

ParticleState make_state(const Mv& z, const Mv& rotor, const Mv& p, double q, double phi) {
    if (!is_grade(z, 1, 1e-12)) throw domain_error("state: position must be a vector");
    if (!is_grade(p, 1, 1e-12)) throw domain_error("state: momentum must be a vector");
    const Rotor r(rotor);  // validates and renormalizes
    ParticleState s;
    s.z = grade(z, 1);
    s.rotor = r.mv();
    s.p = grade(p, 1);
    s.q = q;
    s.phi = phi;
    const Observables obs = observables(s);
    if (obs.m <= 0.0) throw domain_error("state: dynamical mass p.u must be positive");
    return s;
}

Frame frame_of(const Mv& rotor) {
    Frame f;
    f.e0 = sandwich(rotor, gamma(0));
    f.e1 = sandwich(rotor, gamma(1));
    f.e2 = sandwich(rotor, gamma(2));
    f.e3 = sandwich(rotor, gamma(3));
    return f;
}

Observables observables(const ParticleState& s) {
    Observables o;
    o.frame = frame_of(s.rotor);
    if (s.mode == VelocityMode::lightlike) {
        o.u = o.frame.e0 + o.frame.e2;
        o.S = 0.5 * outer(o.u, o.frame.e1);
    } else {
        o.u = o.frame.e0;
        o.S = 0.5 * outer(o.frame.e2, o.frame.e1);
    }
    o.s_vec = 0.5 * o.frame.e3;
    o.m = scalar_product(s.p, o.u);
    o.m1 = scalar_product(s.p, o.frame.e0);
    o.m2 = scalar_product(s.p, o.frame.e2);
    return o;
}

// ---------- fields ----------

Mv Field::directional_dF(const Mv& z, const Mv& a) const {
    Mv out;
    for (int mu = 0; mu < 4; ++mu) {
        const double am = a.c[1 + mu];
        if (am != 0.0) out += am * dF(z, mu);
    }
    return out;
}

UniformField::UniformField(const Mv& f) : f_(grade(f, 2)) {
    if (!is_grade(f, 2, 1e-12)) throw domain_error("uniform field: F must be a bivector");
}

StaticRadialField::StaticRadialField(Profile profile, double q, double min_radius)
    : profile_(std::move(profile)), q_(q), rmin_(min_radius) {
    if (q_ == 0.0) throw domain_error("static field: charge must be nonzero");
}

namespace {

double transverse_radius(const Mv& z, double rmin) {
    const double r = std::hypot(z.c[2], z.c[3]);
    if (r < rmin) throw domain_error("static field: evaluation too close to the axis");
    return r;
}

}  // namespace

Mv StaticRadialField::F(const Mv& z) const {
    const double r = transverse_radius(z, rmin_);
    const auto v = profile_(r);
    const double v1 = v[1];
    // grad V = g^k dV/dx^k = -(V'/r)(x g1 + y g2);  q F = grad V ^ g0
    const Mv gradV = (-v1 / r) * (z.c[2] * gamma(1) + z.c[3] * gamma(2));
    return outer(gradV, gamma(0)) / q_;
}

Mv StaticRadialField::dF(const Mv& z, int mu) const {
    if (mu == 0 || mu == 3) return Mv();
    const double r = transverse_radius(z, rmin_);
    const auto v = profile_(r);
    const double x[2] = {z.c[2], z.c[3]};
    const int l = mu - 1;  // derivative direction within the plane (0: x, 1: y)
    // Hessian of V: H_kl = V'' x_k x_l / r^2 + V' (delta_kl / r - x_k x_l / r^3)
    Mv dgradV;
    for (int k = 0; k < 2; ++k) {
        const double h = v[2] * x[k] * x[l] / (r * r) +
                         v[1] * ((k == l ? 1.0 : 0.0) / r - x[k] * x[l] / (r * r * r));
        dgradV += -h * gamma(1 + k);
    }
    return outer(dgradV, gamma(0)) / q_;
}

std::optional<double> StaticRadialField::potential(const Mv& z) const {
    return profile_(transverse_radius(z, rmin_))[0];
}

// ---------- equations of motion ----------

double spin_potential(const Mv& S, const Mv& F, double q) {
    return q * scalar_product(S, F);
}

Mv grad_spin_potential(const Mv& z, const Mv& S, const Field& field, double q) {
    Mv g;
    for (int mu = 0; mu < 4; ++mu) {
        const double c = q * scalar_product(S, field.dF(z, mu));
        if (c != 0.0) g += c * gamma_upper(mu);
    }
    return g;
}

Derivatives zitter_rhs(const ParticleState& s, const Field& field) {
    if (s.mode != VelocityMode::lightlike)
        throw domain_error("zitter dynamics requires a lightlike-mode state");
    Derivatives d;
    const Frame e = frame_of(s.rotor);
    const Mv u = e.e0 + e.e2;
    const Mv S = 0.5 * outer(u, e.e1);
    const Mv F = field.F(s.z);

    d.m = scalar_product(s.p, u);
    if (d.m <= 0.0) throw domain_error("dynamics: dynamical mass p.u must stay positive");
    d.Phi = spin_potential(S, F, s.q);
    d.S_dot = outer(u, s.p) + s.q * commutator(F, S);
    d.m_dot = s.q * (scalar_product(d.S_dot, F) + scalar_product(S, field.directional_dF(s.z, u)));

    const Mv gradPhi = grad_spin_potential(s.z, S, field, s.q);
    const Mv pi = s.p - u;
    const Mv trivec = outer(outer(e.e0, e.e2), e.e1);
    d.Omega = 2.0 * inner(s.p, trivec);
    d.Omega += s.q * F;
    d.Omega += outer(gradPhi - s.q * inner(F, pi), u) / d.m;
    d.Omega += (d.m_dot / d.m) * outer(e.e2, e.e0);

    d.z_dot = u;
    d.p_dot = s.q * inner(F, u) + gradPhi;
    d.rotor_dot = 0.5 * d.Omega * s.rotor;
    d.phi_dot = 2.0 * d.m;
    return d;
}

double mass_rate(const ParticleState& s, const Field& field) {
    return zitter_rhs(s, field).m_dot;
}

Mv omega_bivector(const ParticleState& s, const Field& field) {
    return zitter_rhs(s, field).Omega;
}

double first_curvature(const ParticleState& s, const Field& field) {
    const Derivatives d = zitter_rhs(s, field);
    const Frame e = frame_of(s.rotor);
    const Mv u = e.e0 + e.e2;
    return -scalar_product(inner(d.Omega, u), e.e1);
}

namespace {

struct RawState {
    Mv z, rotor, p;
    double phi = 0.0;
};

RawState operator+(RawState a, const RawState& b) {
    a.z += b.z;
    a.rotor += b.rotor;
    a.p += b.p;
    a.phi += b.phi;
    return a;
}

RawState operator*(double s, RawState a) {
    a.z *= s;
    a.rotor *= s;
    a.p *= s;
    a.phi *= s;
    return a;
}

RawState raw_of(const Derivatives& d) { return {d.z_dot, d.rotor_dot, d.p_dot, d.phi_dot}; }

ParticleState with_raw(const ParticleState& base, const RawState& r, double tau) {
    ParticleState s = base;
    s.z = r.z;
    s.rotor = r.rotor;
    s.p = r.p;
    s.phi = r.phi;
    s.tau = tau;
    return s;
}

void update_monitors(Monitors& mon, const ParticleState& s, const Derivatives& d,
                     const Field& field, double mass_const0, std::optional<double> energy0) {
    const Frame e = frame_of(s.rotor);
    const Mv u = e.e0 + e.e2;
    const double kappa1 = -scalar_product(inner(d.Omega, u), e.e1);
    mon.kappa1_drift = std::max(mon.kappa1_drift, std::abs(kappa1 - kOmegaE));
    mon.mass_integral_drift =
        std::max(mon.mass_integral_drift, std::abs((d.m - d.Phi) - mass_const0));
    mon.gauge_drift = std::max({mon.gauge_drift, std::abs(scalar_product(s.p, e.e1)),
                                std::abs(scalar_product(s.p, e.e3))});
    if (energy0) {
        const auto v = field.potential(s.z);
        if (v) {
            const double energy = s.p.c[1] + *v;
            mon.energy_drift = std::max(mon.energy_drift, std::abs(energy - *energy0));
        }
    }
}

}  // namespace

ParticleState integrate(ParticleState s, const Field& field, double dtau, long steps,
                        Monitors* monitors, const SampleSink* sink, long sample_every) {
    if (s.mode != VelocityMode::lightlike)
        throw domain_error("integrate: lightlike-mode state required");
    if (steps < 0) throw domain_error("integrate: negative step count");
    if (sample_every < 1) sample_every = 1;
    Derivatives k1 = zitter_rhs(s, field);
    if (dtau <= 0.0) dtau = (kPi / k1.m) / 200.0;

    const double mass_const0 = k1.m - k1.Phi;
    std::optional<double> energy0;
    if (const auto v0 = field.potential(s.z)) energy0 = s.p.c[1] + *v0;

    Monitors local;
    Monitors& mon = monitors ? *monitors : local;
    update_monitors(mon, s, k1, field, mass_const0, energy0);
    if (sink) (*sink)({s, k1, mon, 0});

    for (long step = 0; step < steps; ++step) {
        const RawState y{s.z, s.rotor, s.p, s.phi};
        const RawState d1 = raw_of(k1);
        const ParticleState s2 = with_raw(s, y + (0.5 * dtau) * d1, s.tau + 0.5 * dtau);
        const RawState d2 = raw_of(zitter_rhs(s2, field));
        const ParticleState s3 = with_raw(s, y + (0.5 * dtau) * d2, s.tau + 0.5 * dtau);
        const RawState d3 = raw_of(zitter_rhs(s3, field));
        const ParticleState s4 = with_raw(s, y + dtau * d3, s.tau + dtau);
        const RawState d4 = raw_of(zitter_rhs(s4, field));

        const RawState next = y + (dtau / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
        s = with_raw(s, next, s.tau + dtau);

        const double n = rotor_norm_scalar(s.rotor);
        mon.rotor_norm_drift = std::max(mon.rotor_norm_drift, std::abs(n - 1.0));
        if (std::abs(n - 1.0) > 1e-6)
            throw invariant_error("integrate: rotor norm drifted beyond repair in one step");
        s.rotor /= std::sqrt(n);

        k1 = zitter_rhs(s, field);
        update_monitors(mon, s, k1, field, mass_const0, energy0);
        if (sink && ((step + 1) % sample_every == 0 || step + 1 == steps))
            (*sink)({s, k1, mon, step + 1});
    }
    return s;
}

// ---------- closed-form solutions ----------

namespace {

void check_unit_scale_momentum(const Mv& p) {
    if (!is_grade(p, 1, 1e-12)) throw domain_error("free solution: momentum must be a vector");
    const double p2 = scalar_product(p, p);
    if (std::abs(p2 - 1.0) > 1e-9)
        throw domain_error("free solution: momentum must satisfy p^2 = m_e^2");
    if (p.c[1] <= 0.0) throw domain_error("free solution: momentum must be future-pointing");
}

}  // namespace

FreeSolution free_solution(const Mv& p, const Mv& S0, const Mv& z0, VelocityMode mode,
                           double tau, double q) {
    check_unit_scale_momentum(p);
    if (!is_grade(S0, 2, 1e-12)) throw domain_error("free solution: spin must be a bivector");
    if (!is_grade(z0, 1, 1e-12)) throw domain_error("free solution: position must be a vector");
    const Mv p_inv = p / scalar_product(p, p);

    FreeSolution out;
    if (mode == VelocityMode::lightlike) {
        const Mv e0 = p;  // m_e = 1
        const Mv e1 = 2.0 * inner(p, S0);
        if (std::abs(scalar_product(e1, e1) + 1.0) > 1e-9)
            throw domain_error("free solution: spin bivector inconsistent with lightlike mode");
        const Mv u0 = -2.0 * inner(S0, e1);
        const Mv e2 = u0 - e0;
        if (std::abs(scalar_product(u0, u0)) > 1e-9 ||
            std::abs(scalar_product(e2, e2) + 1.0) > 1e-9)
            throw domain_error("free solution: spin bivector inconsistent with lightlike mode");
        if (coeff_norm(S0 - 0.5 * outer(u0, e1)) > 1e-9)
            throw domain_error("free solution: spin bivector is not of the null zitter form");
        const Mv e3 = grade(e2 * e1 * e0 * pseudoscalar(), 1);
        const Rotor r0 = sta::frame_to_rotor(e0, e1, e2, e3);

        out.Omega = kOmegaE * (2.0 * S0 - outer(p, e1));
        const Mv rot = sta::exp_bivector(out.Omega * (0.5 * tau));
        const Mv s_tau = sandwich(rot, S0);

        ParticleState st;
        st.tau = tau;
        st.phi = kOmegaE * tau;
        st.rotor = Rotor(rot * r0.mv()).mv();
        st.p = p;
        st.q = q;
        st.mode = VelocityMode::lightlike;
        st.z = inner(s_tau - S0, p_inv) + tau * p_inv + z0;
        out.state = st;
        out.center = tau * p_inv + z0 - inner(S0, p_inv);
        out.radius = inner(s_tau, p_inv);
        return out;
    }

    // timelike branch: spin plane orthogonal to p, straight worldline with a
    // precessing spatial frame
    const Mv s2mv = S0 * S0;
    const double s2 = s2mv.c[0];
    if (max_abs_coeff(outer(S0, S0)) > 1e-9 || s2 >= 0.0)
        throw domain_error("free solution: timelike mode needs a simple spacelike spin plane");
    if (std::abs(std::sqrt(-s2) - 0.5) > 1e-9)
        throw domain_error("free solution: timelike spin magnitude must be hbar/2");
    if (coeff_norm(inner(p, S0)) > 1e-9)
        throw domain_error("free solution: timelike spin plane must be orthogonal to p");

    const Mv shat = S0 / std::sqrt(-s2);
    // orthonormal pair spanning the spin plane, oriented so a ^ b = shat
    Mv a;
    for (int k = 1; k <= 3; ++k) {
        a = inner(shat, gamma(k));
        if (coeff_norm(a) > 0.5) break;
    }
    a /= std::sqrt(-scalar_product(a, a));
    const Mv b = inner(shat, a);
    const Mv e0 = p;
    const Mv e2 = a;
    const Mv e1 = b;
    const Mv e3 = grade(e2 * e1 * e0 * pseudoscalar(), 1);
    const Rotor r0 = sta::frame_to_rotor(e0, e1, e2, e3);

    out.Omega = kOmegaE * shat;
    const Mv rot = sta::exp_bivector(out.Omega * (0.5 * tau));
    ParticleState st;
    st.tau = tau;
    st.phi = kOmegaE * tau;
    st.rotor = Rotor(rot * r0.mv()).mv();
    st.p = p;
    st.q = q;
    st.mode = VelocityMode::timelike;
    st.z = z0 + tau * p;
    out.state = st;
    out.center = st.z;
    out.radius = Mv();
    return out;
}

namespace {

// Antiderivative of 1 / (a + K sin(x + delta)) that is continuous across
// branch cuts; w = sqrt(a^2 - K^2).
double phase_time_primitive(double a, double k, double delta, double w, double x) {
    const double shifted = x + delta;
    const double n = std::floor((shifted + kPi) / (2.0 * kPi));
    const double r = shifted - 2.0 * kPi * n;  // in [-pi, pi)
    const double half = 0.5 * r;
    const double theta = std::atan2(a * std::sin(half) + k * std::cos(half), w * std::cos(half));
    return (2.0 / w) * theta + n * (2.0 * kPi / w);
}

double invert_phase_time(double a, double k, double delta, double tau) {
    if (a <= std::abs(k))
        throw domain_error("phase solution: rate a + K sin(phi) is not strictly positive");
    const double w = std::sqrt((a - k) * (a + k));
    const double t0 = phase_time_primitive(a, k, delta, w, 0.0);
    auto time_of = [&](double phi) { return phase_time_primitive(a, k, delta, w, phi) - t0; };

    double phi = a * tau;  // linear estimate
    double lo = std::min((a - std::abs(k)) * tau, (a + std::abs(k)) * tau) - 1.0;
    double hi = std::max((a - std::abs(k)) * tau, (a + std::abs(k)) * tau) + 1.0;
    const double tol = 1e-13 * std::max(1.0, std::abs(tau));
    for (int it = 0; it < 200; ++it) {
        const double g = time_of(phi) - tau;
        if (std::abs(g) <= tol) return phi;
        if (g > 0.0) hi = std::min(hi, phi);
        else lo = std::max(lo, phi);
        double next = phi - g * (a + k * std::sin(phi + delta));
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
        phi = next;
    }
    throw invariant_error("phase solution: inversion did not converge");
}

// adaptive Simpson for multivector-valued integrands
template <class F>
Mv simpson_rec(const F& f, double x0, double x2, const Mv& f0, const Mv& f1, const Mv& f2,
               const Mv& whole, double tol, int depth) {
    const double x1 = 0.5 * (x0 + x2);
    const double h = x2 - x0;
    const Mv fl = f(0.5 * (x0 + x1));
    const Mv fr = f(0.5 * (x1 + x2));
    const Mv left = (h / 12.0) * (f0 + 4.0 * fl + f1);
    const Mv right = (h / 12.0) * (f1 + 4.0 * fr + f2);
    const Mv sum = left + right;
    const Mv err = sum - whole;
    if (depth <= 0) throw invariant_error("quadrature: refinement limit reached");
    if (max_abs_coeff(err) <= 15.0 * tol) return sum + err / 15.0;
    return simpson_rec(f, x0, x1, f0, fl, f1, left, tol * 0.5, depth - 1) +
           simpson_rec(f, x1, x2, f1, fr, f2, right, tol * 0.5, depth - 1);
}

template <class F>
Mv integrate_mv(const F& f, double x0, double x1, double tol) {
    if (x0 == x1) return Mv();
    // split into unit-scale panels to keep the recursion shallow on long spans
    const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(x1 - x0) / 2.0)));
    const double h = (x1 - x0) / panels;
    Mv total;
    for (int i = 0; i < panels; ++i) {
        const double a = x0 + i * h;
        const double b = a + h;
        const double m = 0.5 * (a + b);
        const Mv fa = f(a), fm = f(m), fb = f(b);
        const Mv whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
        total += simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
    }
    return total;
}

}  // namespace

double kepler_phase(double omega_e, double b_term, double e_amp, double tau) {
    return invert_phase_time(omega_e - b_term, e_amp, 0.0, tau);
}

ConstantFieldSolution constant_field_solution(const ParticleState& s0, const Mv& f, double tau) {
    if (s0.mode != VelocityMode::lightlike)
        throw domain_error("constant field solution: lightlike-mode state required");
    if (!is_grade(f, 2, 1e-12))
        throw domain_error("constant field solution: field must be a bivector");
    const double q = s0.q;
    const Mv r0 = Rotor(s0.rotor).mv();

    // phase-rate Fourier coefficients of the interaction energy
    const double a1 = scalar_product(f, sandwich(r0, sigma(1)));
    const double a2 = scalar_product(f, sandwich(r0, sigma(2)));
    const double a3 = scalar_product(f, sandwich(r0, dual(sigma(3))));

    const Observables obs0 = observables(s0);
    const double phi0_pot = 0.5 * q * (-a1 + a3);  // interaction energy at dphi = 0
    const double mass_const = obs0.m - phi0_pot;

    ConstantFieldSolution out;
    out.a = 2.0 * mass_const + q * a3;
    const double kc = q * a2;   // coefficient of sin(dphi)
    const double ks = -q * a1;  // coefficient of cos(dphi)
    out.k = std::hypot(kc, ks);
    out.delta = (out.k == 0.0) ? 0.0 : std::atan2(ks, kc);

    const double dphi = invert_phase_time(out.a, out.k, out.delta, tau);

    const double pi2 = scalar_product(s0.p, s0.p) - 2.0 * obs0.m;  // invariant pi^2

    const Mv iSigma3 = gamma(2) * gamma(1);
    auto rotor_at = [&](double t, double dp) {
        const Mv l = sta::exp_bivector(f * (0.5 * q * t));
        const double dpr = std::remainder(dp, 4.0 * kPi);  // rotor has period 4*pi in phase
        const Mv uu = r0 * sta::exp_bivector(iSigma3 * (0.5 * dpr));
        return l * uu;
    };
    // Position is integrated in the phase variable, dz = u dphi / (dphi/dtau),
    // so the quadrature integrand is smooth and needs no per-node inversion.
    const double w = std::sqrt((out.a - out.k) * (out.a + out.k));
    const double t_origin = phase_time_primitive(out.a, out.k, out.delta, w, 0.0);
    auto velocity_per_phase = [&](double x) {
        const double t = phase_time_primitive(out.a, out.k, out.delta, w, x) - t_origin;
        const double rate = out.a + out.k * std::sin(x + out.delta);
        return sandwich(rotor_at(t, x), gamma(0) + gamma(2)) / rate;
    };

    const Mv r_tau = rotor_at(tau, dphi);
    const Frame e = frame_of(r_tau);
    const double phi_pot = 0.5 * q * (-a1 * std::cos(dphi) + a2 * std::sin(dphi) + a3);
    const double m = mass_const + phi_pot;
    if (m <= 0.0) throw domain_error("constant field solution: dynamical mass went nonpositive");
    const double p2 = pi2 + 2.0 * m;
    const double m1 = 0.5 * (m + p2 / m);
    const double m2 = 0.5 * (m - p2 / m);

    ParticleState st;
    st.tau = s0.tau + tau;
    st.phi = s0.phi + dphi;
    st.rotor = Rotor(r_tau).mv();
    st.p = m1 * e.e0 - m2 * e.e2;
    st.q = q;
    st.mode = VelocityMode::lightlike;
    st.z = s0.z + integrate_mv(velocity_per_phase, 0.0, dphi, 1e-12);
    out.state = st;
    return out;
}

// ---------- averaged description ----------

Mv zitter_center(const ParticleState& s, CenterStrategy strategy) {
    const Observables o = observables(s);
    if (strategy == CenterStrategy::displacement) return s.z + kLambdaE * o.frame.e1;
    const double p2 = scalar_product(s.p, s.p);
    if (std::abs(p2) < 1e-12)
        throw domain_error("zitter center: momentum is null, no momentum-frame center");
    return s.z - inner(o.S, s.p) / p2;
}

MeanObservables zitter_average(const ParticleState& s, const Field* field) {
    const Frame e = frame_of(s.rotor);
    MeanObservables m;
    m.v = e.e0;
    m.S_bar = 0.5 * outer(e.e2, e.e1);
    m.p_bar = kMe * m.v;
    if (field) {
        const Mv x = zitter_center(s);
        m.Phi_bar = spin_potential(m.S_bar, field->F(x), s.q);
    }
    m.m_bar = kMe + m.Phi_bar;
    m.m1_bar = kMe;
    m.m2_bar = m.Phi_bar;
    return m;
}

CenterDerivatives minimal_model_rhs(const CenterState& s, const Field& field) {
    if (!is_grade(s.v, 1, 1e-10) || std::abs(scalar_product(s.v, s.v) - 1.0) > 1e-8)
        throw domain_error("center model: v must be unit timelike");
    const Frame e = frame_of(s.rotor);
    const Mv f = field.F(s.x);
    const Mv s_bar = 0.5 * outer(e.e2, e.e1);

    CenterDerivatives d;
    d.Phi_bar = spin_potential(s_bar, f, s.q);
    const Mv grad_phi = grad_spin_potential(s.x, s_bar, field, s.q);
    // spin transport dominated closure for the potential rate
    d.Phi_bar_dot = s.q * (s.q * scalar_product(commutator(f, s_bar), f) +
                           scalar_product(s_bar, field.directional_dF(s.x, s.v)));
    const double m_bar = kMe + d.Phi_bar;

    d.x_dot = s.v;
    d.v_dot = s.q * inner(f, s.v) + grad_phi - scalar_product(s.v, grad_phi) * s.v;
    d.Omega_bar = kOmegaE * outer(e.e1, e.e2) - outer(s.v, grad_phi) + s.q * f +
                  2.0 * d.Phi_bar * outer(e.e0, e.e1) -
                  (d.Phi_bar_dot / m_bar) * outer(e.e0, e.e2);
    d.rotor_dot = 0.5 * d.Omega_bar * s.rotor;
    return d;
}

CenterState integrate_minimal(CenterState s, const Field& field, double dtau, long steps,
                              double* v_drift) {
    if (dtau <= 0.0) throw domain_error("center model: step must be positive");
    double worst = 0.0;
    struct Raw {
        Mv x, v, rotor;
    };
    auto rhs = [&](const CenterState& cs) {
        const CenterDerivatives d = minimal_model_rhs(cs, field);
        return Raw{d.x_dot, d.v_dot, d.rotor_dot};
    };
    auto advance = [&](const CenterState& base, const Raw& r, double h) {
        CenterState n = base;
        n.x += h * r.x;
        n.v += h * r.v;
        n.rotor += h * r.rotor;
        n.tau += h;
        return n;
    };
    for (long i = 0; i < steps; ++i) {
        const Raw d1 = rhs(s);
        const Raw d2 = rhs(advance(s, d1, 0.5 * dtau));
        const Raw d3 = rhs(advance(s, d2, 0.5 * dtau));
        const Raw d4 = rhs(advance(s, d3, dtau));
        Raw sum{d1.x + 2.0 * d2.x + 2.0 * d3.x + d4.x, d1.v + 2.0 * d2.v + 2.0 * d3.v + d4.v,
                d1.rotor + 2.0 * d2.rotor + 2.0 * d3.rotor + d4.rotor};
        s = advance(s, Raw{sum.x / 6.0, sum.v / 6.0, sum.rotor / 6.0}, dtau);

        const double v2 = scalar_product(s.v, s.v);
        worst = std::max(worst, std::abs(v2 - 1.0));
        s.v /= std::sqrt(v2);
        s.rotor /= std::sqrt(rotor_norm_scalar(s.rotor));
    }
    if (v_drift) *v_drift = worst;
    return s;
}

// ---------- rest-frame views ----------

namespace {

Vec3 sigma_components(const Mv& x) {
    return {scalar_product(x, sigma(1)), scalar_product(x, sigma(2)),
            scalar_product(x, sigma(3))};
}

Vec3 dual_sigma_components(const Mv& x) {
    return {-scalar_product(x, dual(sigma(1))), -scalar_product(x, dual(sigma(2))),
            -scalar_product(x, dual(sigma(3)))};
}

}  // namespace

RestFrameView rest_frame_split(const Mv& S, const Mv& v, double q) {
    if (!is_grade(S, 2, 1e-12)) throw domain_error("rest frame split: spin must be a bivector");
    const Rotor l = sta::boost_from_velocity(v);
    const Mv s0 = sandwich(reverse(l.mv()), S);
    RestFrameView view;
    const Vec3 r = -1.0 * sigma_components(s0);
    const Vec3 sv = dual_sigma_components(s0);
    view.r = r;
    view.s = sv;
    const double r2 = dot(r, r);
    view.u = (r2 > 1e-18) ? cross(sv, r) / r2 : Vec3{};
    view.d = -q * view.r;
    view.mu = q * view.s;
    return view;
}

RelativeField field_components(const Mv& f) {
    if (!is_grade(f, 2, 1e-12)) throw domain_error("field components: F must be a bivector");
    return {sigma_components(f), dual_sigma_components(f)};
}

RelativeField deboost_field(const Mv& f, const Mv& v) {
    const RelativeField lab = field_components(f);
    if (!is_grade(v, 1, 1e-12) || std::abs(scalar_product(v, v) - 1.0) > 1e-9 || v.c[1] <= 0.0)
        throw domain_error("deboost: v must be unit timelike future-pointing");
    const double v0 = v.c[1];
    const Vec3 beta = {v.c[2] / v0, v.c[3] / v0, v.c[4] / v0};
    const double b = norm(beta);
    if (b < 1e-14) return lab;
    const Vec3 bhat = beta / b;
    auto transform = [&](const Vec3& e, const Vec3& other, double sign) {
        const Vec3 par = dot(e, bhat) * bhat;
        const Vec3 perp = e - par;
        return par + v0 * perp + sign * v0 * cross(beta, other);
    };
    return {transform(lab.E, lab.B, +1.0), transform(lab.B, lab.E, -1.0)};
}

Mv thomas_omega(const Mv& v, const Mv& vdot) {
    if (!is_grade(v, 1, 1e-12) || !is_grade(vdot, 1, 1e-12))
        throw domain_error("thomas_omega: arguments must be vectors");
    if (std::abs(scalar_product(v, v) - 1.0) > 1e-9)
        throw domain_error("thomas_omega: v must be unit timelike");
    const double scale = std::max(1.0, coeff_norm(vdot));
    if (std::abs(scalar_product(v, vdot)) > 1e-9 * scale)
        throw domain_error("thomas_omega: acceleration must be orthogonal to v");
    const double v0 = v.c[1];
    return outer(vdot, v + gamma(0)) / (1.0 + v0);
}

RelativeField rest_frame_ab(const Mv& f, const Mv& v, const Mv& vdot, double q) {
    const Mv omega_v = thomas_omega(v, vdot);
    const Rotor l = sta::boost_from_velocity(v);
    const Mv x = sandwich(reverse(l.mv()), f - omega_v * (kMe / q));
    return {sigma_components(x), dual_sigma_components(x)};
}

RestFrameRates rest_frame_rhs(const RestFrameView& view, double m, const Vec3& a, const Vec3& b) {
    RestFrameRates out;
    out.r_dot = (1.0 / kMe) * (m * view.u + cross(view.mu, a) + cross(view.d, b));
    out.s_dot = cross(a, view.d) + cross(view.mu, b);
    return out;
}

}  // namespace zbw::dyn
