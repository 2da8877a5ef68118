#include "zbw/channeling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace zbw::chan {

namespace {

constexpr double kPi = 3.14159265358979323846;

using std::complex;

double simpson_panel(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double flm = f(0.5 * (a + m));
    const double frm = f(0.5 * (m + b));
    const double left = simpson_panel(a, fa, m, fm, flm);
    const double right = simpson_panel(m, fm, b, fb, frm);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || depth <= 0) return left + right + err / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return simpson_rec(f, a, b, fa, fm, fb, simpson_panel(a, fa, b, fb, fm), tol, 48);
}

// sin(pi x) evaluated against the nearest integer so precision survives
// large arguments
double sin_pi(double x) {
    const double n = std::round(x);
    const double s = std::sin(kPi * (x - n));
    return (static_cast<long long>(n) % 2 == 0) ? s : -s;
}

}  // namespace

// ---------- parameters ----------

ChannelParams params_from_z(double Z, double d, const ConstantSet& cs) {
    if (Z <= 0.0) throw domain_error("channel params: atomic number must be positive");
    if (d <= 0.0) throw domain_error("channel params: spacing must be positive");
    ChannelParams cp;
    cp.Z = Z;
    cp.d = d;
    cp.k = Z * cs.e2 / d;
    return cp;
}

BeamParams beam_from_momentum(double p_mev, double d, const ConstantSet& cs) {
    if (p_mev <= 0.0) throw domain_error("beam: momentum must be positive");
    if (d <= 0.0) throw domain_error("beam: spacing must be positive");
    const double pc = p_mev * 1e6;             // eV
    const double energy = std::hypot(pc, cs.mec2);
    BeamParams b;
    b.p = p_mev;
    b.gamma = energy / cs.mec2;
    b.zdot = (pc / energy) * cs.c;
    b.omega0 = 2.0 * kPi * b.zdot / d;
    b.M = b.gamma * cs.mec2 / (cs.c * cs.c);
    b.p_second_order = 2.0 * p_mev;
    return b;
}

BeamParams beam_kinematics(double d, const ConstantSet& cs) {
    if (d <= 0.0) throw domain_error("beam_kinematics: spacing must be positive");
    const double planck = 2.0 * kPi * cs.hbar;               // eV s
    const double pc = d * cs.mec2 * cs.mec2 / (planck * cs.c);  // eV
    return beam_from_momentum(pc / 1e6, d, cs);
}

// ---------- string potential ----------

Lindhard lindhard(double r, const ChannelParams& cp) {
    if (r <= 0.0) throw domain_error("lindhard: radius must be positive");
    const double ca = cp.Ca();
    const double qh = (ca / r) * (ca / r);
    Lindhard l;
    l.U = -cp.k * std::log1p(qh);
    l.U1 = (2.0 * cp.k / r) * (qh / (1.0 + qh));
    l.U2 = -(l.U1 / r) * (3.0 + qh) / (1.0 + qh);
    return l;
}

double lindhard_atom_potential(double R, const ChannelParams& cp, const ConstantSet& cs) {
    if (R <= 0.0) throw domain_error("atom potential: radius must be positive");
    const double ca = cp.Ca();
    return -(cp.Z * cs.e2 / R) * (1.0 - R / std::sqrt(R * R + ca * ca));
}

double string_average(const std::function<double(double)>& v_atom, double d, double r) {
    if (d <= 0.0) throw domain_error("string average: spacing must be positive");
    if (r <= 0.0) throw domain_error("string average: radius must be positive");
    const auto integrand = [&](double z) { return v_atom(std::hypot(r, z)); };
    // even integrand: integrate the half line and double, extending the upper
    // limit by doubling until the added tail is negligible
    double upper = 8.0 * std::max(r, 1.0);
    double acc = integrate_adaptive(integrand, 0.0, upper, 1e-13 * std::max(1.0, r));
    double tail = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 60; ++pass) {
        tail = integrate_adaptive(integrand, upper, 2.0 * upper, 1e-13 * std::max(1.0, r));
        upper *= 2.0;
        acc += tail;
        if (std::abs(tail) <= 1e-12 * std::max(std::abs(acc), 1.0)) {
            return 2.0 * acc / d;
        }
    }
    std::ostringstream msg;
    msg << "string average did not converge; last tail increment ~ " << (2.0 * tail / d)
        << " eV per doubling of the cutoff";
    throw invariant_error(msg.str());
}

double effective_radius(double r, const ChannelParams& cp) {
    if (r <= 0.0) throw domain_error("effective radius: radius must be positive");
    const double ca = cp.Ca();
    const double qh = (ca / r) * (ca / r);
    return r * (1.0 + qh) / (3.0 + qh);
}

// ---------- channeled orbits ----------

CircularOrbit circular_orbit(double r0, const BeamParams& beam, const ChannelParams& cp) {
    const Lindhard l = lindhard(r0, cp);
    const double curvature = (3.0 * l.U1 + r0 * l.U2) / (beam.M * r0);  // W''(r0) / M
    if (curvature <= 0.0)
        throw domain_error("circular_orbit: effective potential curvature W'' <= 0, orbit unstable");
    CircularOrbit orb;
    orb.thetadot0 = std::sqrt(l.U1 / (beam.M * r0));
    orb.L = beam.M * r0 * r0 * orb.thetadot0;
    orb.Omega0 = std::sqrt(curvature);
    orb.revolutions = orb.thetadot0 * (cp.crystal_length / beam.zdot) / (2.0 * kPi);
    return orb;
}

OrbitRun integrate_orbit(double r0, double thetadot0, const BeamParams& beam,
                         const ChannelParams& cp, double t_end, long steps, long stride) {
    if (steps <= 0) throw domain_error("orbit: step count must be positive");
    if (stride <= 0) stride = 1;
    const double dt = t_end / static_cast<double>(steps);
    double s[4] = {r0, 0.0, 0.0, r0 * thetadot0};  // x, y, vx, vy
    const auto accel = [&](const double y[4], double a[2]) {
        const double rad = std::hypot(y[0], y[1]);
        const double u1 = lindhard(rad, cp).U1;
        const double f = -u1 / (beam.M * rad);
        a[0] = f * y[0];
        a[1] = f * y[1];
    };
    OrbitRun run;
    run.samples.reserve(static_cast<std::size_t>(steps / stride) + 2);
    const double L0 = beam.M * (s[0] * s[3] - s[1] * s[2]);
    run.r_min = run.r_max = r0;
    const auto record = [&](double t) {
        run.samples.push_back({t, s[0], s[1], s[2], s[3]});
    };
    record(0.0);
    double k1[4], k2[4], k3[4], k4[4], tmp[4], a[2];
    const auto derivs = [&](const double y[4], double out[4]) {
        out[0] = y[2];
        out[1] = y[3];
        accel(y, a);
        out[2] = a[0];
        out[3] = a[1];
    };
    for (long i = 0; i < steps; ++i) {
        derivs(s, k1);
        for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * dt * k1[j];
        derivs(tmp, k2);
        for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * dt * k2[j];
        derivs(tmp, k3);
        for (int j = 0; j < 4; ++j) tmp[j] = s[j] + dt * k3[j];
        derivs(tmp, k4);
        for (int j = 0; j < 4; ++j) s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        const double rad = std::hypot(s[0], s[1]);
        run.r_min = std::min(run.r_min, rad);
        run.r_max = std::max(run.r_max, rad);
        const double L = beam.M * (s[0] * s[3] - s[1] * s[2]);
        run.L_drift = std::max(run.L_drift, std::abs(L - L0) / std::abs(L0));
        if ((i + 1) % stride == 0 || i + 1 == steps) record(dt * static_cast<double>(i + 1));
    }
    return run;
}

double modulated_orbit(double a, double Omega, double omega0, double t) {
    return a * std::cos(Omega * t) * std::cos(omega0 * t);
}

SplitFrequencies split_frequencies(double omega0, double Omega) {
    return {omega0 + Omega, omega0 - Omega};
}

// ---------- zitter drive and parametric resonance ----------

PerturbationTerms zitter_perturbation(double r, const BeamParams& beam, const ChannelParams& cp,
                                      double t, double delta, const ConstantSet& cs) {
    const Lindhard l = lindhard(r, cp);
    PerturbationTerms pt;
    pt.R = effective_radius(r, cp);
    pt.h = cs.lambda_e / pt.R;
    pt.shift_modulus = beam.gamma * l.U1 * cs.c / cs.mec2;
    pt.omega_z = cs.omega_e - pt.shift_modulus * std::cos(cs.omega_e * t / beam.gamma + delta);
    const double periodic = 1.0 + std::cos(beam.omega0 * t);
    pt.force_r = cs.lambda_e * l.U2 * periodic * std::cos(pt.omega_z * t / beam.gamma + delta);
    return pt;
}

ResonanceBand parametric_resonance(double h, double omega0, double epsilon) {
    if (h < 0.0) throw domain_error("parametric_resonance: modulation depth must be >= 0");
    if (omega0 <= 0.0) throw domain_error("parametric_resonance: oscillator frequency must be positive");
    const double half_edge = 0.5 * h * omega0;
    const double s2 = 0.25 * (half_edge * half_edge - epsilon * epsilon);
    ResonanceBand band;
    band.width = h * omega0;
    if (s2 > 0.0) {
        const double growth = std::sqrt(s2);
        band.s = growth;
        band.stable = false;
        band.per_atom = growth * 2.0 * kPi / omega0;
        band.atoms_to_double = std::log(2.0) / band.per_atom;
    } else {
        band.s = complex<double>(0.0, std::sqrt(-s2));
        band.stable = true;
        band.per_atom = 0.0;
        band.atoms_to_double = std::numeric_limits<double>::infinity();
    }
    return band;
}

double momentum_width(double h, double p_mev) { return h * p_mev; }

// ---------- Floquet ----------

namespace {

// monodromy matrix of x'' + q (1 + h cos(omega t)) x = 0 over one period
struct Monodromy {
    double m00, m01, m10, m11;
};

Monodromy period_map(double q, double h, double omega) {
    const double T = 2.0 * kPi / omega;
    const double cycles = std::sqrt(q) * T / (2.0 * kPi);
    const long steps = 4096L * static_cast<long>(std::max(1.0, std::ceil(cycles)));
    const double dt = T / static_cast<double>(steps);
    double y[4] = {1.0, 0.0, 0.0, 1.0};  // columns (x1, v1), (x2, v2)
    const auto rhs = [&](double t, const double in[4], double out[4]) {
        const double w2 = -q * (1.0 + h * std::cos(omega * t));
        out[0] = in[1];
        out[1] = w2 * in[0];
        out[2] = in[3];
        out[3] = w2 * in[2];
    };
    double k1[4], k2[4], k3[4], k4[4], tmp[4];
    for (long i = 0; i < steps; ++i) {
        const double t = dt * static_cast<double>(i);
        rhs(t, y, k1);
        for (int j = 0; j < 4; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
        rhs(t + 0.5 * dt, tmp, k2);
        for (int j = 0; j < 4; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
        rhs(t + 0.5 * dt, tmp, k3);
        for (int j = 0; j < 4; ++j) tmp[j] = y[j] + dt * k3[j];
        rhs(t + dt, tmp, k4);
        for (int j = 0; j < 4; ++j) y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return {y[0], y[2], y[1], y[3]};
}

}  // namespace

FloquetResult floquet_exponent(double q, double h, double omega) {
    if (q <= 0.0) throw domain_error("floquet: restoring coefficient q must be positive");
    if (omega <= 0.0) throw domain_error("floquet: drive frequency must be positive");
    FloquetResult out;
    const double T = 2.0 * kPi / omega;

    // route one: monodromy matrix over one period
    const Monodromy m = period_map(q, h, omega);
    const double det = m.m00 * m.m11 - m.m01 * m.m10;
    if (std::abs(det - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "floquet: monodromy determinant drifted to " << det;
        throw invariant_error(msg.str());
    }
    const double tr = m.m00 + m.m11;
    if (std::abs(tr) <= 2.0) {
        out.s = complex<double>(0.0, std::acos(0.5 * tr) / T);
        out.stable = true;
    } else if (tr > 2.0) {
        out.s = complex<double>(std::acosh(0.5 * tr) / T, 0.0);
        out.stable = false;
    } else {
        out.s = complex<double>(std::acosh(-0.5 * tr) / T, kPi / T);
        out.stable = false;
    }

    // route two: determinant of the truncated three-term recursion
    // a_n [q - (nu + n)^2 omega^2] + (q h / 2)(a_{n+1} + a_{n-1}) = 0,
    // solved in closed form through sin^2(pi nu) = D * sin^2(pi sqrt(q)/omega)
    const int half_n = 20 + static_cast<int>(std::ceil(std::sqrt(q) / omega));
    std::vector<double> c(2 * half_n + 1);
    out.recursion_ok = true;
    for (int n = -half_n; n <= half_n; ++n) {
        const double denom = q - static_cast<double>(n) * static_cast<double>(n) * omega * omega;
        if (std::abs(denom) < 1e-300) {
            out.recursion_ok = false;
            break;
        }
        c[static_cast<std::size_t>(n + half_n)] = 0.5 * q * h / denom;
    }
    if (out.recursion_ok) {
        double det_prev2 = 1.0, det_prev = 1.0;
        for (std::size_t i = 1; i < c.size(); ++i) {
            const double d = det_prev - c[i] * c[i - 1] * det_prev2;
            det_prev2 = det_prev;
            det_prev = d;
        }
        const double sp = sin_pi(std::sqrt(q) / omega);
        const double rhs = det_prev * sp * sp;
        if (rhs >= 0.0 && rhs <= 1.0) {
            out.s_recursion = complex<double>(0.0, std::asin(std::sqrt(rhs)) / kPi * omega);
        } else if (rhs > 1.0) {
            out.s_recursion =
                complex<double>(std::acosh(std::sqrt(rhs)) / kPi * omega, 0.5 * omega);
        } else {
            out.s_recursion = complex<double>(std::asinh(std::sqrt(-rhs)) / kPi * omega, 0.0);
        }
        const double scale = std::max(std::abs(out.s), std::abs(out.s_recursion));
        out.methods_agree = scale == 0.0 || std::abs(out.s - out.s_recursion) <= 0.01 * scale;
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.s_recursion = complex<double>(nan, nan);
        out.methods_agree = false;
    }

    // coefficient ratios a_n / a_{n-1} by backward continued fraction at the
    // adopted exponent
    out.coeff_ratios.assign(6, complex<double>(0.0, 0.0));
    if (h != 0.0) {
        complex<double> r(0.0, 0.0);
        for (int n = half_n + 16; n >= 1; --n) {
            const complex<double> shifted = out.s + complex<double>(0.0, n * omega);
            const complex<double> denom = shifted * shifted + q + 0.5 * q * h * r;
            r = -0.5 * q * h / denom;
            if (n <= 6) out.coeff_ratios[static_cast<std::size_t>(n - 1)] = r;
        }
    }

    const double w0 = std::sqrt(q);
    out.width = (std::abs(omega - 2.0 * w0) <= h * w0) ? h * w0 : 0.0;
    return out;
}

// ---------- radial integration ----------

namespace {

struct RadialAttempt {
    RadialRun run;
    double final_x = 0.0;
    double final_v = 0.0;
    bool finite = true;
};

RadialAttempt integrate_radial_once(double x0, double v0, double q, double h, double omega,
                                    double t_end, const RadialOptions& opt, long steps_per_period,
                                    bool keep_series) {
    const double w0 = std::sqrt(q);
    const double t_ref = 2.0 * kPi / ((h != 0.0 && omega > 0.0) ? std::max(omega, w0) : w0);
    const long steps =
        std::max<long>(16, static_cast<long>(std::ceil(t_end / t_ref)) * steps_per_period);
    const double dt = t_end / static_cast<double>(steps);
    const auto accel = [&](double t, double x) {
        double w2 = q * (1.0 + h * std::cos(omega * t));
        if (opt.slow_factor) w2 *= 1.0 + std::cos(w0 * t);
        return -w2 * x;
    };
    RadialAttempt at;
    RadialRun& run = at.run;
    run.steps = steps;
    run.dt = dt;
    double x = x0, v = v0;
    const double t_window = 2.0 * kPi / w0;
    double window_max = std::hypot(x, v / w0);
    double window_start = 0.0;
    const auto close_window = [&](double t_now) {
        run.env_t.push_back(0.5 * (window_start + t_now));
        run.env.push_back(window_max);
        window_start = t_now;
        window_max = 0.0;
    };
    if (keep_series) {
        run.t.push_back(0.0);
        run.x.push_back(x);
        run.v.push_back(v);
    }
    for (long i = 0; i < steps; ++i) {
        const double t = dt * static_cast<double>(i);
        const double k1x = v, k1v = accel(t, x);
        const double k2x = v + 0.5 * dt * k1v, k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x);
        const double k3x = v + 0.5 * dt * k2v, k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x);
        const double k4x = v + dt * k3v, k4v = accel(t + dt, x + dt * k3x);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!std::isfinite(x) || !std::isfinite(v)) {
            at.finite = false;
            break;
        }
        const double t_next = dt * static_cast<double>(i + 1);
        window_max = std::max(window_max, std::hypot(x, v / w0));
        if (t_next - window_start >= t_window || i + 1 == steps) close_window(t_next);
        if (keep_series && ((i + 1) % opt.stride == 0 || i + 1 == steps)) {
            run.t.push_back(t_next);
            run.x.push_back(x);
            run.v.push_back(v);
        }
    }
    at.final_x = x;
    at.final_v = v;
    return at;
}

void fit_envelope(RadialRun& run, double w0, double fit_fraction) {
    const std::size_t n = run.env.size();
    if (n < 4) return;
    const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - fit_fraction)));
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t used = 0;
    for (std::size_t i = first; i < n; ++i) {
        if (run.env[i] <= 0.0) continue;
        const double t = run.env_t[i];
        const double y = std::log(run.env[i]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++used;
    }
    if (used < 3) return;
    const double denom = static_cast<double>(used) * stt - st * st;
    if (denom == 0.0) return;
    run.exponent = (static_cast<double>(used) * sty - st * sy) / denom;
    const double intercept = (sy - run.exponent * st) / static_cast<double>(used);
    double rss = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        if (run.env[i] <= 0.0) continue;
        const double res = std::log(run.env[i]) - (intercept + run.exponent * run.env_t[i]);
        rss += res * res;
    }
    run.fit_residual = std::sqrt(rss / static_cast<double>(used));
    run.exponent_per_period = run.exponent * 2.0 * kPi / w0;
}

}  // namespace

RadialRun integrate_radial(double x0, double v0, double q, double h, double omega, double t_end,
                           const RadialOptions& opt) {
    if (q <= 0.0) throw domain_error("integrate_radial: restoring coefficient must be positive");
    if (t_end <= 0.0) throw domain_error("integrate_radial: integration span must be positive");
    if (h != 0.0 && omega <= 0.0)
        throw domain_error("integrate_radial: driven run needs a positive drive frequency");
    const double w0 = std::sqrt(q);
    const bool conservative = h == 0.0 && !opt.slow_factor;
    long per_period = opt.steps_per_period;
    for (int attempt = 0; attempt <= opt.max_refinements; ++attempt, per_period *= 2) {
        RadialAttempt full = integrate_radial_once(x0, v0, q, h, omega, t_end, opt, per_period, true);
        if (!full.finite) continue;
        // sanity: a half-step pass must land on the same final state
        RadialAttempt check =
            integrate_radial_once(x0, v0, q, h, omega, t_end, opt, 2 * per_period, false);
        if (!check.finite) continue;
        const double scale =
            std::max({std::hypot(full.final_x, full.final_v / w0), std::abs(x0), 1e-300});
        const double mismatch =
            std::hypot(full.final_x - check.final_x, (full.final_v - check.final_v) / w0) / scale;
        if (mismatch > 1e-6) continue;
        if (conservative) {
            const double e0 = 0.5 * v0 * v0 + 0.5 * q * x0 * x0;
            const double e1 = 0.5 * full.final_v * full.final_v + 0.5 * q * full.final_x * full.final_x;
            full.run.energy_drift = std::abs(e1 - e0) / std::max(e0, 1e-300);
            const double periods = t_end * w0 / (2.0 * kPi);
            if (full.run.energy_drift > opt.energy_tol_per_period * std::max(1.0, periods)) continue;
        }
        fit_envelope(full.run, w0, opt.fit_fraction);
        return full.run;
    }
    throw invariant_error("integrate_radial: step-size sanity check failed at the allowed refinement depth");
}

// ---------- momentum scan ----------

std::vector<double> default_radii(int n) {
    if (n < 1) throw domain_error("default_radii: need at least one sample");
    std::vector<double> r(static_cast<std::size_t>(n));
    const double lo = 0.15, hi = 0.9;
    for (int i = 0; i < n; ++i)
        r[static_cast<std::size_t>(i)] =
            n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return r;
}

namespace {

void extract_resonance(ScanResult& res) {
    const auto& rows = res.rows;
    std::size_t imax = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].growth_per_atom > rows[imax].growth_per_atom) imax = i;
    const double gmax = rows[imax].growth_per_atom;
    if (gmax <= 0.0) {
        res.center = std::numeric_limits<double>::quiet_NaN();
        res.fwhm = std::numeric_limits<double>::quiet_NaN();
        res.peaks = 0;
        return;
    }
    res.center = rows[imax].p;
    if (imax > 0 && imax + 1 < rows.size()) {
        const double gm = rows[imax - 1].growth_per_atom;
        const double gp = rows[imax + 1].growth_per_atom;
        const double denom = gm - 2.0 * gmax + gp;
        if (denom < 0.0) {
            const double step = 0.5 * (rows[imax + 1].p - rows[imax - 1].p);
            res.center = rows[imax].p - 0.5 * step * (gp - gm) / denom;
        }
    }
    const double half = 0.5 * gmax;
    const auto interp = [&](std::size_t lo, std::size_t hi) {
        const double g0 = rows[lo].growth_per_atom, g1 = rows[hi].growth_per_atom;
        if (g1 == g0) return 0.5 * (rows[lo].p + rows[hi].p);
        return rows[lo].p + (half - g0) / (g1 - g0) * (rows[hi].p - rows[lo].p);
    };
    double left = rows.front().p;
    for (std::size_t i = imax; i-- > 0;) {
        if (rows[i].growth_per_atom < half) {
            left = interp(i, i + 1);
            break;
        }
    }
    double right = rows.back().p;
    for (std::size_t i = imax + 1; i < rows.size(); ++i) {
        if (rows[i].growth_per_atom < half) {
            right = interp(i - 1, i);
            break;
        }
    }
    res.fwhm = right - left;
    res.peaks = 0;
    bool above = false;
    for (const auto& row : rows) {
        const bool now = row.growth_per_atom > half;
        if (now && !above) ++res.peaks;
        above = now;
    }
}

}  // namespace

ScanResult momentum_scan(double p_min, double p_max, int steps, const std::vector<double>& radii,
                         const ChannelParams& cp, const ConstantSet& cs, const ScanOptions& opt) {
    if (!(p_min > 0.0) || !(p_max > p_min)) throw domain_error("momentum_scan: bad momentum range");
    if (steps < 2) throw domain_error("momentum_scan: need at least two scan points");
    if (radii.empty()) throw domain_error("momentum_scan: need at least one orbit radius");
    for (double r : radii)
        if (r <= 0.0) throw domain_error("momentum_scan: radii must be positive");
    if (opt.order != 1 && opt.order != 2)
        throw domain_error("momentum_scan: resonance order must be 1 or 2");
    if (opt.workers < 1) throw domain_error("momentum_scan: need at least one worker");

    std::vector<double> depth(radii.size());
    for (std::size_t j = 0; j < radii.size(); ++j)
        depth[j] = cs.lambda_e / effective_radius(radii[j], cp);
    const double log_threshold = std::log(opt.threshold);
    const double atoms = cp.atoms();

    ScanResult res;
    res.rows.resize(static_cast<std::size_t>(steps));
    const auto compute_row = [&](int i) {
        const double p =
            p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
        const BeamParams beam = beam_from_momentum(p, cp.d, cs);
        const double drive = cs.omega_e / beam.gamma;
        ScanRow row;
        row.p = p;
        int ejected = 0;
        for (std::size_t j = 0; j < radii.size(); ++j) {
            double per_atom = 0.0;
            if (opt.order == 1) {
                per_atom =
                    parametric_resonance(depth[j], beam.omega0, drive - 2.0 * beam.omega0).per_atom;
            } else {
                const FloquetResult fq =
                    floquet_exponent(beam.omega0 * beam.omega0, depth[j], drive);
                per_atom = std::max(0.0, fq.s.real()) * 2.0 * kPi / beam.omega0;
            }
            if (per_atom * atoms >= log_threshold) ++ejected;
            row.growth_per_atom = std::max(row.growth_per_atom, per_atom);
        }
        row.atoms_to_double = row.growth_per_atom > 0.0
                                  ? std::log(2.0) / row.growth_per_atom
                                  : std::numeric_limits<double>::infinity();
        row.ejected = row.growth_per_atom * atoms >= log_threshold;
        row.ejected_fraction = static_cast<double>(ejected) / static_cast<double>(radii.size());
        res.rows[static_cast<std::size_t>(i)] = row;
    };

    const int workers = std::min<int>(opt.workers, steps);
    if (workers == 1) {
        for (int i = 0; i < steps; ++i) compute_row(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int i = w; i < steps; i += workers) compute_row(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }
    extract_resonance(res);
    return res;
}

// ---------- natural-units field bridge ----------

dyn::StaticRadialField make_static_field(const std::function<std::array<double, 3>(double)>& lab_profile,
                                         const ConstantSet& cs, double q) {
    const double lu = cs.length_unit();  // angstrom per natural length
    const double eu = cs.mec2;           // eV per natural energy
    auto profile = [lab_profile, lu, eu](double r_nat) -> std::array<double, 3> {
        const std::array<double, 3> v = lab_profile(r_nat * lu);
        return {v[0] / eu, v[1] * lu / eu, v[2] * lu * lu / eu};
    };
    return dyn::StaticRadialField(std::move(profile), q);
}

dyn::StaticRadialField make_lindhard_field(const ChannelParams& cp, const ConstantSet& cs,
                                           double q) {
    return make_static_field(
        [cp](double r) {
            const Lindhard l = lindhard(r, cp);
            return std::array<double, 3>{l.U, l.U1, l.U2};
        },
        cs, q);
}

}  // namespace zbw::chan
