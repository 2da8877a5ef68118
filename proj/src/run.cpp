#include "zbw/run.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zbw/channeling.hpp"
#include "zbw/config.hpp"
#include "zbw/dirac.hpp"
#include "zbw/dynamics.hpp"
#include "zbw/errors.hpp"
#include "zbw/selftest.hpp"
#include "zbw/sta.hpp"
#include "zbw/units.hpp"

namespace zbw::io {

using sta::coeff_norm;
using sta::Mv;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::string format_cell(double x) {
    std::array<char, 48> buf;
    const auto res =
        std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

std::string format_cell(long x) {
    std::array<char, 24> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

// Shortest round-trip form, for log lines and report tables (CSV cells keep
// the fixed 17-digit contract above).
std::string format_num(double x) {
    std::array<char, 48> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string format_num(long x) { return format_cell(x); }

std::string file_header(const RunConfig& cfg, const std::string& command) {
    std::string h;
    h += "# ";
    h += kToolName;
    h += " ";
    h += kToolVersion;
    h += "\n# config ";
    h += config_hash_hex(cfg);
    h += "\n# command ";
    h += command;
    h += "\n";
    return h;
}

namespace {

// ---------- output plumbing (single writer) ----------

std::filesystem::path output_path(const RunConfig& cfg, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw config_error("config: cannot create out_dir \"" + cfg.out_dir + "\"");
    return std::filesystem::path(cfg.out_dir) / name;
}

class CsvFile {
public:
    CsvFile(const RunConfig& cfg, const std::string& command, const std::string& name,
            const std::vector<std::string>& columns)
        : path_(output_path(cfg, name)), f_(path_, std::ios::binary) {
        if (!f_) throw config_error("config: cannot open output file " + path_.string());
        f_ << file_header(cfg, command);
        for (std::size_t i = 0; i < columns.size(); ++i) f_ << (i ? "," : "") << columns[i];
        f_ << "\n";
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            f_ << (i ? "," : "") << format_cell(cells[i]);
        f_ << "\n";
        ++rows_;
    }

    long rows() const { return rows_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream f_;
    long rows_ = 0;
};

// ---------- shared trajectory machinery ----------

struct Scales {
    double time = 1.0;
    double length = 1.0;
    double momentum = 1.0;  // natural momentum -> MeV/c in lab mode
    double energy = 1.0;    // natural mass/energy -> eV in lab mode
};

Scales scales_for(const RunConfig& cfg, const ConstantSet& cs) {
    Scales s;
    if (cfg.units == "lab") {
        s.time = cs.time_unit();
        s.length = cs.length_unit();
        s.momentum = cs.mec2 / 1.0e6;
        s.energy = cs.mec2;
    }
    return s;
}

const std::vector<std::string> kTrajectoryColumns = {
    "tau",          "phi",
    "z0",           "z1",
    "z2",           "z3",
    "p0",           "p1",
    "p2",           "p3",
    "m",            "m1",
    "m2",           "Phi",
    "kappa1_drift", "mass_integral_drift",
    "rotor_norm_drift",
    "s1",           "s2",
    "s3",           "r1",
    "r2",           "r3",
    "ref_err"};

std::vector<double> trajectory_row(const dyn::ParticleState& st, const dyn::Observables& o,
                                   double Phi, const dyn::Monitors& mon, double ref_err,
                                   const Scales& sc) {
    const Mv r = st.z - dyn::zitter_center(st);
    return {st.tau * sc.time,
            st.phi,
            st.z.c[1] * sc.length,
            st.z.c[2] * sc.length,
            st.z.c[3] * sc.length,
            st.z.c[4] * sc.length,
            st.p.c[1] * sc.momentum,
            st.p.c[2] * sc.momentum,
            st.p.c[3] * sc.momentum,
            st.p.c[4] * sc.momentum,
            o.m * sc.energy,
            o.m1 * sc.energy,
            o.m2 * sc.energy,
            Phi * sc.energy,
            mon.kappa1_drift,
            mon.mass_integral_drift,
            mon.rotor_norm_drift,
            o.s_vec.c[2],
            o.s_vec.c[3],
            o.s_vec.c[4],
            r.c[2] * sc.length,
            r.c[3] * sc.length,
            r.c[4] * sc.length,
            ref_err};
}

dyn::ParticleState launch_on_shell(const Mv& rotor, const dyn::Field& field, const Mv& z0) {
    const dyn::Frame e = dyn::frame_of(rotor);
    const Mv S = 0.5 * sta::outer(e.e0 + e.e2, e.e1);
    const double phi0 = dyn::spin_potential(S, field.F(z0), dyn::kElectronCharge);
    return dyn::make_state(z0, rotor, e.e0 - phi0 * e.e2, dyn::kElectronCharge);
}

int gate_monitors(const dyn::Monitors& mon, double tol, std::ostream& out) {
    const std::array<std::pair<const char*, double>, 5> drifts = {
        {{"kappa1", mon.kappa1_drift},
         {"mass integral", mon.mass_integral_drift},
         {"rotor norm", mon.rotor_norm_drift},
         {"gauge", mon.gauge_drift},
         {"energy", mon.energy_drift}}};
    int bad = 0;
    for (const auto& [name, value] : drifts) {
        if (value > tol) {
            out << "[FAIL] invariant drift: " << name << " = " << format_num(value)
                << " exceeds tolerance " << format_num(tol) << "\n";
            ++bad;
        }
    }
    return bad;
}

void print_monitors(const dyn::Monitors& mon, std::ostream& out) {
    out << "  drifts: kappa1 " << format_num(mon.kappa1_drift) << ", mass integral "
        << format_num(mon.mass_integral_drift) << ", rotor norm "
        << format_num(mon.rotor_norm_drift) << ", gauge " << format_num(mon.gauge_drift)
        << ", energy " << format_num(mon.energy_drift) << "\n";
}

// reference closed form for a trajectory run, when one applies
using RefFn = std::function<double(const dyn::ParticleState&)>;

RefFn free_reference(const Mv& p, const Mv& S0, const Mv& z0, dyn::VelocityMode mode) {
    return [p, S0, z0, mode](const dyn::ParticleState& st) {
        const dyn::FreeSolution ref = dyn::free_solution(p, S0, z0, mode, st.tau);
        const double zerr = coeff_norm(st.z - ref.state.z) /
                            std::max(1.0, coeff_norm(ref.state.z));
        return std::max(zerr, coeff_norm(st.p - ref.state.p));
    };
}

// The closed form integrates its position by quadrature over the whole phase
// span, so a fresh evaluation per emitted row would cost O(rows^2). The exact
// solution composes, so the reference is advanced sample to sample instead.
RefFn constant_field_reference(const dyn::ParticleState& start, const Mv& f) {
    auto prev = std::make_shared<dyn::ParticleState>(start);
    return [prev, f](const dyn::ParticleState& st) {
        *prev = dyn::constant_field_solution(*prev, f, st.tau - prev->tau).state;
        const double zerr =
            coeff_norm(st.z - prev->z) / std::max(1.0, coeff_norm(prev->z));
        return std::max(zerr, coeff_norm(st.p - prev->p));
    };
}

struct TrajectoryOutcome {
    dyn::Monitors monitors;
    double worst_ref = 0.0;
    long rows = 0;
};

TrajectoryOutcome run_trajectory(const RunConfig& cfg, const dyn::ParticleState& start,
                                 const dyn::Field& field, const RefFn& ref, CsvFile& csv,
                                 const Scales& sc) {
    const double m0 = dyn::observables(start).m;
    const double dtau = (kPi / m0) / static_cast<double>(cfg.steps_per_period);
    const long steps = std::lround(cfg.periods * static_cast<double>(cfg.steps_per_period));

    TrajectoryOutcome outcome;
    dyn::SampleSink sink = [&](const dyn::Sample& smp) {
        const dyn::Observables o = dyn::observables(smp.state);
        double err = 0.0;
        if (ref) {
            err = ref(smp.state);
            outcome.worst_ref = std::max(outcome.worst_ref, err);
        }
        csv.row(trajectory_row(smp.state, o, smp.derivs.Phi, smp.monitors, err, sc));
    };
    outcome.monitors = dyn::Monitors{};
    dyn::integrate(start, field, dtau, steps, &outcome.monitors, &sink, cfg.stride);
    outcome.rows = csv.rows();
    return outcome;
}

// ---------- subcommands ----------

int cmd_selftest(const RunConfig& cfg, std::ostream& out) {
    const SelftestCounts counts = run_selftest(out, cfg);
    return counts.failed > 0 ? 1 : 0;
}

int cmd_free(const RunConfig& cfg, std::ostream& out) {
    const ConstantSet cs = constants_by_name(cfg.constants);
    const Scales sc = scales_for(cfg, cs);
    CsvFile csv(cfg, "free", "free.csv", kTrajectoryColumns);

    const Mv p = sta::gamma(0);
    const Mv z0;
    out << "free: mode=" << cfg.mode << " periods=" << format_num(cfg.periods)
        << " steps_per_period=" << format_num(cfg.steps_per_period) << "\n";

    if (cfg.mode == "timelike") {
        // the equations of motion integrate the lightlike model only; the
        // timelike family is emitted from its closed form
        const Mv S0 = 0.5 * sta::outer(sta::gamma(2), sta::gamma(1));
        const double dtau = kPi / static_cast<double>(cfg.steps_per_period);
        const long steps = std::lround(cfg.periods * static_cast<double>(cfg.steps_per_period));
        const dyn::Monitors mon;
        for (long k = 0; k * cfg.stride <= steps; ++k) {
            const double tau = static_cast<double>(k * cfg.stride) * dtau;
            const dyn::FreeSolution ref =
                dyn::free_solution(p, S0, z0, dyn::VelocityMode::timelike, tau);
            const dyn::Observables o = dyn::observables(ref.state);
            csv.row(trajectory_row(ref.state, o, 0.0, mon, 0.0, sc));
        }
        out << "  closed-form emission (timelike runs are not integrated)\n";
        out << "  wrote " << csv.path().string() << " (" << format_num(csv.rows())
            << " rows)\n";
        return 0;
    }

    const Mv S0 = 0.5 * sta::outer(sta::gamma(0) + sta::gamma(2), sta::gamma(1));
    const dyn::FreeSolution start =
        dyn::free_solution(p, S0, z0, dyn::VelocityMode::lightlike, 0.0);
    const dyn::ZeroField field;

    double worst_radius = 0.0;
    const RefFn base_ref = free_reference(p, S0, z0, dyn::VelocityMode::lightlike);
    const RefFn ref = [&](const dyn::ParticleState& st) {
        const dyn::Observables o = dyn::observables(st);
        const Mv radius = sta::inner(o.S, st.p);
        worst_radius = std::max(worst_radius,
                                std::abs(std::sqrt(-sta::scalar_product(radius, radius)) -
                                         dyn::kLambdaE));
        return base_ref(st);
    };

    const TrajectoryOutcome res = run_trajectory(cfg, start.state, field, ref, csv, sc);
    out << "  worst closed-form deviation: " << format_num(res.worst_ref) << "\n";
    out << "  helix radius deviation:      " << format_num(worst_radius) << "\n";
    print_monitors(res.monitors, out);
    out << "  wrote " << csv.path().string() << " (" << format_num(res.rows) << " rows)\n";
    return gate_monitors(res.monitors, cfg.tol_invariant, out) ? 1 : 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const ConstantSet cs = constants_by_name(cfg.constants);
    const Scales sc = scales_for(cfg, cs);
    if (cfg.mode != "lightlike")
        throw config_error("config: key \"mode\" must be lightlike for simulate runs");

    std::unique_ptr<dyn::Field> field;
    Mv z0;
    Mv uniform;
    if (cfg.field == "none") {
        field = std::make_unique<dyn::ZeroField>();
    } else if (cfg.field == "uniform") {
        for (int k = 0; k < 3; ++k) {
            uniform += cfg.uniform_field[k] * sta::sigma(k + 1);
            uniform += cfg.uniform_field[3 + k] * sta::dual(sta::sigma(k + 1));
        }
        field = std::make_unique<dyn::UniformField>(uniform);
    } else {
        const chan::ChannelParams cp = chan::params_from_z(cfg.Z, cfg.d_angstrom, cs);
        field = std::make_unique<dyn::StaticRadialField>(
            chan::make_lindhard_field(cp, cs, dyn::kElectronCharge));
        z0 = (cfg.r0_angstrom / cs.length_unit()) * sta::gamma(1);
    }

    const dyn::ParticleState start = launch_on_shell(Mv::scalar(1.0), *field, z0);
    RefFn ref;
    if (cfg.field == "none") {
        const Mv S0 = 0.5 * sta::outer(sta::gamma(0) + sta::gamma(2), sta::gamma(1));
        ref = free_reference(start.p, S0, z0, dyn::VelocityMode::lightlike);
    } else if (cfg.field == "uniform") {
        ref = constant_field_reference(start, uniform);
    }

    CsvFile csv(cfg, "simulate", "trajectory.csv", kTrajectoryColumns);
    out << "simulate: field=" << cfg.field << " periods=" << format_num(cfg.periods)
        << " steps_per_period=" << format_num(cfg.steps_per_period) << "\n";
    const TrajectoryOutcome res = run_trajectory(cfg, start, *field, ref, csv, sc);
    if (ref)
        out << "  worst closed-form deviation: " << format_num(res.worst_ref)
            << (cfg.field == "uniform"
                    ? " (exact for axial magnetic fields; first order in transverse E)\n"
                    : "\n");
    print_monitors(res.monitors, out);
    out << "  wrote " << csv.path().string() << " (" << format_num(res.rows) << " rows)\n";
    return gate_monitors(res.monitors, cfg.tol_invariant, out) ? 1 : 0;
}

int cmd_channel_orbit(const RunConfig& cfg, std::ostream& out) {
    const ConstantSet cs = constants_by_name(cfg.constants);
    chan::ChannelParams cp = chan::params_from_z(cfg.Z, cfg.d_angstrom, cs);
    cp.crystal_length = cfg.crystal_length_angstrom;
    const chan::BeamParams beam = cfg.p_mev > 0.0
                                      ? chan::beam_from_momentum(cfg.p_mev, cfg.d_angstrom, cs)
                                      : chan::beam_kinematics(cfg.d_angstrom, cs);
    const chan::CircularOrbit orb = chan::circular_orbit(cfg.r0_angstrom, beam, cp);

    const double t_end = cfg.periods * (2.0 * kPi / orb.thetadot0);
    const long steps = std::lround(cfg.periods * static_cast<double>(cfg.steps_per_period));
    const chan::OrbitRun run =
        chan::integrate_orbit(cfg.r0_angstrom, orb.thetadot0, beam, cp, t_end, steps, cfg.stride);

    CsvFile csv(cfg, "channel-orbit", "orbit.csv", {"t", "x", "y", "vx", "vy"});
    for (const chan::OrbitSample& s : run.samples) csv.row({s.t, s.x, s.y, s.vx, s.vy});

    out << "channel-orbit: r0=" << format_num(cfg.r0_angstrom)
        << " A, p=" << format_num(beam.p) << " MeV/c, gamma=" << format_num(beam.gamma)
        << "\n";
    out << "  circular rate:      " << format_num(orb.thetadot0) << " 1/s\n";
    out << "  radial mode rate:   " << format_num(orb.Omega0) << " 1/s\n";
    out << "  crystal revolutions: " << format_num(orb.revolutions) << "\n";
    out << "  radius range: [" << format_num(run.r_min) << ", " << format_num(run.r_max)
        << "] A, angular momentum drift " << format_num(run.L_drift) << "\n";
    out << "  wrote " << csv.path().string() << " (" << format_num(csv.rows()) << " rows)\n";
    if (run.L_drift > cfg.tol_invariant) {
        out << "[FAIL] invariant drift: angular momentum = " << format_num(run.L_drift)
            << " exceeds tolerance " << format_num(cfg.tol_invariant) << "\n";
        return 1;
    }
    return 0;
}

int cmd_channel_scan(const RunConfig& cfg, std::ostream& out) {
    const ConstantSet cs = constants_by_name(cfg.constants);
    chan::ChannelParams cp = chan::params_from_z(cfg.Z, cfg.d_angstrom, cs);
    cp.crystal_length = cfg.crystal_length_angstrom;
    chan::ScanOptions opt;
    opt.order = static_cast<int>(cfg.scan_order);
    opt.threshold = cfg.ejection_threshold;
    opt.workers = static_cast<int>(cfg.workers);

    const chan::ScanResult res =
        chan::momentum_scan(cfg.p_min_mev, cfg.p_max_mev, static_cast<int>(cfg.scan_steps),
                            chan::default_radii(), cp, cs, opt);

    CsvFile csv(cfg, "channel-scan", "scan.csv",
                {"p_mev", "growth_per_atom", "atoms_to_double", "ejected", "ejected_fraction"});
    for (const chan::ScanRow& r : res.rows)
        csv.row({r.p, r.growth_per_atom, r.atoms_to_double, r.ejected ? 1.0 : 0.0,
                 r.ejected_fraction});

    const chan::BeamParams pred = chan::beam_kinematics(cfg.d_angstrom, cs);
    const double predicted = opt.order == 1 ? pred.p : pred.p_second_order;
    const double h_ref = chan::zitter_perturbation(0.5, pred, cp, 0.0, 0.0, cs).h;
    const double dp = chan::momentum_width(h_ref, predicted);

    out << "channel-scan: " << format_num(cfg.scan_steps) << " points over ["
        << format_num(cfg.p_min_mev) << ", " << format_num(cfg.p_max_mev)
        << "] MeV/c, order " << format_num(cfg.scan_order) << ", "
        << format_num(cfg.workers) << " workers\n";
    out << "  resonance center: " << format_num(res.center) << " MeV/c (kinematic prediction "
        << format_num(predicted) << ", offset " << format_num(res.center - predicted)
        << ")\n";
    out << "  FWHM: " << format_num(res.fwhm) << " MeV/c (band-width prediction "
        << format_num(dp) << ")\n";
    out << "  peaks: " << format_num(static_cast<long>(res.peaks)) << "\n";
    out << "  wrote " << csv.path().string() << " (" << format_num(csv.rows()) << " rows)\n";
    if (res.peaks != 1) {
        out << "[FAIL] invariant: expected a single resonance peak, found "
            << format_num(static_cast<long>(res.peaks)) << "\n";
        return 1;
    }
    return 0;
}

int cmd_floquet(const RunConfig& cfg, std::ostream& out) {
    CsvFile csv(cfg, "floquet", "floquet.csv",
                {"q", "h", "omega", "re_s", "im_s", "stable", "methods_agree", "width"});
    const long n = cfg.floquet_omega_max > 0.0 ? cfg.floquet_points : 1;
    long disagreements = 0;
    for (long k = 0; k < n; ++k) {
        const double omega =
            n == 1 ? cfg.floquet_omega_min
                   : cfg.floquet_omega_min + (cfg.floquet_omega_max - cfg.floquet_omega_min) *
                                                 static_cast<double>(k) /
                                                 static_cast<double>(n - 1);
        const chan::FloquetResult f = chan::floquet_exponent(cfg.floquet_q, cfg.floquet_h, omega);
        if (f.recursion_ok && !f.methods_agree) ++disagreements;
        csv.row({cfg.floquet_q, cfg.floquet_h, omega, f.s.real(), f.s.imag(),
                 f.stable ? 1.0 : 0.0, f.methods_agree ? 1.0 : 0.0, f.width});
    }
    const double root = std::sqrt(cfg.floquet_q);
    out << "floquet: q=" << format_num(cfg.floquet_q) << " h=" << format_num(cfg.floquet_h)
        << ", " << format_num(n) << " drive point" << (n == 1 ? "" : "s") << "\n";
    out << "  principal band: omega in [" << format_num(2.0 * root - 0.5 * cfg.floquet_h * root)
        << ", " << format_num(2.0 * root + 0.5 * cfg.floquet_h * root) << "]\n";
    out << "  route disagreements: " << format_num(disagreements) << "\n";
    out << "  wrote " << csv.path().string() << " (" << format_num(csv.rows()) << " rows)\n";
    return 0;
}

// local deterministic samplers for the spinor checks (no test code in src)
double sample_uniform(std::mt19937& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Mv sample_rotor(std::mt19937& rng, double scale) {
    Mv b;
    for (int i = 5; i <= 10; ++i) b.c[i] = sample_uniform(rng, -scale, scale);
    return sta::exp_bivector(b);
}

Mv sample_spinor(std::mt19937& rng) {
    const double beta = sample_uniform(rng, -3.0, 3.0);
    const double rho = sample_uniform(rng, 0.3, 2.5);
    const Mv phase =
        Mv::scalar(std::cos(beta / 2.0)) + sta::pseudoscalar() * std::sin(beta / 2.0);
    return phase * sample_rotor(rng, 0.8) * std::sqrt(rho);
}

Mv sample_vector(std::mt19937& rng, double scale) {
    Mv p;
    for (int mu = 0; mu < 4; ++mu) p.c[1 + mu] = sample_uniform(rng, -scale, scale);
    return p;
}

Mv sample_bivector(std::mt19937& rng, double scale) {
    Mv f;
    for (int i = 5; i <= 10; ++i) f.c[i] = sample_uniform(rng, -scale, scale);
    return f;
}

int cmd_dirac_check(const RunConfig& cfg, std::ostream& out) {
    std::mt19937 rng(2026);
    const auto A = dirac::zero_potential();

    struct Check {
        std::string name;
        double value = 0.0;
        double tol = 0.0;
        bool passed() const { return value <= tol; }
    };
    std::vector<Check> checks;

    double worst_standard = 0.0, worst_projected = 0.0, worst_identity = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const sta::Rotor attitude(sample_rotor(rng, 0.8));
        const dirac::PlaneWaveSolution sol = dirac::electron_plane_wave(attitude);
        for (int i = 0; i < 4; ++i) {
            const Mv x = sample_vector(rng, 3.0);
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
    checks.push_back({"plane-wave residual, standard form", worst_standard, 1e-12});
    checks.push_back({"plane-wave residual, projected form", worst_projected, 1e-12});
    checks.push_back({"momentum-velocity identity", worst_identity, 1e-12});

    double worst_gamma0 = 0.0;
    bool all_gauge = true;
    for (long i = 0; i < cfg.dirac_samples; ++i) {
        const std::array<double, 3> theta{sample_uniform(rng, -3.0, 3.0),
                                          sample_uniform(rng, -3.0, 3.0),
                                          sample_uniform(rng, -3.0, 3.0)};
        const dirac::GaugeReport r =
            dirac::electroweak_gauge_check(theta, sample_uniform(rng, -3.0, 3.0));
        all_gauge = all_gauge && r.passed;
        worst_gamma0 = std::max(worst_gamma0, r.gamma0_deviation);
    }
    checks.push_back({"gauge elements preserve the mass term",
                      all_gauge ? worst_gamma0 : 1.0, 1e-12});

    double worst_current = 0.0, worst_reduction = 0.0, worst_half = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::array<double, 3> theta{sample_uniform(rng, -3.0, 3.0),
                                          sample_uniform(rng, -3.0, 3.0),
                                          sample_uniform(rng, -3.0, 3.0)};
        const Mv U = dirac::electroweak_gauge_check(theta, sample_uniform(rng, -3.0, 3.0)).U;
        const dirac::SpinorField field = dirac::plane_wave(sample_spinor(rng),
                                                           sample_vector(rng, 1.5));
        const Mv x = sample_vector(rng, 3.0);
        const Mv F = sample_bivector(rng, 1.0);
        const Mv psi = field.psi(x);
        const Mv current = psi * sta::gamma(0) * sta::reverse(psi);
        const Mv transformed = psi * U * sta::gamma(0) * sta::reverse(psi * U);
        worst_current = std::max(worst_current, coeff_norm(transformed - current) /
                                                    std::max(1.0, coeff_norm(current)));

        const dirac::LocalObservables obs = dirac::local_observables(field, x, F);
        worst_reduction =
            std::max(worst_reduction,
                     coeff_norm(obs.rho_S - obs.S.mv() * obs.rho) / obs.rho);
        const double lhs = 2.0 * dyn::kElectronCharge * obs.zitter_interaction_density;
        const double rhs = obs.rho * dyn::spin_potential(obs.S.mv(), F, dyn::kElectronCharge);
        worst_half = std::max(worst_half,
                              std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    checks.push_back({"gauge action preserves the current", worst_current, 1e-12});
    checks.push_back({"projected spin density reduction", worst_reduction, 1e-10});
    checks.push_back({"projected density vs spin potential", worst_half, 1e-12});

    // text table: stdout and the .txt artifact carry the same body
    std::ostringstream table;
    bool all = true;
    table << "check                                    max residual           tolerance  result\n";
    for (const Check& c : checks) {
        all = all && c.passed();
        table << c.name;
        for (std::size_t k = c.name.size(); k < 41; ++k) table << ' ';
        const std::string v = format_num(c.value);
        for (std::size_t k = v.size(); k < 23; ++k) table << ' ';
        table << v << ' ';
        const std::string t = format_num(c.tol);
        for (std::size_t k = t.size(); k < 10; ++k) table << ' ';
        table << t << "  " << (c.passed() ? "pass" : "FAIL") << "\n";
    }
    out << "dirac-check: " << format_num(cfg.dirac_samples) << " gauge samples\n" << table.str();
    out << (all ? "all checks passed\n" : "CHECKS FAILED\n");

    {
        std::ofstream txt(output_path(cfg, "dirac_check.txt"), std::ios::binary);
        txt << file_header(cfg, "dirac-check") << table.str();
    }
    {
        // JSON cannot carry '#' comments; the header fields lead instead
        nlohmann::ordered_json j;
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["config"] = config_hash_hex(cfg);
        j["command"] = "dirac-check";
        j["checks"] = nlohmann::ordered_json::array();
        for (const Check& c : checks)
            j["checks"].push_back({{"name", c.name},
                                   {"max_residual", c.value},
                                   {"tolerance", c.tol},
                                   {"passed", c.passed()}});
        j["all_passed"] = all;
        std::ofstream jf(output_path(cfg, "dirac_check.json"), std::ios::binary);
        jf << j.dump(2) << "\n";
    }
    out << "  wrote dirac_check.txt, dirac_check.json\n";
    return all ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"spacetime-algebra toolkit for the lightlike electron model"};
    app.name(kToolName);
    app.require_subcommand(1);

    std::string config_path;
    nlohmann::json overrides = nlohmann::json::object();
    std::array<std::optional<double>, 6> field_components;
    int code = 0;

    app.add_option("--config", config_path, "JSON configuration file");
    auto opt_str = [&overrides](CLI::App* cmd, const std::string& flag, const std::string& key,
                                const std::string& desc) {
        cmd->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, desc);
    };
    auto opt_real = [&overrides](CLI::App* cmd, const std::string& flag, const std::string& key,
                                 const std::string& desc) {
        cmd->add_option_function<double>(
            flag, [&overrides, key](const double& v) { overrides[key] = v; }, desc);
    };
    auto opt_int = [&overrides](CLI::App* cmd, const std::string& flag, const std::string& key,
                                const std::string& desc) {
        cmd->add_option_function<long>(
            flag, [&overrides, key](const long& v) { overrides[key] = v; }, desc);
    };

    opt_str(&app, "--constants", "constants", "constant set: paper | precise");
    opt_str(&app, "--out-dir", "out_dir", "directory for output files");
    opt_str(&app, "--units", "units", "trajectory output units: natural | lab");

    auto make_cfg = [&]() {
        nlohmann::json base = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path, std::ios::binary);
            if (!f) throw config_error("config: cannot read file " + config_path);
            std::ostringstream ss;
            ss << f.rdbuf();
            try {
                base = nlohmann::json::parse(ss.str());
            } catch (const nlohmann::json::exception& e) {
                throw config_error(std::string("config: malformed JSON: ") + e.what());
            }
            if (!base.is_object())
                throw config_error("config: the document must be a JSON object");
        }
        base.update(overrides);
        bool any_component = false;
        for (const auto& c : field_components) any_component = any_component || c.has_value();
        if (any_component) {
            std::array<double, 6> f{0, 0, 0, 0, 0, 0};
            if (base.contains("uniform_field") && base["uniform_field"].is_array() &&
                base["uniform_field"].size() == 6)
                for (int k = 0; k < 6; ++k) f[k] = base["uniform_field"][k].get<double>();
            for (int k = 0; k < 6; ++k)
                if (field_components[k]) f[k] = *field_components[k];
            base["uniform_field"] = f;
        }
        return parse_config(base.dump());
    };

    auto attach = [&](const char* name, const char* desc, int (*body)(const RunConfig&,
                                                                      std::ostream&)) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->fallthrough();
        cmd->callback([&, body] { code = body(make_cfg(), out); });
        return cmd;
    };

    attach("selftest", "run the built-in invariant suite and discrepancy report", cmd_selftest);

    CLI::App* free_cmd = attach("free", "integrate a free particle against its closed form",
                                cmd_free);
    opt_str(free_cmd, "--mode", "mode", "velocity mode: lightlike | timelike");
    opt_real(free_cmd, "--periods", "periods", "run length in internal periods");
    opt_int(free_cmd, "--steps-per-period", "steps_per_period", "integrator resolution");
    opt_int(free_cmd, "--stride", "stride", "sample decimation");
    opt_real(free_cmd, "--tol", "tol_invariant", "invariant drift gate");

    CLI::App* sim_cmd = attach("simulate", "integrate a driven trajectory", cmd_simulate);
    opt_str(sim_cmd, "--field", "field", "external field: none | uniform | lindhard");
    opt_real(sim_cmd, "--periods", "periods", "run length in internal periods");
    opt_int(sim_cmd, "--steps-per-period", "steps_per_period", "integrator resolution");
    opt_int(sim_cmd, "--stride", "stride", "sample decimation");
    opt_real(sim_cmd, "--tol", "tol_invariant", "invariant drift gate");
    opt_real(sim_cmd, "--r0", "r0_angstrom", "launch radius for the string field, angstrom");
    const char* comp_names[6] = {"--e1", "--e2", "--e3", "--b1", "--b2", "--b3"};
    for (int k = 0; k < 6; ++k)
        sim_cmd->add_option_function<double>(
            comp_names[k],
            [&field_components, k](const double& v) { field_components[k] = v; },
            "uniform field component, natural units");

    CLI::App* orbit_cmd = attach("channel-orbit", "integrate a transverse channeled orbit",
                                 cmd_channel_orbit);
    opt_real(orbit_cmd, "--r0", "r0_angstrom", "orbit radius, angstrom");
    opt_real(orbit_cmd, "--p-mev", "p_mev", "beam momentum, MeV/c (0: clock resonance)");
    opt_real(orbit_cmd, "--periods", "periods", "run length in orbital periods");
    opt_int(orbit_cmd, "--steps-per-period", "steps_per_period", "integrator resolution");
    opt_int(orbit_cmd, "--stride", "stride", "sample decimation");
    opt_real(orbit_cmd, "--d", "d_angstrom", "interatomic spacing, angstrom");
    opt_real(orbit_cmd, "--z", "Z", "atomic number");
    opt_real(orbit_cmd, "--length", "crystal_length_angstrom", "crystal length, angstrom");
    opt_real(orbit_cmd, "--tol", "tol_invariant", "angular momentum drift gate");

    CLI::App* scan_cmd = attach("channel-scan", "scan beam momentum across the resonance",
                                cmd_channel_scan);
    opt_real(scan_cmd, "--p-min", "p_min_mev", "scan start, MeV/c");
    opt_real(scan_cmd, "--p-max", "p_max_mev", "scan end, MeV/c");
    opt_int(scan_cmd, "--steps", "scan_steps", "number of scan points");
    opt_int(scan_cmd, "--order", "scan_order", "resonance order: 1 | 2");
    opt_int(scan_cmd, "--workers", "workers", "worker threads");
    opt_real(scan_cmd, "--threshold", "ejection_threshold", "growth factor counting as ejection");
    opt_real(scan_cmd, "--d", "d_angstrom", "interatomic spacing, angstrom");
    opt_real(scan_cmd, "--z", "Z", "atomic number");
    opt_real(scan_cmd, "--length", "crystal_length_angstrom", "crystal length, angstrom");

    CLI::App* floq_cmd = attach("floquet", "map parametric-stability exponents", cmd_floquet);
    opt_real(floq_cmd, "--q", "floquet_q", "restoring coefficient");
    opt_real(floq_cmd, "--depth", "floquet_h", "modulation depth");
    opt_real(floq_cmd, "--omega", "floquet_omega_min", "drive frequency (single point)");
    opt_real(floq_cmd, "--omega-min", "floquet_omega_min", "drive sweep start");
    opt_real(floq_cmd, "--omega-max", "floquet_omega_max", "drive sweep end");
    opt_int(floq_cmd, "--points", "floquet_points", "sweep resolution");

    CLI::App* dirac_cmd = attach("dirac-check", "verify the spinor-equation bridge",
                                 cmd_dirac_check);
    opt_int(dirac_cmd, "--samples", "dirac_samples", "gauge elements to test");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const zbw::error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}

}  // namespace zbw::io
