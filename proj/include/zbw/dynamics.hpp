#pragma once

// Lightlike zitter particle model: state, observables, equations of motion,
// closed-form solutions, mean (center) dynamics, and rest-frame views.
// Everything here works in natural units m_e = hbar = c = 1, so the zitter
// frequency is 2 and the zitter radius is 1/2; charge is a state parameter
// (electron: -1). Conversion to laboratory units happens at module borders
// (see units.hpp and the channeling module).

#include <array>
#include <cmath>
#include <functional>
#include <optional>

#include "errors.hpp"
#include "sta.hpp"

namespace zbw::dyn {

using sta::Mv;

inline constexpr double kMe = 1.0;
inline constexpr double kOmegaE = 2.0;   // 2 m_e c^2 / hbar
inline constexpr double kLambdaE = 0.5;  // hbar / (2 m_e c)
inline constexpr double kElectronCharge = -1.0;

// ---------- small 3-vector helper for relative (rest-frame) quantities ----------

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator/(Vec3 a, double s) { return (1.0 / s) * a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

// ---------- state and observables ----------

enum class VelocityMode { lightlike, timelike };

struct ParticleState {
    double tau = 0.0;
    double phi = 0.0;  // internal rotation phase
    Mv z;              // position, grade 1
    Mv rotor;          // frame rotor, even and unit
    Mv p;              // momentum, grade 1
    double q = kElectronCharge;
    VelocityMode mode = VelocityMode::lightlike;
};

// validated constructor for externally supplied data
ParticleState make_state(const Mv& z, const Mv& rotor, const Mv& p,
                         double q = kElectronCharge, double phi = 0.0);

struct Frame {
    Mv e0, e1, e2, e3;
};

Frame frame_of(const Mv& rotor);

struct Observables {
    Frame frame;
    Mv u;       // velocity: e0 + e2 (lightlike, null) or e0 (timelike, unit)
    Mv S;       // spin bivector
    Mv s_vec;   // spin vector (1/2) e3
    double m;   // dynamical mass p.u
    double m1;  // p.e0
    double m2;  // p.e2  (so p = m1 e0 - m2 e2 on the constraint surface)
};

Observables observables(const ParticleState& s);

// ---------- external fields ----------

class Field {
public:
    virtual ~Field() = default;
    virtual Mv F(const Mv& z) const = 0;           // field bivector at z
    virtual Mv dF(const Mv& z, int mu) const = 0;  // partial derivative in x^mu
    // potential energy for conservative static fields (energy monitor)
    virtual std::optional<double> potential(const Mv&) const { return std::nullopt; }
    // (a . grad) F
    Mv directional_dF(const Mv& z, const Mv& a) const;
};

class ZeroField final : public Field {
public:
    Mv F(const Mv&) const override { return Mv(); }
    Mv dF(const Mv&, int) const override { return Mv(); }
};

class UniformField final : public Field {
public:
    explicit UniformField(const Mv& f);
    Mv F(const Mv&) const override { return f_; }
    Mv dF(const Mv&, int) const override { return Mv(); }

private:
    Mv f_;
};

// Static potential-energy field with radial profile in the g1-g2 plane,
// uniform along g3 (atomic-string geometry): q F = grad(V) ^ g0.
// The profile returns {V, V', V''} in natural units as a function of the
// transverse radius; the charge the potential energy refers to is fixed at
// construction so F itself is charge-independent.
class StaticRadialField final : public Field {
public:
    using Profile = std::function<std::array<double, 3>(double r)>;
    StaticRadialField(Profile profile, double q, double min_radius = 1e-9);
    Mv F(const Mv& z) const override;
    Mv dF(const Mv& z, int mu) const override;
    std::optional<double> potential(const Mv& z) const override;

private:
    Profile profile_;
    double q_;
    double rmin_;
};

// ---------- equations of motion ----------

struct Derivatives {
    Mv z_dot;
    Mv rotor_dot;
    Mv p_dot;
    double phi_dot = 0.0;
    // shared intermediates, useful for monitors and tests
    Mv Omega;
    Mv S_dot;
    double m = 0.0;
    double m_dot = 0.0;
    double Phi = 0.0;
};

Derivatives zitter_rhs(const ParticleState& s, const Field& field);

// interaction energy (q/m_e) <S F>
double spin_potential(const Mv& S, const Mv& F, double q = kElectronCharge);

// spatial gradient of the spin potential at fixed S
Mv grad_spin_potential(const Mv& z, const Mv& S, const Field& field, double q);

// analytic mass rate along the flow (no numeric differencing)
double mass_rate(const ParticleState& s, const Field& field);

// full rotational velocity bivector
Mv omega_bivector(const ParticleState& s, const Field& field);

// first curvature of the worldline, -(Omega.u).e1; identically 2 on shell
double first_curvature(const ParticleState& s, const Field& field);

struct Monitors {
    double kappa1_drift = 0.0;         // max |kappa1 - 2|
    double mass_integral_drift = 0.0;  // max |(m - Phi) - (m - Phi)(0)|
    double rotor_norm_drift = 0.0;     // max pre-renormalization |<R R~>_0 - 1|
    double gauge_drift = 0.0;          // max of |p.e1|, |p.e3|
    double energy_drift = 0.0;         // max |p0 + V - const| for static fields
};

struct Sample {
    const ParticleState& state;
    const Derivatives& derivs;
    const Monitors& monitors;
    long step;
};

using SampleSink = std::function<void(const Sample&)>;

// RK4 with per-step rotor renormalization. dtau <= 0 selects the default
// step, one two-hundredth of the initial internal period 2 pi / (2 m).
ParticleState integrate(ParticleState s, const Field& field, double dtau, long steps,
                        Monitors* monitors = nullptr, const SampleSink* sink = nullptr,
                        long sample_every = 1);

// ---------- closed-form solutions ----------

struct FreeSolution {
    ParticleState state;
    Mv center;  // guiding-center position at tau
    Mv radius;  // zitter displacement vector at tau
    Mv Omega;   // constant rotational velocity bivector
};

// Free-particle solution from momentum and initial spin bivector.
// lightlike: p^2 = m_e^2 and S0 of the null zitter form; timelike: S0 simple
// spacelike with |S0| = 1/2 and p.S0 = 0 (straight line, precessing frame).
FreeSolution free_solution(const Mv& p, const Mv& S0, const Mv& z0, VelocityMode mode,
                           double tau, double q = kElectronCharge);

// phase solution of dphi/dtau = (omega_e - b_term) + e_amp * sin(phi),
// phi(0) = 0, by closed-form time-of-phase inversion
double kepler_phase(double omega_e, double b_term, double e_amp, double tau);

struct ConstantFieldSolution {
    ParticleState state;
    double a = 0.0;      // mean phase rate
    double k = 0.0;      // phase-rate modulation amplitude
    double delta = 0.0;  // modulation phase offset
};

// closed-form evolution in a uniform field: field-commuting boost factor
// times an internal rotation whose phase solves a Kepler-type equation
ConstantFieldSolution constant_field_solution(const ParticleState& s0, const Mv& f, double tau);

// ---------- averaged (center) description ----------

enum class CenterStrategy { displacement, momentum_frame };

Mv zitter_center(const ParticleState& s, CenterStrategy strategy = CenterStrategy::displacement);

struct MeanObservables {
    Mv v;          // center velocity e0
    Mv S_bar;      // mean spin bivector (1/2) e2 e1
    Mv p_bar;      // m_e v
    double Phi_bar = 0.0;
    double m_bar = 0.0;   // m_e + Phi_bar
    double m1_bar = 0.0;  // m_e
    double m2_bar = 0.0;  // Phi_bar
};

MeanObservables zitter_average(const ParticleState& s, const Field* field = nullptr);

struct CenterState {
    double tau = 0.0;
    Mv x;      // center position
    Mv v;      // unit timelike center velocity
    Mv rotor;  // mean frame rotor
    double q = kElectronCharge;
};

struct CenterDerivatives {
    Mv x_dot;
    Mv v_dot;
    Mv rotor_dot;
    Mv Omega_bar;
    double Phi_bar = 0.0;
    double Phi_bar_dot = 0.0;
};

CenterDerivatives minimal_model_rhs(const CenterState& s, const Field& field);

// RK4 for the center model; v and rotor are renormalized per step and the
// worst pre-renormalization |v^2 - 1| is reported through v_drift
CenterState integrate_minimal(CenterState s, const Field& field, double dtau, long steps,
                              double* v_drift = nullptr);

// ---------- rest-frame (relative-vector) views ----------

struct RestFrameView {
    Vec3 r;   // zitter radius vector
    Vec3 s;   // spin vector
    Vec3 u;   // internal circulation direction (zero when r vanishes)
    Vec3 d;   // electric dipole -q r
    Vec3 mu;  // magnetic moment (q/m_e) s
};

RestFrameView rest_frame_split(const Mv& S, const Mv& v, double q = kElectronCharge);

struct RelativeField {
    Vec3 E;
    Vec3 B;
};

// lab-frame components of a field bivector relative to g0
RelativeField field_components(const Mv& f);

// closed-form rest-frame components of f as seen by velocity v
RelativeField deboost_field(const Mv& f, const Mv& v);

// rotational velocity bivector of the instantaneous rest frame, 2 L-dot L~
Mv thomas_omega(const Mv& v, const Mv& vdot);

// combined field-minus-transport input of the rest-frame spin/dipole rates:
// a + i b = L~ (f - (m_e/q) thomas_omega) L, split into components
RelativeField rest_frame_ab(const Mv& f, const Mv& v, const Mv& vdot, double q = kElectronCharge);

struct RestFrameRates {
    Vec3 r_dot;
    Vec3 s_dot;
};

// rest-frame evolution: m_e r_dot = m u + mu x a + d x b ; s_dot = a x d + mu x b
RestFrameRates rest_frame_rhs(const RestFrameView& view, double m, const Vec3& a, const Vec3& b);

}  // namespace zbw::dyn
