#pragma once

// Spacetime algebra Cl(1,3) over a fixed 16-blade canonical basis,
// metric signature (+,-,-,-).
//
// Canonical blade order (coefficient array layout):
//   [0]        1
//   [1..4]     g0, g1, g2, g3
//   [5..10]    g0g1, g0g2, g0g3, g1g2, g1g3, g2g3
//   [11..14]   g0g1g2, g0g1g3, g0g2g3, g1g2g3
//   [15]       g0g1g2g3
// This layout is part of the interchange contract: coefficient arrays are
// bit-exact portable between implementations that agree on it.

#include <array>
#include <bit>
#include <cstdint>
#include <cmath>

#include "errors.hpp"

namespace zbw::sta {

inline constexpr int kBlades = 16;

// canonical index -> generator bitmask (bit m set when g_m is a factor)
inline constexpr std::array<std::uint8_t, kBlades> kMaskOf = {
    0b0000,
    0b0001, 0b0010, 0b0100, 0b1000,
    0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100,
    0b0111, 0b1011, 0b1101, 0b1110,
    0b1111,
};

inline constexpr std::array<std::uint8_t, kBlades> kIndexOf = [] {
    std::array<std::uint8_t, kBlades> inv{};
    for (int i = 0; i < kBlades; ++i) inv[kMaskOf[i]] = static_cast<std::uint8_t>(i);
    return inv;
}();

inline constexpr std::array<int, kBlades> kGradeOf = [] {
    std::array<int, kBlades> g{};
    for (int i = 0; i < kBlades; ++i) g[i] = std::popcount(unsigned{kMaskOf[i]});
    return g;
}();

struct BladeProduct {
    std::int8_t sign;
    std::uint8_t index;
};

// Product of two basis blades given as generator bitmasks. Generators of b
// are absorbed one at a time in ascending index order; each pass through a
// higher-index generator flips the sign, and squaring a generator contracts
// with the metric (g0^2 = +1, gk^2 = -1).
constexpr BladeProduct blade_product(std::uint8_t a, std::uint8_t b) {
    int sign = 1;
    unsigned acc = a;
    for (int mu = 0; mu < 4; ++mu) {
        if (!(b & (1u << mu))) continue;
        if (std::popcount(acc >> (mu + 1)) & 1) sign = -sign;
        if (acc & (1u << mu)) {
            if (mu != 0) sign = -sign;
            acc &= ~(1u << mu);
        } else {
            acc |= (1u << mu);
        }
    }
    return {static_cast<std::int8_t>(sign), kIndexOf[acc]};
}

inline constexpr auto kProduct = [] {
    std::array<std::array<BladeProduct, kBlades>, kBlades> t{};
    for (int i = 0; i < kBlades; ++i)
        for (int j = 0; j < kBlades; ++j)
            t[i][j] = blade_product(kMaskOf[i], kMaskOf[j]);
    return t;
}();

// reversion sign by grade: +,+,-,-,+
inline constexpr std::array<double, 5> kReverseSign = {1.0, 1.0, -1.0, -1.0, 1.0};

struct Multivector {
    std::array<double, kBlades> c{};

    constexpr Multivector() = default;

    static constexpr Multivector scalar(double s) {
        Multivector m;
        m.c[0] = s;
        return m;
    }
    // single basis blade by canonical index
    static constexpr Multivector blade(int index, double coeff = 1.0) {
        Multivector m;
        m.c[index] = coeff;
        return m;
    }

    double& operator[](int i) { return c[i]; }
    const double& operator[](int i) const { return c[i]; }

    Multivector& operator+=(const Multivector& o) {
        for (int i = 0; i < kBlades; ++i) c[i] += o.c[i];
        return *this;
    }
    Multivector& operator-=(const Multivector& o) {
        for (int i = 0; i < kBlades; ++i) c[i] -= o.c[i];
        return *this;
    }
    Multivector& operator*=(double s) {
        for (double& x : c) x *= s;
        return *this;
    }
    Multivector& operator/=(double s) { return *this *= 1.0 / s; }

    friend Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
    friend Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
    friend Multivector operator-(Multivector a) {
        for (double& x : a.c) x = -x;
        return a;
    }
    friend Multivector operator*(Multivector a, double s) { return a *= s; }
    friend Multivector operator*(double s, Multivector a) { return a *= s; }
    friend Multivector operator/(Multivector a, double s) { return a /= s; }

    friend Multivector operator*(const Multivector& a, const Multivector& b) {
        Multivector r;
        for (int i = 0; i < kBlades; ++i) {
            const double ai = a.c[i];
            if (ai == 0.0) continue;
            for (int j = 0; j < kBlades; ++j) {
                const double bj = b.c[j];
                if (bj == 0.0) continue;
                const BladeProduct p = kProduct[i][j];
                r.c[p.index] += p.sign * ai * bj;
            }
        }
        return r;
    }
};

using Mv = Multivector;

// ---- basic elements ----

inline Mv gamma(int mu) { return Mv::blade(1 + mu); }
inline Mv pseudoscalar() { return Mv::blade(15); }
// relative basis vector s_k = g_k g_0
inline Mv sigma(int k) { return Mv::blade(4 + k, -1.0); }  // g_k g_0 = -(g_0 g_k)

// ---- grade bookkeeping ----

Mv grade(const Mv& a, int k);
Mv even_part(const Mv& a);
Mv odd_part(const Mv& a);
Mv reverse(const Mv& a);

inline double scalar_part(const Mv& a) { return a.c[0]; }

// Euclidean norm of the coefficient array (used for tolerances/scaling).
double coeff_norm(const Mv& a);
double max_abs_coeff(const Mv& a);

bool is_grade(const Mv& a, int k, double tol = 1e-12);
bool is_even(const Mv& a, double tol = 1e-12);

// ---- products ----

// scalar part of the geometric product, <ab>_0
double scalar_product(const Mv& a, const Mv& b);

// Hestenes inner product: sum over nonzero grades r,s of <a_r b_s>_{|r-s|}
Mv inner(const Mv& a, const Mv& b);

// outer product: sum of <a_r b_s>_{r+s}
Mv outer(const Mv& a, const Mv& b);

// commutator product (ab - ba)/2
Mv commutator(const Mv& a, const Mv& b);

// R m reverse(R)
Mv sandwich(const Mv& r, const Mv& m);

// inverse of a non-null vector: v / (v.v)
Mv inverse_vector(const Mv& v, double tol = 1e-12);

// dual: a I (I = g0g1g2g3)
Mv dual(const Mv& a);

// ---- strong types ----

class Vec4 {
public:
    explicit Vec4(const Mv& m, double tol = 1e-12);
    Vec4(double t, double x, double y, double z);
    const Mv& mv() const { return m_; }
    double operator[](int mu) const { return m_.c[1 + mu]; }
    double dot(const Vec4& o) const { return scalar_product(m_, o.m_); }

private:
    Mv m_;
};

class Bivec {
public:
    explicit Bivec(const Mv& m, double tol = 1e-12);
    const Mv& mv() const { return m_; }

private:
    Mv m_;
};

class Spinor {
public:
    explicit Spinor(const Mv& m, double tol = 1e-12);
    const Mv& mv() const { return m_; }

private:
    Mv m_;
};

// Unit-norm even element. Construction renormalizes |R reverse(R) - 1| up to
// `accept` and rejects anything further gone; the stored element then
// satisfies the unit-norm invariant to machine precision.
class Rotor {
public:
    explicit Rotor(const Mv& m, double accept = 1e-9);
    static Rotor identity() { return Rotor(Mv::scalar(1.0)); }
    const Mv& mv() const { return m_; }
    Rotor reversed() const;
    Mv apply(const Mv& m) const { return sandwich(m_, m); }
    friend Rotor operator*(const Rotor& a, const Rotor& b) { return Rotor(a.m_ * b.m_); }

private:
    Mv m_;
};

// ---- structural operations ----

// exp of a bivector by argument scaling (halve until the coefficient norm is
// below 0.5), 20-term Taylor series, then repeated squaring.
Mv exp_bivector(const Mv& b, double tol = 1e-13);

struct CanonicalForm {
    double rho;
    double beta;  // in (-pi, pi]
    Rotor rotor;
};

// Invertible even element as rho^(1/2) e^(I beta/2) R.
CanonicalForm canonical_decompose(const Mv& psi, double tol = 1e-12);

struct FieldSplit {
    Mv electric;  // bivector anticommuting with v
    Mv magnetic;  // bivector: F = electric + I * magnetic
};

// Split of a field bivector relative to a unit timelike velocity v.
FieldSplit split_bivector(const Mv& f, const Mv& v);

// Rotor L with L g0 reverse(L) = v, for unit timelike future-pointing v.
Rotor boost_from_velocity(const Mv& v);

// Rotor R with R g_mu reverse(R) = e_mu for a right-handed orthonormal frame.
Rotor frame_to_rotor(const Mv& e0, const Mv& e1, const Mv& e2, const Mv& e3);

}  // namespace zbw::sta
