#include "zbw/sta.hpp"

#include <algorithm>
#include <cmath>

namespace zbw::sta {

Mv grade(const Mv& a, int k) {
    Mv r;
    for (int i = 0; i < kBlades; ++i)
        if (kGradeOf[i] == k) r.c[i] = a.c[i];
    return r;
}

Mv even_part(const Mv& a) {
    Mv r;
    for (int i = 0; i < kBlades; ++i)
        if ((kGradeOf[i] & 1) == 0) r.c[i] = a.c[i];
    return r;
}

Mv odd_part(const Mv& a) {
    Mv r;
    for (int i = 0; i < kBlades; ++i)
        if (kGradeOf[i] & 1) r.c[i] = a.c[i];
    return r;
}

Mv reverse(const Mv& a) {
    Mv r;
    for (int i = 0; i < kBlades; ++i) r.c[i] = kReverseSign[kGradeOf[i]] * a.c[i];
    return r;
}

double coeff_norm(const Mv& a) {
    double s = 0.0;
    for (double x : a.c) s += x * x;
    return std::sqrt(s);
}

double max_abs_coeff(const Mv& a) {
    double m = 0.0;
    for (double x : a.c) m = std::max(m, std::abs(x));
    return m;
}

bool is_grade(const Mv& a, int k, double tol) {
    const double scale = std::max(1.0, coeff_norm(a));
    for (int i = 0; i < kBlades; ++i)
        if (kGradeOf[i] != k && std::abs(a.c[i]) > tol * scale) return false;
    return true;
}

bool is_even(const Mv& a, double tol) {
    const double scale = std::max(1.0, coeff_norm(a));
    return max_abs_coeff(odd_part(a)) <= tol * scale;
}

double scalar_product(const Mv& a, const Mv& b) {
    // <ab>_0 picks up only blade pairs that contract to a scalar, i.e. i == j
    double s = 0.0;
    for (int i = 0; i < kBlades; ++i) {
        if (a.c[i] == 0.0 || b.c[i] == 0.0) continue;
        s += kProduct[i][i].sign * a.c[i] * b.c[i];
    }
    return s;
}

Mv inner(const Mv& a, const Mv& b) {
    Mv r;
    for (int i = 0; i < kBlades; ++i) {
        const double ai = a.c[i];
        if (ai == 0.0 || kGradeOf[i] == 0) continue;
        for (int j = 0; j < kBlades; ++j) {
            const double bj = b.c[j];
            if (bj == 0.0 || kGradeOf[j] == 0) continue;
            const BladeProduct p = kProduct[i][j];
            if (kGradeOf[p.index] == std::abs(kGradeOf[i] - kGradeOf[j]))
                r.c[p.index] += p.sign * ai * bj;
        }
    }
    return r;
}

Mv outer(const Mv& a, const Mv& b) {
    Mv r;
    for (int i = 0; i < kBlades; ++i) {
        const double ai = a.c[i];
        if (ai == 0.0) continue;
        for (int j = 0; j < kBlades; ++j) {
            const double bj = b.c[j];
            if (bj == 0.0) continue;
            const BladeProduct p = kProduct[i][j];
            if (kGradeOf[p.index] == kGradeOf[i] + kGradeOf[j])
                r.c[p.index] += p.sign * ai * bj;
        }
    }
    return r;
}

Mv commutator(const Mv& a, const Mv& b) {
    Mv r = a * b;
    r -= b * a;
    return r * 0.5;
}

Mv sandwich(const Mv& r, const Mv& m) { return r * m * reverse(r); }

Mv inverse_vector(const Mv& v, double tol) {
    const double v2 = scalar_product(v, v);
    if (std::abs(v2) <= tol * std::max(1.0, coeff_norm(v) * coeff_norm(v)))
        throw domain_error("inverse_vector: null vector has no inverse");
    return v / v2;
}

Mv dual(const Mv& a) { return a * pseudoscalar(); }

// ---- strong types ----

Vec4::Vec4(const Mv& m, double tol) : m_(grade(m, 1)) {
    if (!is_grade(m, 1, tol)) throw domain_error("Vec4: not a pure grade-1 element");
}

Vec4::Vec4(double t, double x, double y, double z) {
    m_.c[1] = t;
    m_.c[2] = x;
    m_.c[3] = y;
    m_.c[4] = z;
}

Bivec::Bivec(const Mv& m, double tol) : m_(grade(m, 2)) {
    if (!is_grade(m, 2, tol)) throw domain_error("Bivec: not a pure grade-2 element");
}

Spinor::Spinor(const Mv& m, double tol) : m_(even_part(m)) {
    if (!is_even(m, tol)) throw domain_error("Spinor: not an even element");
}

Rotor::Rotor(const Mv& m, double accept) : m_(even_part(m)) {
    const double scale = std::max(1.0, coeff_norm(m));
    if (max_abs_coeff(odd_part(m)) > 1e-12 * scale)
        throw invariant_error("Rotor: element has odd-grade content");
    const Mv n = m_ * reverse(m_);
    const double s = n.c[0];
    const double p = n.c[15];  // grade-4 part of R~R, zero for a true rotor
    if (std::abs(p) > accept * std::max(1.0, std::abs(s)))
        throw invariant_error("Rotor: pseudoscalar norm content exceeds tolerance");
    if (std::abs(s - 1.0) > accept)
        throw invariant_error("Rotor: norm drifted beyond acceptance window");
    m_ /= std::sqrt(s);
}

Rotor Rotor::reversed() const {
    Rotor r = *this;
    r.m_ = reverse(m_);
    return r;
}

// ---- structural operations ----

Mv exp_bivector(const Mv& b, double tol) {
    if (!is_grade(b, 2, 1e-12))
        throw domain_error("exp_bivector: argument is not a bivector");
    Mv bs = grade(b, 2);
    int halvings = 0;
    while (coeff_norm(bs) > 0.5) {
        bs *= 0.5;
        ++halvings;
        if (halvings > 200) throw domain_error("exp_bivector: argument too large");
    }
    Mv sum = Mv::scalar(1.0);
    Mv term = Mv::scalar(1.0);
    for (int n = 1; n < 20; ++n) {
        term = term * bs;
        term /= static_cast<double>(n);
        sum += term;
    }
    if (coeff_norm(term) > tol * std::max(1.0, coeff_norm(sum)))
        throw invariant_error("exp_bivector: series did not converge");
    for (int k = 0; k < halvings; ++k) sum = sum * sum;
    return sum;
}

CanonicalForm canonical_decompose(const Mv& psi, double tol) {
    if (!is_even(psi, 1e-12))
        throw domain_error("canonical_decompose: argument is not even");
    const Mv n = psi * reverse(psi);
    const double s = n.c[0];
    const double p = n.c[15];
    const double rho = std::hypot(s, p);
    const double scale = coeff_norm(psi);
    if (rho <= tol * std::max(1.0, scale * scale))
        throw domain_error("canonical_decompose: singular (null) even element");
    const double beta = std::atan2(p, s);
    // R = psi e^(-I beta / 2) / sqrt(rho)
    Mv phase;
    phase.c[0] = std::cos(-beta / 2.0);
    phase.c[15] = std::sin(-beta / 2.0);
    const Mv r = (psi * phase) / std::sqrt(rho);
    return {rho, beta, Rotor(r)};
}

FieldSplit split_bivector(const Mv& f, const Mv& v) {
    if (!is_grade(f, 2, 1e-12))
        throw domain_error("split_bivector: field is not a bivector");
    if (!is_grade(v, 1, 1e-12))
        throw domain_error("split_bivector: velocity is not a vector");
    const double v2 = scalar_product(v, v);
    if (std::abs(v2 - 1.0) > 1e-9)
        throw domain_error("split_bivector: velocity is not unit timelike");
    const Mv vfv = v * f * v;
    FieldSplit out;
    out.electric = (f - vfv) * 0.5;
    out.magnetic = -dual((f + vfv) * 0.5);
    return out;
}

Rotor boost_from_velocity(const Mv& v) {
    if (!is_grade(v, 1, 1e-12))
        throw domain_error("boost_from_velocity: argument is not a vector");
    const double v2 = scalar_product(v, v);
    if (std::abs(v2 - 1.0) > 1e-9)
        throw domain_error("boost_from_velocity: argument is not unit timelike");
    const double v0 = v.c[1];  // v . g0
    if (v0 <= 0.0)
        throw domain_error("boost_from_velocity: velocity is not future-pointing");
    const double denom = 2.0 * (1.0 + v0);
    if (denom < 1e-12)
        throw domain_error("boost_from_velocity: velocity antiparallel to g0");
    const Mv l = (Mv::scalar(1.0) + v * gamma(0)) / std::sqrt(denom);
    return Rotor(l);
}

namespace {

// Rotor rotating unit spacelike a onto unit spacelike b. `spare` is a unit
// spacelike direction orthogonal to a (and to everything the caller needs
// fixed); it determines the rotation plane when a and b are antiparallel.
Mv align_spacelike(const Mv& a, const Mv& b, const Mv& spare) {
    const double d = scalar_product(a, b);  // = -cos(angle) for unit spacelike
    if (1.0 - d > 1e-12)
        return (Mv::scalar(1.0) - b * a) / std::sqrt(2.0 * (1.0 - d));
    // antiparallel: a half-turn in the spare^a plane sends a to -a = b
    return outer(spare, a);
}

}  // namespace

Rotor frame_to_rotor(const Mv& e0, const Mv& e1, const Mv& e2, const Mv& e3) {
    const Mv e[4] = {grade(e0, 1), grade(e1, 1), grade(e2, 1), grade(e3, 1)};
    const Mv in[4] = {e0, e1, e2, e3};
    const double eta[4] = {1.0, -1.0, -1.0, -1.0};
    for (int m = 0; m < 4; ++m) {
        if (!is_grade(in[m], 1, 1e-10))
            throw domain_error("frame_to_rotor: frame element is not a vector");
        for (int n = m; n < 4; ++n) {
            const double want = (m == n) ? eta[m] : 0.0;
            if (std::abs(scalar_product(e[m], e[n]) - want) > 1e-9)
                throw domain_error("frame_to_rotor: frame is not orthonormal");
        }
    }
    // boost g0 onto e0, then two spatial alignments in the complement of e0
    Mv r = boost_from_velocity(e[0]).mv();
    const Mv f1 = sandwich(r, gamma(1));
    const Mv f2 = sandwich(r, gamma(2));
    r = align_spacelike(f1, e[1], f2) * r;
    const Mv g2 = sandwich(r, gamma(2));
    const Mv g3 = sandwich(r, gamma(3));
    r = align_spacelike(g2, e[2], g3) * r;
    const Rotor rot(r);
    if (coeff_norm(rot.apply(gamma(3)) - e[3]) > 1e-8)
        throw domain_error("frame_to_rotor: frame orientation is not reachable by a rotor");
    return rot;
}

}  // namespace zbw::sta
