#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "rydion/constants.hpp"
#include "rydion/species.hpp"

namespace rydion {

struct Vec3 {
    double x = 0, y = 0, z = 0;
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

class TrapInstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Continued-fraction solve for the Mathieu characteristic exponent beta of
// u'' + (a - 2q cos 2t) u = 0 in the lowest stability region, beta in (0, 1).
// The root of beta^2 = a + cf(+beta) + cf(-beta) is bracketed by bisection;
// the truncation depth is doubled until beta is converged to 1e-10.
inline double mathieu_beta(double a, double q) {
    if (q == 0.0) {
        if (a < 0.0) throw TrapInstabilityError("a < 0 with q = 0");
        return std::sqrt(a);
    }
    auto resid = [&](double beta, int depth) {
        double total = beta * beta - a;
        for (int sign : {+1, -1}) {
            double cf = 0.0;
            for (int m = depth; m >= 1; --m) {
                const double bm = beta + sign * 2.0 * m;
                cf = q * q / (bm * bm - a - cf);
            }
            total -= cf;
        }
        return total;
    };
    double beta_prev_depth = -1.0;
    for (int depth = 16; depth <= 4096; depth *= 2) {
        double lo = 1e-9, hi = 1.0 - 1e-9;
        if (!(resid(lo, depth) < 0.0) || !(resid(hi, depth) > 0.0))
            throw TrapInstabilityError(
                "no real Mathieu exponent in (0,1): (a,q) outside the lowest "
                "stability region");
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            (resid(mid, depth) < 0.0 ? lo : hi) = mid;
        }
        const double beta = 0.5 * (lo + hi);
        if (beta_prev_depth >= 0.0 && std::abs(beta - beta_prev_depth) < 1e-10)
            return beta;
        beta_prev_depth = beta;
    }
    throw TrapInstabilityError("Mathieu continued fraction did not converge");
}

struct TrapParams {
    double omega_i = 0.0;   // rad/s, static / secular target frequency
    double Omega_rf = 0.0;  // rad/s
    double q = 0.0;
    double a = 0.0;

    TrapParams() = default;
    TrapParams(double omega_i_, double Omega_rf_, double q_, double a_)
        : omega_i(omega_i_), Omega_rf(Omega_rf_), q(q_), a(a_) {
        if (Omega_rf <= 0.0) throw std::invalid_argument("Omega_rf must be > 0");
        if (std::abs(q) >= 0.9) throw std::invalid_argument("|q| must be < 0.9");
        mathieu_beta(a, q); // throws if outside the lowest stability region
    }

    static TrapParams axial(double omega_i, double Omega_rf) {
        // static confinement at omega_i: a = (2 omega_i / Omega_rf)^2, q = 0,
        // so secular_frequency returns omega_i itself
        const double a = 4.0 * omega_i * omega_i / (Omega_rf * Omega_rf);
        return TrapParams(omega_i, Omega_rf, 0.0, a);
    }
    static TrapParams rf_only(double Omega_rf, double q) {
        return TrapParams(0.0, Omega_rf, q, 0.0);
    }
};

// E_s = (m_i omega_i^2 / e)(x/2, y/2, -z)
inline Vec3 static_field(const Vec3& r, const TrapParams& trap, const Species& ion) {
    const double c = ion.mass * trap.omega_i * trap.omega_i / constants::e_charge;
    return {c * r.x / 2.0, c * r.y / 2.0, -c * r.z};
}

// E_rf = (m_i Omega_rf^2 q / 2e) cos(Omega_rf t) (x, -y, 0)
inline Vec3 rf_field(const Vec3& r, double t, const TrapParams& trap, const Species& ion) {
    const double c = ion.mass * trap.Omega_rf * trap.Omega_rf * trap.q /
                     (2.0 * constants::e_charge) * std::cos(trap.Omega_rf * t);
    return {c * r.x, -c * r.y, 0.0};
}

// Coulomb field of the (unit positive) ion at displacement r from it.
inline Vec3 ion_field(const Vec3& r) {
    const double rn = r.norm();
    const double c = constants::e_charge * constants::k_coulomb / (rn * rn * rn);
    return r * c;
}

struct CharLengths {
    double ell_z = 0.0;    // static field cancels the ion field on the z axis
    double ell_perp = 0.0; // minimum of the combined transverse field
};

inline CharLengths char_lengths(const TrapParams& trap, const Species& ion) {
    if (trap.omega_i <= 0.0) throw std::invalid_argument("omega_i must be > 0");
    const double e2kc = constants::e_charge * constants::e_charge * constants::k_coulomb;
    const double lz = std::cbrt(e2kc / (ion.mass * trap.omega_i * trap.omega_i));
    return {lz, std::pow(2.0, 2.0 / 3.0) * lz};
}

// Distance beyond which the rf field at maximal amplitude exceeds the ion field.
inline double rf_dominance_crossover(const TrapParams& trap, const Species& ion) {
    const double e2kc = constants::e_charge * constants::e_charge * constants::k_coulomb;
    return std::cbrt(2.0 * e2kc /
                     (ion.mass * trap.Omega_rf * trap.Omega_rf * trap.q));
}

// omega_perp = beta Omega_rf / 2
inline double secular_frequency(const TrapParams& trap) {
    return mathieu_beta(trap.a, trap.q) * trap.Omega_rf / 2.0;
}

// ---------------------------------------------------------------------------
// Norm of the total electric field on the transverse axis (ion near origin,
// atom near x = d, all y and z zero) and its partial derivatives at the
// equilibrium positions. S(t) = omega_i^2 + Omega_rf^2 q cos(Omega_rf t)
// collects the trap-field amplitude; the static omega_i terms are those of
// E_s and vanish when the static field is off.

struct FieldDerivs {
    double f = 0.0;
    // d[j][k] = d^{j+k} f / d x_i^j d x_a^k at (0,0), j+k <= 3
    std::array<std::array<double, 4>, 4> d{};
};

namespace detail {
inline FieldDerivs field_derivs_from_S(double S, double S2, double d,
                                       const Species& ion) {
    // S = <omega_i^2 + Omega^2 q cos>, S2 = <(omega_i^2 + Omega^2 q cos)^2>;
    // for an instantaneous evaluation S2 = S^2.
    const double e = constants::e_charge;
    const double kc = constants::k_coulomb;
    const double m = ion.mass;
    const double e2kc2 = e * e * kc * kc;
    const double d2 = d * d, d3 = d2 * d, d4 = d2 * d2, d5 = d4 * d,
                 d6 = d3 * d3, d7 = d6 * d;
    FieldDerivs out;
    out.f = m * m / (4.0 * e * e) * d2 * S2 + e2kc2 / d4 + m * kc * S / d;
    out.d[0][1] = m * m * d / (2.0 * e * e) * S2 - m * kc * S / d2 - 4.0 * e2kc2 / d5;
    out.d[0][2] = m * m / (2.0 * e * e) * S2 + 2.0 * m * kc * S / d3 + 20.0 * e2kc2 / d6;
    out.d[0][3] = -6.0 * m * kc * S / d4 - 120.0 * e2kc2 / d7;
    out.d[1][0] = 2.0 * m * kc * S / d2 + 4.0 * e2kc2 / d5;
    out.d[2][0] = 6.0 * m * kc * S / d3 + 20.0 * e2kc2 / d6;
    out.d[3][0] = 24.0 * m * kc * S / d4 + 120.0 * e2kc2 / d7;
    out.d[1][1] = -4.0 * m * kc * S / d3 - 20.0 * e2kc2 / d6;
    out.d[1][2] = 12.0 * m * kc * S / d4 + 120.0 * e2kc2 / d7;
    out.d[2][1] = -18.0 * m * kc * S / d4 - 120.0 * e2kc2 / d7;
    return out;
}
} // namespace detail

// |E(x_a, x_i, t)|^2, full transverse-axis expression.
inline double field_norm_sq(double x_a, double x_i, double t, double d,
                            const TrapParams& trap, const Species& ion) {
    const double u = x_a - x_i + d;
    if (u == 0.0)
        throw std::domain_error("field_norm_sq: atom-ion separation vanished");
    const double e = constants::e_charge;
    const double kc = constants::k_coulomb;
    const double m = ion.mass;
    const double w2 = trap.omega_i * trap.omega_i;
    const double S = w2 + trap.Omega_rf * trap.Omega_rf * trap.q *
                              std::cos(trap.Omega_rf * t);
    const double xa = x_a + d;
    return m * m / (4.0 * e * e) * xa * xa * S * S +
           e * e * kc * kc / (u * u * u * u) + m * kc * xa * S / (u * u);
}

inline FieldDerivs field_derivs_at_origin(double t, double d,
                                          const TrapParams& trap, const Species& ion) {
    const double w2 = trap.omega_i * trap.omega_i;
    const double S = w2 + trap.Omega_rf * trap.Omega_rf * trap.q *
                              std::cos(trap.Omega_rf * t);
    return detail::field_derivs_from_S(S, S * S, d, ion);
}

// rf-period averages <S> = omega_i^2, <S^2> = omega_i^4 + Omega^4 q^2 / 2.
inline FieldDerivs field_derivs_time_avg(double d, const TrapParams& trap,
                                         const Species& ion) {
    const double w2 = trap.omega_i * trap.omega_i;
    const double O2 = trap.Omega_rf * trap.Omega_rf;
    return detail::field_derivs_from_S(w2, w2 * w2 + O2 * O2 * trap.q * trap.q / 2.0,
                                       d, ion);
}

} // namespace rydion
