#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rydion/constants.hpp"
#include "rydion/paul_trap.hpp"
#include "rydion/rydberg.hpp"
#include "rydion/species.hpp"

namespace rydion {

// ---------------------------------------------------------------------------
// Weak off-resonant coupling of a ground-state atom to a Rydberg level
// imprints a scaled-down copy of the Rydberg atom-ion interaction onto the
// ground state.  This header holds the three-level model, the resulting
// adiabatic potential V(R) = -A R_w^4 / (R^4 + R_w^4), its trap-modified
// form (the ion-trap fields enter through the Stark denominator), the
// third-order Taylor coefficients around the equilibrium positions, and the
// force-balance condition that fixes the ion drive strength.

class LevelCrossingError : public std::runtime_error {
public:
    LevelCrossingError(const std::string& msg, double R_) // NOLINT
        : std::runtime_error(msg), R(R_) {}
    double R; // m, separation at which the ground character was lost
};

struct DressingParams {
    double Omega = 0.0;   // rad/s, effective Rydberg Rabi frequency
    double Delta0 = 0.0;  // rad/s, Rydberg detuning (blue positive)
    double Omega_d = 0.0; // rad/s, dipole-trap Rabi frequency
    double Delta_d = 0.0; // rad/s, dipole-trap detuning (red negative)
    RydbergState target_state{};
    double guard_ratio = 10.0; // minimum |Delta0| / |Omega|

    DressingParams() = default;
    DressingParams(double Omega_, double Delta0_, double Omega_d_,
                   double Delta_d_, RydbergState target, double guard = 10.0)
        : Omega(Omega_), Delta0(Delta0_), Omega_d(Omega_d_), Delta_d(Delta_d_),
          target_state(target), guard_ratio(guard) {
        if (Delta0 <= 0.0)
            throw std::invalid_argument(
                "DressingParams: Delta0 must be > 0 (blue detuning)");
        if (std::abs(Delta0) < guard_ratio * std::abs(Omega))
            throw std::invalid_argument(
                "DressingParams: |Delta0| / |Omega| below the weak-dressing "
                "guard ratio");
    }
};

struct AdiabaticPotential {
    double A = 0.0;   // J, depth: A = hbar Omega^2 / Delta0
    double R_w = 0.0; // m, width: R_w = (C4 / (hbar Delta0))^{1/4}
    double C4 = 0.0;  // J m^4, Rydberg-state charge-induced-dipole coefficient

    AdiabaticPotential() = default;
    AdiabaticPotential(double A_, double R_w_, double C4_)
        : A(A_), R_w(R_w_), C4(C4_) {
        if (A <= 0.0) throw std::invalid_argument("AdiabaticPotential: A must be > 0");
        if (R_w <= 0.0) throw std::invalid_argument("AdiabaticPotential: R_w must be > 0");
    }
};

inline AdiabaticPotential adiabatic_potential(const DressingParams& p, double c4) {
    if (c4 <= 0.0)
        throw std::invalid_argument("adiabatic_potential: C4 must be > 0");
    const double A = constants::hbar * p.Omega * p.Omega / p.Delta0;
    const double rw = std::pow(c4 / (constants::hbar * p.Delta0), 0.25);
    return {A, rw, c4};
}

// V(R) = -A R_w^4 / (R^4 + R_w^4): attractive everywhere, -A at contact,
// vanishing at infinity, -A/2 exactly at R = R_w.
inline double v_dressed(double R, const AdiabaticPotential& pot) {
    if (R < 0.0) throw std::invalid_argument("v_dressed: R must be >= 0");
    const double rw4 = std::pow(pot.R_w, 4);
    return -pot.A * rw4 / (std::pow(R, 4) + rw4);
}

struct ForceProfile {
    double F = 0.0;  // N, dV/dR at the separation d
    double F2 = 0.0; // N/m, d^2V/dR^2 at d (vanishes at the force maximum)
};

// Analytic derivatives of V.  The force on the ion peaks at
// d* = (3/5)^{1/4} R_w ~= 0.880 R_w with F(d*) ~= 1.065 A / R_w.
inline ForceProfile force_profile(double d, const AdiabaticPotential& pot) {
    if (d <= 0.0) throw std::invalid_argument("force_profile: d must be > 0");
    const double rw4 = std::pow(pot.R_w, 4);
    const double d2 = d * d, d3 = d2 * d, d4 = d2 * d2;
    const double s = d4 + rw4;
    ForceProfile out;
    out.F = 4.0 * pot.A * rw4 * d3 / (s * s);
    out.F2 = 4.0 * pot.A * rw4 * d2 * (3.0 * rw4 - 5.0 * d4) / (s * s * s);
    return out;
}

// Closed-form location of the force maximum.
inline double force_optimum(const AdiabaticPotential& pot) {
    return std::pow(3.0 / 5.0, 0.25) * pot.R_w;
}

// Exact ground branch of the 3x3 dressing Hamiltonian in the |g>, |e>, |R>
// basis, with the pure dipole-trap light shift (the exact |g>-|e> two-level
// eigenvalue) subtracted so only the R-dependent piece plus the flat
// Rydberg light shift remains.  r_star guards the region where the
// neglected ground-state atom-ion interaction would matter.
inline double three_level_ground(double R, const DressingParams& p, double c4,
                                 double r_star = 100e-9) {
    if (!(R > r_star))
        throw std::domain_error(
            "three_level_ground: R must exceed the ground-state interaction "
            "length scale r_star");
    using constants::hbar;
    Eigen::Matrix3d h;
    const double stark = -p.Delta0 * hbar - c4 / std::pow(R, 4);
    h << 0.0, hbar * p.Omega_d, hbar * p.Omega, //
        hbar * p.Omega_d, -hbar * p.Delta_d, 0.0, //
        hbar * p.Omega, 0.0, stark;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
    int best = 0;
    double wbest = -1.0;
    for (int k = 0; k < 3; ++k) {
        const double w = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
        if (w > wbest) wbest = w, best = k;
    }
    if (wbest < 0.5)
        throw LevelCrossingError(
            "three_level_ground: ground-state character dropped below 0.5 "
            "(avoided crossing reached)",
            R);
    // exact two-level dipole-trap eigenvalue on the |g>-dominant branch
    const double vd = p.Delta_d == 0.0 && p.Omega_d == 0.0
                          ? 0.0
                          : 0.5 * (-hbar * p.Delta_d -
                                   std::sqrt(hbar * hbar * p.Delta_d * p.Delta_d +
                                             4.0 * hbar * hbar * p.Omega_d * p.Omega_d) *
                                       (p.Delta_d < 0.0 ? 1.0 : -1.0));
    return es.eigenvalues()(best) - vd;
}

// ---------------------------------------------------------------------------
// Trap-modified potential on the transverse axis (ion near the rf null,
// atom trapped at x = d):  V~ = xi1 / (xi2 + xi3 |E|^2) with
// xi1 = hbar Omega^2, xi2 = Delta0, xi3 = alpha / (2 hbar), and the
// polarizability recovered from C4 = alpha (e k_C)^2 / 2.

namespace detail {
struct XiCoeffs {
    double xi1 = 0.0; // J rad/s
    double xi2 = 0.0; // rad/s
    double xi3 = 0.0; // rad/s per (V/m)^2
};
inline XiCoeffs xi_coeffs(const DressingParams& p, const AdiabaticPotential& pot) {
    using constants::e_charge;
    using constants::hbar;
    using constants::k_coulomb;
    const double alpha =
        2.0 * pot.C4 / (e_charge * k_coulomb * e_charge * k_coulomb);
    return {hbar * p.Omega * p.Omega, p.Delta0, alpha / (2.0 * hbar)};
}
} // namespace detail

// Instantaneous trap-modified potential at displacements (x_i, x_a) from the
// equilibria.  Tends to the flat light shift hbar Omega^2 / Delta0 (not zero)
// far from the ion; subtract that constant to compare with v_dressed.
inline double v_tilde(double x_i, double x_a, double t, double d,
                      const DressingParams& p, const AdiabaticPotential& pot,
                      const TrapParams& trap, const Species& ion) {
    const auto xi = detail::xi_coeffs(p, pot);
    const double f = field_norm_sq(x_a, x_i, t, d, trap, ion);
    return xi.xi1 / (xi.xi2 + xi.xi3 * f);
}

// rf-period average in the factorized approximation <V~> ~ xi1/(xi2+xi3 <f>).
inline double v_tilde_time_avg(double d, const DressingParams& p,
                               const AdiabaticPotential& pot,
                               const TrapParams& trap, const Species& ion) {
    const auto xi = detail::xi_coeffs(p, pot);
    const double f = field_derivs_time_avg(d, trap, ion).f;
    return xi.xi1 / (xi.xi2 + xi.xi3 * f);
}

struct TaylorCoeffs {
    // d[j][k] = raw partial derivative  d^{j+k} V~ / d x_i^j d x_a^k  at
    // (0,0), in J / m^{j+k}; Taylor terms carry an extra 1/(j! k!).
    std::array<std::array<double, 4>, 4> d{};
    double t = 0.0;   // s, evaluation time (ignored for averaged tables)
    double sep = 0.0; // m, trap separation d
    double v00 = 0.0; // J, potential value at the equilibria
};

namespace detail {
// Chain rule for V~ = xi1 / (xi2 + xi3 f) through third order, from the
// partial-derivative table of the squared field norm f.
inline TaylorCoeffs taylor_from_field(const FieldDerivs& fd, const XiCoeffs& xi) {
    const double D = xi.xi2 + xi.xi3 * fd.f;
    const double c1 = -xi.xi1 * xi.xi3 / (D * D);
    const double c2 = 2.0 * xi.xi1 * xi.xi3 * xi.xi3 / (D * D * D);
    const double c3 = -6.0 * xi.xi1 * xi.xi3 * xi.xi3 * xi.xi3 / (D * D * D * D);
    const auto& f = fd.d;
    TaylorCoeffs out;
    out.v00 = xi.xi1 / D;
    out.d[1][0] = c1 * f[1][0];
    out.d[0][1] = c1 * f[0][1];
    out.d[2][0] = c1 * f[2][0] + c2 * f[1][0] * f[1][0];
    out.d[0][2] = c1 * f[0][2] + c2 * f[0][1] * f[0][1];
    out.d[1][1] = c1 * f[1][1] + c2 * f[1][0] * f[0][1];
    out.d[3][0] = c1 * f[3][0] + 3.0 * c2 * f[2][0] * f[1][0] +
                  c3 * f[1][0] * f[1][0] * f[1][0];
    out.d[0][3] = c1 * f[0][3] + 3.0 * c2 * f[0][2] * f[0][1] +
                  c3 * f[0][1] * f[0][1] * f[0][1];
    out.d[2][1] = c1 * f[2][1] +
                  c2 * (f[2][0] * f[0][1] + 2.0 * f[1][1] * f[1][0]) +
                  c3 * f[1][0] * f[1][0] * f[0][1];
    out.d[1][2] = c1 * f[1][2] +
                  c2 * (f[0][2] * f[1][0] + 2.0 * f[1][1] * f[0][1]) +
                  c3 * f[0][1] * f[0][1] * f[1][0];
    return out;
}
} // namespace detail

// Third-order expansion of v_tilde around the equilibria at time t.
inline TaylorCoeffs taylor3(double d, double t, const DressingParams& p,
                            const AdiabaticPotential& pot, const TrapParams& trap,
                            const Species& ion) {
    if (d <= 0.0) throw std::invalid_argument("taylor3: d must be > 0");
    auto out = detail::taylor_from_field(field_derivs_at_origin(t, d, trap, ion),
                                         detail::xi_coeffs(p, pot));
    out.t = t;
    out.sep = d;
    return out;
}

// Which trap-field contributions enter the Stark denominator when matching
// the ion drive: none (pure Coulomb field), or the rf-period average.
enum class TrapFields { off, time_averaged };

inline TaylorCoeffs taylor3_time_avg(double d, const DressingParams& p,
                                     const AdiabaticPotential& pot,
                                     const TrapParams& trap, const Species& ion,
                                     TrapFields fields = TrapFields::time_averaged) {
    if (d <= 0.0) throw std::invalid_argument("taylor3_time_avg: d must be > 0");
    const FieldDerivs fd = fields == TrapFields::off
                               ? detail::field_derivs_from_S(0.0, 0.0, d, ion)
                               : field_derivs_time_avg(d, trap, ion);
    auto out = detail::taylor_from_field(fd, detail::xi_coeffs(p, pot));
    out.sep = d;
    return out;
}

// Harmonic-oscillator length of the ion in the reference basis: the static
// frequency when one is configured, otherwise the small-q secular estimate
// Omega_rf q / 2^{3/2} used by the rf-driven gate model.
inline double ion_basis_frequency(const TrapParams& trap) {
    if (trap.omega_i > 0.0) return trap.omega_i;
    return trap.Omega_rf * trap.q / (2.0 * std::sqrt(2.0));
}

inline double oscillator_length(double mass, double omega) {
    if (omega <= 0.0) throw std::invalid_argument("oscillator_length: omega must be > 0");
    return std::sqrt(constants::hbar / (2.0 * mass * omega));
}

// Required spin-motion drive strength (eta Omega_{S-M}, rad/s) such that the
// drive cancels the coefficient of (a^dag + a)|up><up| coming from the linear
// ion force: eta Omega_{S-M} = |<dV~/dx_i>| l_i / (2 hbar).  This matches the
// modulated-force bookkeeping of the gate Hamiltonian, where the dressed
// force and the drive both carry a (1 + cos(omega_v t))/2 envelope.
inline double match_drive(double d, const DressingParams& p,
                          const AdiabaticPotential& pot, const TrapParams& trap,
                          const Species& ion,
                          TrapFields fields = TrapFields::time_averaged) {
    const auto tc = taylor3_time_avg(d, p, pot, trap, ion, fields);
    const double ell = oscillator_length(ion.mass, ion_basis_frequency(trap));
    return std::abs(tc.d[1][0]) * ell / (2.0 * constants::hbar);
}

// Inverse Rydberg admixture (Delta0/Omega)^2: the factor by which the
// dressed-state lifetime exceeds the bare Rydberg lifetime.
inline double lifetime_enhancement(const DressingParams& p) {
    if (!(p.Delta0 > std::abs(p.Omega)))
        throw std::invalid_argument(
            "lifetime_enhancement: requires Delta0 > |Omega|");
    return (p.Delta0 / p.Omega) * (p.Delta0 / p.Omega);
}

} // namespace rydion
