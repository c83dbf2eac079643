#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <complex>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rydion/constants.hpp"
#include "rydion/dressed.hpp"
#include "rydion/paul_trap.hpp"
#include "rydion/species.hpp"
#include "rydion/units.hpp"

// Grid-based split-step solver for the transverse gate direction with the
// full rf micromotion retained: one 2D wavefunction psi(x_i, x_a) per spin
// sector, evolved with symmetric (Strang) splitting and spectral kinetic
// steps.  Internally everything lives in the dimensionless frame of
// ScaledUnits (lengths in ell = sqrt(hbar/(mu_ai omega_bar)), energies in
// hbar Omega_rf, time tau = Omega_rf t); the public interface speaks SI.

namespace rydion {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class BoundaryLeakError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NormConservationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Spin sector labels: first letter is the atom spin, second the ion spin,
// index = 2 * (atom up) + (ion up), matching the Fock-space gate module.
enum class Sector { dd = 0, du = 1, ud = 2, uu = 3 };

inline bool sector_ion_up(Sector s) { return static_cast<int>(s) & 1; }
inline bool sector_atom_up(Sector s) { return static_cast<int>(s) & 2; }
inline const char* sector_label(Sector s) {
    static const char* names[4] = {"dd", "du", "ud", "uu"};
    return names[static_cast<int>(s)];
}

// Ion confinement model: the rf quadrupole is the physical choice; the
// static-harmonic and free variants exist for analytic-oracle tests.
enum class IonConfinement { rf, static_harmonic, none };

struct Grid2D {
    double extent_i = 0.0; // m, half-width of the ion axis
    double extent_a = 0.0; // m, half-width of the atom axis
    int n_i = 0;           // points per axis, powers of two
    int n_a = 0;

    Grid2D() = default;
    Grid2D(double extent_i_, double extent_a_, int n_i_, int n_a_)
        : extent_i(extent_i_), extent_a(extent_a_), n_i(n_i_), n_a(n_a_) {
        if (extent_i <= 0.0 || extent_a <= 0.0)
            throw GridError("Grid2D: extents must be > 0");
        auto pow2 = [](int n) { return n >= 16 && (n & (n - 1)) == 0; };
        if (!pow2(n_i) || !pow2(n_a))
            throw GridError("Grid2D: point counts must be powers of two >= 16");
    }

    double spacing_i() const { return 2.0 * extent_i / n_i; }
    double spacing_a() const { return 2.0 * extent_a / n_a; }
};

struct MMParams {
    TrapParams trap;            // rf drive; a = 0 for the physical run
    double omega_a = 0.0;       // rad/s, atom trap frequency
    double d = 0.0;             // m, trap separation
    DressingParams dressing;    // Rydberg dressing of the atom's up state
    double c4 = 0.0;            // J m^4, Rydberg C4 coefficient
    double eta_Omega_SM = 0.0;  // rad/s, spin-motion drive strength
    double delta_perp = 0.0;    // rad/s, drive detuning from the secular line
    double ramp_time = 50e-6;   // s, dressing switch-on time
    double t_end = 0.0;         // s
    Species atom, ion;
    bool linear_ramp = false;   // sin^2 ramp by default
    bool ramp_drive = true;     // ramp the spin-motion drive with the dressing
    int steps_per_rf_period = 128;
    IonConfinement ion_conf = IonConfinement::rf;
    bool atom_trap_on = true;

    // modulation frequency sits delta_perp above the exact secular line
    double omega_v() const { return secular_frequency(trap) + delta_perp; }
    double omega_i_basis() const { return ion_basis_frequency(trap); }

    void validate() const {
        if (trap.Omega_rf <= 0.0)
            throw std::invalid_argument("MMParams: Omega_rf must be > 0");
        if (ion_conf == IonConfinement::rf && trap.a != 0.0)
            throw std::invalid_argument("MMParams: rf run requires a = 0");
        if (trap.q <= 0.0) throw std::invalid_argument("MMParams: q must be > 0");
        if (omega_a <= 0.0)
            throw std::invalid_argument("MMParams: omega_a must be > 0");
        if (d <= 0.0) throw std::invalid_argument("MMParams: d must be > 0");
        if (c4 <= 0.0) throw std::invalid_argument("MMParams: c4 must be > 0");
        if (delta_perp <= 0.0)
            throw std::invalid_argument("MMParams: delta_perp must be > 0");
        if (t_end <= 0.0) throw std::invalid_argument("MMParams: t_end must be > 0");
        if (!(ramp_time >= 0.0) || ramp_time >= 0.1 * t_end)
            throw std::invalid_argument(
                "MMParams: ramp_time must lie in [0, 0.1 t_end)");
        if (steps_per_rf_period < 100)
            throw std::invalid_argument(
                "MMParams: need >= 100 steps per rf period");
        if (atom.mass <= 0.0 || ion.mass <= 0.0)
            throw std::invalid_argument("MMParams: species masses must be > 0");
    }
};

// 7Li / 171Yb+ working point of the micromotion run: 30S dressing at
// 2 pi x 13.1 MHz drive and 2 pi x 0.8 GHz detuning, 200 kHz atom trap,
// 2.5 MHz rf at q = 2^{3/2}/10 ~ 0.28 (so the reference ion frequency is
// exactly 2 pi x 250 kHz), 1 um separation, 50 us switch-on, and one full
// closed motional loop t_end = 2 pi / delta_perp ~ 940 us.
inline MMParams mm_defaults(double c4) {
    MMParams p;
    p.atom = make_li7();
    p.ion = make_yb171_ion();
    p.trap = TrapParams::rf_only(constants::two_pi * 2.5e6,
                                 std::pow(2.0, 1.5) / 10.0);
    p.omega_a = constants::two_pi * 200e3;
    p.d = 1e-6;
    p.dressing = DressingParams(constants::two_pi * 13.1e6,
                                constants::two_pi * 0.8e9, 0.0, 0.0,
                                make_state(p.atom, 30, 0, 0.5, 0.5));
    p.c4 = c4;
    p.eta_Omega_SM = constants::two_pi * 1.06e3;
    p.delta_perp = constants::two_pi * 1.064e3;
    p.ramp_time = 50e-6;
    p.t_end = constants::two_pi / p.delta_perp;
    p.validate();
    return p;
}

struct SectorWavefunction {
    Sector sector = Sector::dd;
    // psi(i, a): ion index runs over rows (fastest in memory), atom index
    // over columns; dimensionless amplitudes on the dimensionless grid
    Eigen::ArrayXXcd psi;
    double time = 0.0; // s
};

// Checks the grid against the initial Gaussians: at least 8 ground-state
// widths of room per axis and a momentum-space Nyquist limit covering at
// least 6 sigma_p.
inline void validate_grid(const Grid2D& grid, const MMParams& p) {
    const double ell_i = oscillator_length(p.ion.mass, p.omega_i_basis());
    const double ell_a = oscillator_length(p.atom.mass, p.omega_a);
    if (grid.extent_i < 8.0 * ell_i || grid.extent_a < 8.0 * ell_a)
        throw GridError("grid too small: extents must cover 8 ground-state widths");
    // sigma_p = hbar / (2 ell)  =>  k_max = pi / h >= 3 / ell
    if (constants::pi / grid.spacing_i() < 3.0 / ell_i ||
        constants::pi / grid.spacing_a() < 3.0 / ell_a)
        throw GridError("grid too coarse: Nyquist must cover 6 sigma_p");
}

// 256 x 256 points spanning 12 ground-state widths per axis.
inline Grid2D default_grid(const MMParams& p, int n = 256) {
    return Grid2D(12.0 * oscillator_length(p.ion.mass, p.omega_i_basis()),
                  12.0 * oscillator_length(p.atom.mass, p.omega_a), n, n);
}

// Product of the harmonic ground-state Gaussians of the reference ion
// oscillator and the atom trap, optionally displaced, identical in all four
// sectors.  Offsets are SI displacements from the equilibria.
inline std::array<SectorWavefunction, 4> init_gaussian(const Grid2D& grid,
                                                       const MMParams& p,
                                                       double x0_i = 0.0,
                                                       double x0_a = 0.0) {
    p.validate();
    validate_grid(grid, p);
    const ScaledUnits su(p.atom, p.ion, p.omega_a, p.omega_i_basis(),
                         p.trap.Omega_rf, p.dressing.Omega, p.dressing.Delta0,
                         1.0, 1.0);
    const double li = oscillator_length(p.ion.mass, p.omega_i_basis());
    const double la = oscillator_length(p.atom.mass, p.omega_a);
    Eigen::ArrayXXcd psi(grid.n_i, grid.n_a);
    for (int a = 0; a < grid.n_a; ++a) {
        const double xa = -grid.extent_a + a * grid.spacing_a() - x0_a;
        const double ga = std::exp(-xa * xa / (4.0 * la * la));
        for (int i = 0; i < grid.n_i; ++i) {
            const double xi = -grid.extent_i + i * grid.spacing_i() - x0_i;
            psi(i, a) = ga * std::exp(-xi * xi / (4.0 * li * li));
        }
    }
    const double hi = su.from_si_length(grid.spacing_i());
    const double ha = su.from_si_length(grid.spacing_a());
    psi /= std::sqrt(psi.abs2().sum() * hi * ha);
    std::array<SectorWavefunction, 4> out;
    for (int s = 0; s < 4; ++s) out[s] = {static_cast<Sector>(s), psi, 0.0};
    return out;
}

class MMEvolver {
public:
    MMEvolver(const Grid2D& grid, const MMParams& p) : grid_(grid), p_(p) {
        p_.validate();
        validate_grid(grid_, p_);
        pot_ = adiabatic_potential(p_.dressing, p_.c4);
        // dressed-state polarizabilities only feed the xi diagnostics of
        // ScaledUnits; the solver uses its unit conversions and masses
        const double e2kc = constants::e_charge * constants::k_coulomb;
        const double alpha_r = 2.0 * p_.c4 / (e2kc * e2kc);
        const double frac = p_.dressing.Omega / (2.0 * p_.dressing.Delta0);
        su_ = ScaledUnits(p_.atom, p_.ion, p_.omega_a, p_.omega_i_basis(),
                          p_.trap.Omega_rf, p_.dressing.Omega,
                          p_.dressing.Delta0, alpha_r * frac * frac, alpha_r);

        const double ell = su_.length_unit;
        ell_i_ = oscillator_length(p_.ion.mass, p_.omega_i_basis());
        ell_a_ = oscillator_length(p_.atom.mass, p_.omega_a);
        h_i_ = su_.from_si_length(grid_.spacing_i());
        h_a_ = su_.from_si_length(grid_.spacing_a());
        x_i_.resize(grid_.n_i);
        x_a_.resize(grid_.n_a);
        for (int i = 0; i < grid_.n_i; ++i)
            x_i_(i) = su_.from_si_length(-grid_.extent_i + i * grid_.spacing_i());
        for (int a = 0; a < grid_.n_a; ++a)
            x_a_(a) = su_.from_si_length(-grid_.extent_a + a * grid_.spacing_a());
        k_i_.resize(grid_.n_i);
        k_a_.resize(grid_.n_a);
        for (int i = 0; i < grid_.n_i; ++i) {
            const int j = i < grid_.n_i / 2 ? i : i - grid_.n_i;
            k_i_(i) = constants::two_pi * j / (grid_.n_i * h_i_);
        }
        for (int a = 0; a < grid_.n_a; ++a) {
            const int j = a < grid_.n_a / 2 ? a : a - grid_.n_a;
            k_a_(a) = constants::two_pi * j / (grid_.n_a * h_a_);
        }

        // dimensionless coefficients (energies in units of hbar Omega_rf)
        const double mu = su_.mu_ai, wbar = su_.omega_bar, W = p_.trap.Omega_rf;
        kin_i_ = mu * wbar / (p_.ion.mass * W);
        kin_a_ = mu * wbar / (p_.atom.mass * W);
        quad_rf_ = p_.trap.q / 4.0 * (p_.ion.mass / mu) * (W / wbar);
        const double wi = p_.omega_i_basis();
        harm_i_ = 0.5 * (p_.ion.mass / mu) * wi * wi / (wbar * W);
        harm_a_ = 0.5 * (p_.atom.mass / mu) * p_.omega_a * p_.omega_a / (wbar * W);
        drive_ = p_.eta_Omega_SM / W * ell / ell_i_;

        phase_.resize(grid_.n_i, grid_.n_a);
        kin_phase_.resize(grid_.n_i, grid_.n_a);
        const std::size_t n = static_cast<std::size_t>(grid_.n_i) * grid_.n_a;
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!buf_) throw std::bad_alloc();
        // memory is column-major with the ion index fastest, i.e. row-major
        // with dimensions (n_a, n_i) as FFTW counts them
        fwd_ = fftw_plan_dft_2d(grid_.n_a, grid_.n_i, buf_, buf_, FFTW_FORWARD,
                                FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(grid_.n_a, grid_.n_i, buf_, buf_, FFTW_BACKWARD,
                                FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW plan creation failed");
    }

    ~MMEvolver() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    MMEvolver(const MMEvolver&) = delete;
    MMEvolver& operator=(const MMEvolver&) = delete;

    const Grid2D& grid() const { return grid_; }
    const MMParams& params() const { return p_; }
    const ScaledUnits& units() const { return su_; }
    double ell_i() const { return ell_i_; }
    double ell_a() const { return ell_a_; }

    // dressing switch-on envelope in [0, 1]
    double ramp(double t) const {
        if (p_.ramp_time <= 0.0 || t >= p_.ramp_time) return 1.0;
        if (t <= 0.0) return 0.0;
        if (p_.linear_ramp) return t / p_.ramp_time;
        const double s = std::sin(constants::pi * t / (2.0 * p_.ramp_time));
        return s * s;
    }

    // Dimensionless potential of a sector at time t on the full grid,
    // in units of hbar Omega_rf (used for energy records and as the direct
    // reference for the factorized phase application).
    Eigen::ArrayXXd potential_grid(Sector s, double t) const {
        const AxisTerms at = axis_terms(s, t);
        Eigen::ArrayXXd v(grid_.n_i, grid_.n_a);
        for (int a = 0; a < grid_.n_a; ++a) {
            const double xa = x_a_(a);
            for (int i = 0; i < grid_.n_i; ++i)
                v(i, a) = at.pi(i) + at.pa(a) + at.g1(i) * xa + at.g2(i) * xa * xa;
        }
        return v;
    }

    // One symmetric split step: half potential, spectral kinetic, half
    // potential, with the potential frozen at the step midpoint.  Negative
    // dt runs the exact inverse of the corresponding forward step.
    void step(SectorWavefunction& w, double dt) {
        if (std::abs(dt) > (1.0 + 1e-12) * rf_period() / 100.0)
            throw std::invalid_argument(
                "split step: |dt| must not exceed an rf period / 100");
        if (w.psi.rows() != grid_.n_i || w.psi.cols() != grid_.n_a)
            throw std::invalid_argument("split step: grid shape mismatch");
        const double dtau = dt * p_.trap.Omega_rf;
        build_phase(w.sector, w.time + 0.5 * dt, dtau);
        ensure_kinetic(dtau);
        w.psi *= phase_;
        const std::size_t n = static_cast<std::size_t>(grid_.n_i) * grid_.n_a;
        std::memcpy(buf_, w.psi.data(), n * sizeof(fftw_complex));
        fftw_execute(fwd_);
        auto* b = reinterpret_cast<std::complex<double>*>(buf_);
        const std::complex<double>* kp = kin_phase_.data();
        for (std::size_t m = 0; m < n; ++m) b[m] *= kp[m];
        fftw_execute(bwd_);
        std::memcpy(w.psi.data(), buf_, n * sizeof(fftw_complex));
        w.psi *= phase_;
        w.time += dt;
    }

    double norm(const SectorWavefunction& w) const {
        return w.psi.abs2().sum() * h_i_ * h_a_;
    }

    // probability within two grid cells of any boundary
    double edge_probability(const SectorWavefunction& w) const {
        const auto d = w.psi.abs2();
        double s = 0.0;
        for (int a = 0; a < grid_.n_a; ++a)
            for (int i = 0; i < grid_.n_i; ++i)
                if (i < 2 || i >= grid_.n_i - 2 || a < 2 || a >= grid_.n_a - 2)
                    s += d(i, a);
        return s * h_i_ * h_a_;
    }

    void check_health(const SectorWavefunction& w) const {
        if (std::abs(norm(w) - 1.0) > 1e-7)
            throw NormConservationError(
                std::string("sector ") + sector_label(w.sector) +
                ": norm drifted beyond 1e-7");
        if (edge_probability(w) > 1e-6)
            throw BoundaryLeakError(std::string("sector ") +
                                    sector_label(w.sector) +
                                    ": boundary probability exceeds 1e-6");
    }

    // SI position moments
    double mean_x_i(const SectorWavefunction& w) const { return moment(w, 1, 0); }
    double mean_x_a(const SectorWavefunction& w) const { return moment(w, 0, 1); }
    double var_x_i(const SectorWavefunction& w) const {
        const double m = mean_x_i(w);
        return moment(w, 2, 0) - m * m;
    }
    double var_x_a(const SectorWavefunction& w) const {
        const double m = mean_x_a(w);
        return moment(w, 0, 2) - m * m;
    }

    // SI <p^2> per mode (one forward transform for both)
    std::array<double, 2> mean_p2(const SectorWavefunction& w) {
        const std::size_t n = static_cast<std::size_t>(grid_.n_i) * grid_.n_a;
        std::memcpy(buf_, w.psi.data(), n * sizeof(fftw_complex));
        fftw_execute(fwd_);
        auto* b = reinterpret_cast<std::complex<double>*>(buf_);
        double wsum = 0.0, ki2 = 0.0, ka2 = 0.0;
        std::size_t m = 0;
        for (int a = 0; a < grid_.n_a; ++a)
            for (int i = 0; i < grid_.n_i; ++i, ++m) {
                const double d = std::norm(b[m]);
                wsum += d;
                ki2 += d * k_i_(i) * k_i_(i);
                ka2 += d * k_a_(a) * k_a_(a);
            }
        const double hl = constants::hbar / su_.length_unit;
        return {hl * hl * ki2 / wsum, hl * hl * ka2 / wsum};
    }

    // excitation relative to the reference oscillators: n = E/(hbar w) - 1/2,
    // with the energy taken about the undisplaced equilibria
    std::array<double, 2> n_eff(SectorWavefunction& w) {
        const auto p2 = mean_p2(w);
        const double nrm = norm(w);
        const double wi = p_.omega_i_basis();
        const double ei = p2[0] / (2.0 * p_.ion.mass) +
                          0.5 * p_.ion.mass * wi * wi * moment(w, 2, 0) / nrm;
        const double ea = p2[1] / (2.0 * p_.atom.mass) +
                          0.5 * p_.atom.mass * p_.omega_a * p_.omega_a *
                              moment(w, 0, 2) / nrm;
        return {ei / (constants::hbar * wi) - 0.5,
                ea / (constants::hbar * p_.omega_a) - 0.5};
    }

    // SI total energy <T> + <V(t)> of the sector's instantaneous potential
    double energy(SectorWavefunction& w) {
        const auto p2 = mean_p2(w);
        const Eigen::ArrayXXd v = potential_grid(w.sector, w.time);
        const double nrm = norm(w);
        const double pot =
            (v * w.psi.abs2()).sum() * h_i_ * h_a_ / nrm * su_.energy_unit;
        return p2[0] / (2.0 * p_.ion.mass) + p2[1] / (2.0 * p_.atom.mass) + pot;
    }

    double rf_period() const { return constants::two_pi / p_.trap.Omega_rf; }

private:
    struct AxisTerms {
        Eigen::ArrayXd pi, pa; // separable parts, pi also carries the constant
        Eigen::ArrayXd g1, g2; // mixed parts: g1(x_i) x_a + g2(x_i) x_a^2
    };

    AxisTerms axis_terms(Sector s, double t) const {
        AxisTerms at{Eigen::ArrayXd::Zero(grid_.n_i),
                     Eigen::ArrayXd::Zero(grid_.n_a),
                     Eigen::ArrayXd::Zero(grid_.n_i),
                     Eigen::ArrayXd::Zero(grid_.n_i)};
        switch (p_.ion_conf) {
        case IonConfinement::rf:
            at.pi += quad_rf_ * std::cos(p_.trap.Omega_rf * t) * x_i_.square();
            break;
        case IonConfinement::static_harmonic:
            at.pi += harm_i_ * x_i_.square();
            break;
        case IonConfinement::none:
            break;
        }
        if (p_.atom_trap_on) at.pa += harm_a_ * x_a_.square();
        const double w = ramp(t);
        if (sector_ion_up(s) && drive_ != 0.0)
            at.pi += drive_ * std::cos(p_.omega_v() * t) *
                     (p_.ramp_drive ? w : 1.0) * x_i_;
        if (sector_atom_up(s)) {
            const TaylorCoeffs tc =
                taylor3(p_.d, t, p_.dressing, pot_, p_.trap, p_.ion);
            const double amp =
                w * 0.5 * (1.0 + std::cos(p_.omega_v() * t)) / su_.energy_unit;
            static const double fact[4] = {1.0, 1.0, 2.0, 6.0};
            const double ell = su_.length_unit;
            double c[4][4];
            for (int j = 0; j <= 3; ++j)
                for (int k = 0; j + k <= 3; ++k)
                    c[j][k] = tc.d[j][k] / (fact[j] * fact[k]) *
                              std::pow(ell, j + k) * amp;
            at.pi += amp * tc.v00 + c[1][0] * x_i_ + c[2][0] * x_i_.square() +
                     c[3][0] * x_i_.cube();
            at.pa += c[0][1] * x_a_ + c[0][2] * x_a_.square() +
                     c[0][3] * x_a_.cube();
            at.g1 = c[1][1] * x_i_ + c[2][1] * x_i_.square();
            at.g2 = c[1][2] * x_i_;
        }
        return at;
    }

    // exp(-i V dtau / 2) built from the axis decomposition; the mixed part
    // is at most quadratic in x_a at fixed x_i, so each row is a chirped
    // geometric sequence: two phase rotors per point instead of a polar call
    void build_phase(Sector s, double t, double dtau) {
        const AxisTerms at = axis_terms(s, t);
        const double cfac = -0.5 * dtau;
        ea_.resize(grid_.n_a);
        for (int a = 0; a < grid_.n_a; ++a)
            ea_(a) = std::polar(1.0, cfac * at.pa(a));
        const double xa0 = x_a_(0), h = h_a_;
        for (int i = 0; i < grid_.n_i; ++i) {
            const double g1 = at.g1(i), g2 = at.g2(i);
            const double alpha = cfac * (g1 * xa0 + g2 * xa0 * xa0);
            // phi(a) = alpha + beta a + gamma a^2 for x_a = xa0 + a h
            const double beta = cfac * (g1 * h + 2.0 * g2 * xa0 * h);
            const double gamma = cfac * g2 * h * h;
            const double phi0 = cfac * at.pi(i) + alpha;
            std::complex<double> z, r;
            const std::complex<double> rr = std::polar(1.0, 2.0 * gamma);
            for (int a = 0; a < grid_.n_a; ++a) {
                // reseed from an exact rotation every 32 points so the
                // cumulative products never accumulate a modulus drift
                if ((a & 31) == 0) {
                    const double da = static_cast<double>(a);
                    z = std::polar(1.0, phi0 + beta * da + gamma * da * da);
                    r = std::polar(1.0, beta + gamma * (2.0 * da + 1.0));
                }
                phase_(i, a) = z * ea_(a);
                z *= r;
                r *= rr;
            }
        }
    }

    void ensure_kinetic(double dtau) {
        if (dtau == kin_dtau_) return;
        const double scale = 1.0 / (static_cast<double>(grid_.n_i) * grid_.n_a);
        for (int a = 0; a < grid_.n_a; ++a)
            for (int i = 0; i < grid_.n_i; ++i)
                kin_phase_(i, a) =
                    scale * std::polar(1.0, -0.5 * dtau *
                                                (kin_i_ * k_i_(i) * k_i_(i) +
                                                 kin_a_ * k_a_(a) * k_a_(a)));
        kin_dtau_ = dtau;
    }

    // SI moment <x_i^ji x_a^ja> (normalized)
    double moment(const SectorWavefunction& w, int ji, int ja) const {
        const auto d = w.psi.abs2();
        double s = 0.0, wsum = 0.0;
        for (int a = 0; a < grid_.n_a; ++a) {
            const double fa = std::pow(x_a_(a), ja);
            for (int i = 0; i < grid_.n_i; ++i) {
                const double val = d(i, a);
                wsum += val;
                s += val * std::pow(x_i_(i), ji) * fa;
            }
        }
        return s / wsum * std::pow(su_.length_unit, ji + ja);
    }

    Grid2D grid_;
    MMParams p_;
    AdiabaticPotential pot_;
    ScaledUnits su_;
    double ell_i_ = 0, ell_a_ = 0, h_i_ = 0, h_a_ = 0;
    double kin_i_ = 0, kin_a_ = 0, quad_rf_ = 0, harm_i_ = 0, harm_a_ = 0,
           drive_ = 0;
    Eigen::ArrayXd x_i_, x_a_, k_i_, k_a_;
    Eigen::ArrayXcd ea_;
    Eigen::ArrayXXcd phase_, kin_phase_;
    double kin_dtau_ = std::numeric_limits<double>::quiet_NaN();
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

// Single-step convenience wrapper (tests and exploratory use; repeated
// stepping should hold an MMEvolver to reuse the spectral plans).
inline SectorWavefunction split_step(const SectorWavefunction& w, double dt,
                                     const Grid2D& grid, const MMParams& p) {
    MMEvolver ev(grid, p);
    SectorWavefunction out = w;
    ev.step(out, dt);
    return out;
}

struct MMTrace {
    std::vector<double> t;                  // s
    std::vector<double> x_i, x_a;           // m
    std::vector<double> n_i_eff, n_a_eff;   // reference-oscillator quanta
    std::vector<double> energy;             // J
};

struct ZoomWindow {
    double start = 0.0;  // s
    double length = 0.0; // s
};

struct MMResult {
    std::array<MMTrace, 4> traces; // indexed by Sector
    double dt = 0.0;               // s, step actually used
};

// Evolves all four spin sectors from the common Gaussian start to t_end and
// records expectation traces: n_samples uniform times plus every step inside
// the zoom windows (micromotion-ripple insets).
inline MMResult run_micromotion_gate(const MMParams& p, const Grid2D& grid,
                                     int n_samples = 1000,
                                     const std::vector<ZoomWindow>& zooms = {},
                                     int n_threads = 1) {
    p.validate();
    validate_grid(grid, p);
    if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");
    const double dt_target =
        constants::two_pi / p.trap.Omega_rf / p.steps_per_rf_period;
    const long n_steps = static_cast<long>(std::ceil(p.t_end / dt_target));
    const double dt = p.t_end / n_steps;
    const long stride = std::max(1L, n_steps / n_samples);

    auto states = init_gaussian(grid, p);
    MMResult out;
    out.dt = dt;

    // FFTW planning is not thread-safe: create all evolvers up front
    std::array<std::unique_ptr<MMEvolver>, 4> evs;
    for (int s = 0; s < 4; ++s) evs[s] = std::make_unique<MMEvolver>(grid, p);

    auto in_zoom = [&](double t) {
        for (const auto& z : zooms)
            if (t >= z.start && t <= z.start + z.length) return true;
        return false;
    };
    auto run_sector = [&](int s) {
        MMEvolver& ev = *evs[s];
        SectorWavefunction& w = states[s];
        MMTrace& tr = out.traces[s];
        auto record = [&] {
            ev.check_health(w);
            tr.t.push_back(w.time);
            tr.x_i.push_back(ev.mean_x_i(w));
            tr.x_a.push_back(ev.mean_x_a(w));
            const auto n = ev.n_eff(w);
            tr.n_i_eff.push_back(n[0]);
            tr.n_a_eff.push_back(n[1]);
            tr.energy.push_back(ev.energy(w));
        };
        record();
        for (long k = 0; k < n_steps; ++k) {
            ev.step(w, dt);
            if (k + 1 == n_steps || (k + 1) % stride == 0 || in_zoom(w.time))
                record();
        }
    };

    if (n_threads > 1) {
        std::vector<std::thread> workers;
        for (int s = 0; s < 4; ++s) workers.emplace_back(run_sector, s);
        for (auto& th : workers) th.join();
    } else {
        for (int s = 0; s < 4; ++s) run_sector(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classical adequacy check of the third-order expansion: point particles in
// the same sector potential (spin up-up: modulated dressed potential plus
// spin-motion drive), integrated with RK4 using either the full dressed
// potential or its third-order Taylor expansion about the equilibria.

enum class PotentialModel { full, taylor3 };

struct ClassicalOrbit {
    std::vector<double> t;        // s
    std::vector<double> x_i, x_a; // m, displacements from the equilibria
};

namespace detail {
struct ClassicalForces {
    const MMParams& p;
    AdiabaticPotential pot;
    PotentialModel model;
    Sector sector;
    double ell_i;

    ClassicalForces(const MMParams& p_, PotentialModel m, Sector s)
        : p(p_), pot(adiabatic_potential(p_.dressing, p_.c4)), model(m),
          sector(s), ell_i(oscillator_length(p_.ion.mass, p_.omega_i_basis())) {}

    double ramp(double t) const {
        if (p.ramp_time <= 0.0 || t >= p.ramp_time) return 1.0;
        if (t <= 0.0) return 0.0;
        if (p.linear_ramp) return t / p.ramp_time;
        const double s = std::sin(constants::pi * t / (2.0 * p.ramp_time));
        return s * s;
    }

    // d V~ / d x_i and d V~ / d x_a at displacements (x_i, x_a)
    std::array<double, 2> dressed_gradient(double x_i, double x_a,
                                           double t) const {
        if (model == PotentialModel::full) {
            const double h = 1e-12;
            auto v = [&](double xi, double xa) {
                return v_tilde(xi, xa, t, p.d, p.dressing, pot, p.trap, p.ion);
            };
            return {(v(x_i + h, x_a) - v(x_i - h, x_a)) / (2.0 * h),
                    (v(x_i, x_a + h) - v(x_i, x_a - h)) / (2.0 * h)};
        }
        const TaylorCoeffs tc = taylor3(p.d, t, p.dressing, pot, p.trap, p.ion);
        static const double fact[4] = {1.0, 1.0, 2.0, 6.0};
        double gi = 0.0, ga = 0.0;
        for (int j = 0; j <= 3; ++j)
            for (int k = 0; j + k <= 3; ++k) {
                const double c = tc.d[j][k] / (fact[j] * fact[k]);
                if (j >= 1)
                    gi += c * j * std::pow(x_i, j - 1) * std::pow(x_a, k);
                if (k >= 1)
                    ga += c * std::pow(x_i, j) * k * std::pow(x_a, k - 1);
            }
        return {gi, ga};
    }

    // accelerations (x_i'', x_a'') in the configured sector's potential
    std::array<double, 2> accel(double x_i, double x_a, double t) const {
        double f_i = -0.5 * p.ion.mass * p.trap.Omega_rf * p.trap.Omega_rf *
                     p.trap.q * std::cos(p.trap.Omega_rf * t) * x_i;
        double f_a = -p.atom.mass * p.omega_a * p.omega_a * x_a;
        if (sector_atom_up(sector)) {
            const double env =
                ramp(t) * 0.5 * (1.0 + std::cos(p.omega_v() * t));
            const auto g = dressed_gradient(x_i, x_a, t);
            f_i -= env * g[0];
            f_a -= env * g[1];
        }
        if (sector_ion_up(sector))
            f_i -= (p.ramp_drive ? ramp(t) : 1.0) * p.eta_Omega_SM *
                   constants::hbar * std::cos(p.omega_v() * t) / ell_i;
        return {f_i / p.ion.mass, f_a / p.atom.mass};
    }
};
} // namespace detail

// RK4 orbit of classical particles starting at rest at the equilibria
// (matching the mean positions of the quantum run); optional initial
// displacements probe the wavepacket edge.
inline ClassicalOrbit classical_orbit(const MMParams& p, PotentialModel model,
                                      Sector sector = Sector::ud,
                                      double dt = 0.0, int sample_stride = 8,
                                      double x0_i = 0.0, double x0_a = 0.0) {
    p.validate();
    if (dt <= 0.0) dt = constants::two_pi / p.trap.Omega_rf / 200.0;
    const detail::ClassicalForces forces(p, model, sector);
    const long n_steps = static_cast<long>(std::ceil(p.t_end / dt));
    dt = p.t_end / n_steps;
    std::array<double, 4> y{x0_i, 0.0, x0_a, 0.0}; // x_i, v_i, x_a, v_a
    auto deriv = [&](const std::array<double, 4>& s, double t) {
        const auto a = forces.accel(s[0], s[2], t);
        return std::array<double, 4>{s[1], a[0], s[3], a[1]};
    };
    ClassicalOrbit orbit;
    auto record = [&](double t) {
        orbit.t.push_back(t);
        orbit.x_i.push_back(y[0]);
        orbit.x_a.push_back(y[2]);
    };
    record(0.0);
    for (long k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        const auto k1 = deriv(y, t);
        std::array<double, 4> y2, y3, y4;
        for (int j = 0; j < 4; ++j) y2[j] = y[j] + 0.5 * dt * k1[j];
        const auto k2 = deriv(y2, t + 0.5 * dt);
        for (int j = 0; j < 4; ++j) y3[j] = y[j] + 0.5 * dt * k2[j];
        const auto k3 = deriv(y3, t + 0.5 * dt);
        for (int j = 0; j < 4; ++j) y4[j] = y[j] + dt * k3[j];
        const auto k4 = deriv(y4, t + dt);
        for (int j = 0; j < 4; ++j)
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        if ((k + 1) % sample_stride == 0 || k + 1 == n_steps) record((k + 1) * dt);
    }
    return orbit;
}

struct AdequacyReport {
    double dev_ion = 0.0;  // max |x_i(full) - x_i(third order)| / ell_i
    double dev_atom = 0.0; // max |x_a(full) - x_a(third order)| / ell_a
};

// Compares the orbits in the sector with the largest motional excursion
// (atom up, ion down: the dressed force drives a full motional loop), where
// the truncation of the potential is most exposed.
inline AdequacyReport taylor_adequacy_check(const MMParams& p, double dt = 0.0,
                                            Sector sector = Sector::ud) {
    const auto full = classical_orbit(p, PotentialModel::full, sector, dt);
    const auto cut = classical_orbit(p, PotentialModel::taylor3, sector, dt);
    const double li = oscillator_length(p.ion.mass, p.omega_i_basis());
    const double la = oscillator_length(p.atom.mass, p.omega_a);
    AdequacyReport rep;
    for (std::size_t k = 0; k < full.t.size(); ++k) {
        rep.dev_ion =
            std::max(rep.dev_ion, std::abs(full.x_i[k] - cut.x_i[k]) / li);
        rep.dev_atom =
            std::max(rep.dev_atom, std::abs(full.x_a[k] - cut.x_a[k]) / la);
    }
    return rep;
}

} // namespace rydion
