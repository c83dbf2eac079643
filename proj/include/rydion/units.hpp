#pragma once

#include <cmath>
#include <stdexcept>

#include "rydion/constants.hpp"
#include "rydion/paul_trap.hpp"
#include "rydion/species.hpp"

namespace rydion {

// Dimensionless unit system of the grid solver: lengths in
// ell = sqrt(hbar/(mu_ai omega_bar)), energies in hbar Omega_rf,
// time variable tau = Omega_rf t. Also carries the dimensionless
// field-norm coefficients beta_1..beta_5 and xi_1..xi_3.
struct ScaledUnits {
    double mu_ai = 0.0;       // kg, atom-ion reduced mass
    double omega_bar = 0.0;   // rad/s, sqrt(omega_a omega_i)
    double length_unit = 0.0; // m
    double energy_unit = 0.0; // J, hbar Omega_rf
    double Omega_rf = 0.0;    // rad/s
    double e_star = 0.0;      // J, hbar^4 / (2 alpha_up mu_ai^2 e^2 kC^2)
    double gamma = 0.0;       // alpha_R / alpha_up

    double beta1 = 0, beta2 = 0, beta3 = 0, beta4 = 0, beta5 = 0;
    double xi1_bar = 0, xi2_bar = 0, xi3_bar = 0;

    ScaledUnits() = default;
    // alpha_up / alpha_R: SI polarizabilities (C m^2 / V) of the dressed
    // ground state and the Rydberg state.
    ScaledUnits(const Species& atom, const Species& ion, double omega_a,
                double omega_i, double Omega_rf_, double Omega_rabi,
                double Delta0, double alpha_up, double alpha_R) {
        using namespace constants;
        if (omega_a <= 0 || omega_i <= 0 || Omega_rf_ <= 0)
            throw std::invalid_argument("frequencies must be > 0");
        mu_ai = atom_ion_reduced_mass(atom, ion);
        omega_bar = std::sqrt(omega_a * omega_i);
        length_unit = std::sqrt(hbar / (mu_ai * omega_bar));
        Omega_rf = Omega_rf_;
        energy_unit = hbar * Omega_rf_;
        const double e2kc = e_charge * e_charge * k_coulomb;
        e_star = hbar * hbar * hbar * hbar /
                 (2.0 * alpha_up * mu_ai * mu_ai * e2kc * k_coulomb);
        gamma = alpha_R / alpha_up;

        const double l3 = length_unit * length_unit * length_unit;
        const double l6 = l3 * l3;
        const double mi = ion.mass;
        const double e4kc2 = e2kc * e2kc;
        beta1 = mi * mi * std::pow(omega_i, 4) * l6 / e4kc2;
        beta2 = mi * mi * std::pow(Omega_rf_, 4) * l6 / e4kc2;
        beta3 = mi * mi * omega_i * omega_i * Omega_rf_ * Omega_rf_ * l6 / e4kc2;
        beta4 = mi * omega_i * omega_i * l3 / (k_coulomb * e_charge * e_charge);
        beta5 = mi * Omega_rf_ * Omega_rf_ * l3 / (k_coulomb * e_charge * e_charge);

        xi1_bar = Omega_rabi / Omega_rf_;
        xi2_bar = Delta0 / Omega_rabi;
        xi3_bar = gamma / 4.0 * (hbar * omega_bar) * (hbar * omega_bar) /
                  (hbar * Omega_rabi * e_star);
    }

    double to_si_length(double x) const { return x * length_unit; }
    double to_si_energy(double e) const { return e * energy_unit; }
    double to_si_time(double tau) const { return tau / Omega_rf; }
    double from_si_length(double x) const { return x / length_unit; }
    double from_si_energy(double e) const { return e / energy_unit; }
    double from_si_time(double t) const { return t * Omega_rf; }
};

} // namespace rydion
