#pragma once

// CODATA 2018 constants and isotope data, SI units throughout.

namespace rydion::constants {

inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double h_planck = 6.62607015e-34;    // J s
inline constexpr double e_charge = 1.602176634e-19;   // C
inline constexpr double eps0 = 8.8541878128e-12;      // F/m
inline constexpr double k_coulomb = 8.9875517923e9;   // 1/(4 pi eps0), N m^2/C^2
inline constexpr double c_light = 299792458.0;        // m/s
inline constexpr double m_electron = 9.1093837015e-31; // kg
inline constexpr double amu = 1.66053906660e-27;      // kg
inline constexpr double bohr_radius = 5.29177210903e-11; // m
inline constexpr double rydberg_inf = 10973731.568160;   // 1/m (R_infinity)
inline constexpr double hartree = 4.3597447222071e-18;   // J
inline constexpr double ev = 1.602176634e-19;            // J

// 1 atomic unit of polarizability in SI (C m^2 / V)
inline constexpr double alpha_au = 1.64877727436e-41;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Isotope masses (neutral atoms), >= 9 significant figures.
inline constexpr double mass_li6 = 6.0151228874 * amu;
inline constexpr double mass_li7 = 7.0160034366 * amu;
inline constexpr double mass_yb171 = 170.9363302 * amu;

// Literature static polarizability of the Li ground state, atomic units.
inline constexpr double alpha_li_ground_au = 164.2;

} // namespace rydion::constants
