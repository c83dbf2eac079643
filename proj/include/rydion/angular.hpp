#pragma once

#include <cmath>

#include "rydion/wigner.hpp"

namespace rydion {

// <l1 m1| C^k_q |l2 m2> with C^k_q = sqrt(4 pi / (2k+1)) Y_{kq}
inline double orbital_ck(int l1, int m1, int k, int q, int l2, int m2) {
    if (m1 != m2 + q) return 0.0;
    return std::sqrt((2.0 * l2 + 1.0) / (2.0 * l1 + 1.0)) *
           clebsch_gordan(l2, 0, k, 0, l1, 0) *
           clebsch_gordan(l2, m2, k, q, l1, m1);
}

// <ms1| s_q |ms2> for spin 1/2, spherical components in units of hbar:
// s_0 = s_z, s_{+1} = -(s_x + i s_y)/sqrt(2), s_{-1} = (s_x - i s_y)/sqrt(2).
// All elements are real in this basis.
inline double spin_half_sq(double ms1, int q, double ms2) {
    if (std::lround(2 * ms1) != std::lround(2 * ms2) + 2 * q) return 0.0;
    switch (q) {
        case 0: return ms2;
        case 1: return -1.0 / std::sqrt(2.0);  // <up| s_{+1} |down>
        case -1: return 1.0 / std::sqrt(2.0);  // <down| s_{-1} |up>
        default: return 0.0;
    }
}

// <l1, s=1/2; j1 mj1| C^k_q (identity on spin) |l2, s=1/2; j2 mj2>
inline double tensor_element_coupled(int l1, double j1, double mj1, int k, int q,
                                     int l2, double j2, double mj2) {
    if (std::lround(2 * mj1) != std::lround(2 * mj2) + 2 * q) return 0.0;
    double sum = 0.0;
    for (int tms = -1; tms <= 1; tms += 2) {
        const double ms = 0.5 * tms;
        const int m2 = static_cast<int>(std::lround(mj2 - ms));
        const int m1 = m2 + q;
        if (std::abs(m2) > l2 || std::abs(m1) > l1) continue;
        sum += clebsch_gordan(l1, m1, 0.5, ms, j1, mj1) *
               clebsch_gordan(l2, m2, 0.5, ms, j2, mj2) *
               orbital_ck(l1, m1, k, q, l2, m2);
    }
    return sum;
}

// <l1, s; j1 mj1| s_{sq} C^k_{oq} |l2, s; j2 mj2>  (product of a spin and an
// orbital spherical component; needed for the spin-flip field terms)
inline double spin_tensor_element_coupled(int l1, double j1, double mj1, int sq,
                                          int k, int oq, int l2, double j2,
                                          double mj2) {
    if (std::lround(2 * mj1) != std::lround(2 * mj2) + 2 * (sq + oq)) return 0.0;
    double sum = 0.0;
    for (int tms2 = -1; tms2 <= 1; tms2 += 2) {
        const double ms2 = 0.5 * tms2;
        const double ms1 = ms2 + sq;
        if (std::abs(ms1) > 0.5 + 1e-9) continue;
        const int m2 = static_cast<int>(std::lround(mj2 - ms2));
        const int m1 = m2 + oq;
        if (std::abs(m2) > l2 || std::abs(m1) > l1) continue;
        sum += clebsch_gordan(l1, m1, 0.5, ms1, j1, mj1) *
               clebsch_gordan(l2, m2, 0.5, ms2, j2, mj2) *
               spin_half_sq(ms1, sq, ms2) * orbital_ck(l1, m1, k, oq, l2, m2);
    }
    return sum;
}

} // namespace rydion
