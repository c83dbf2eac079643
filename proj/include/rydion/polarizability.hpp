#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rydion/angular.hpp"
#include "rydion/constants.hpp"
#include "rydion/rydberg.hpp"
#include "rydion/species.hpp"

namespace rydion {

// Principal / azimuthal truncation of the bound-state basis. The
// include_spin_orbit flag controls the explicit ion-induced spin-orbit matrix
// term in the interaction Hamiltonian; fine structure through j-dependent
// quantum defects is always present.
struct BasisSpec {
    int n_min = 0;
    int n_max = 0;
    int l_max = 0;
    bool include_spin_orbit = true;

    BasisSpec() = default;
    BasisSpec(int nmin, int nmax, int lmax, bool so = true)
        : n_min(nmin), n_max(nmax), l_max(lmax), include_spin_orbit(so) {
        if (n_min < 1 || n_min > n_max)
            throw std::invalid_argument("need 1 <= n_min <= n_max");
        if (l_max < 0 || l_max >= n_max)
            throw std::invalid_argument("need 0 <= l_max < n_max");
    }
};

class DegenerateDenominatorError : public std::runtime_error {
public:
    DegenerateDenominatorError(const std::string& msg, double gap_j)
        : std::runtime_error(msg), gap(gap_j) {}
    double gap; // offending |E_k - E_state| in J
};

// Static dipole polarizability from the second-order perturbation sum
//   alpha = 2 sum_k |<k| e z |state>|^2 / (E_k - E_state)   [C m^2 / V]
// over the dipole-coupled partners within the basis range. Positive for
// states whose dominant partners lie above (e.g. Li nS near n = 30).
inline double polarizability(const RydbergState& st, const Species& sp,
                             const BasisSpec& basis, WavefunctionCache& cache) {
    const auto ws = cache.get(sp, st);
    const double ea0 = constants::e_charge * constants::bohr_radius;
    // local level spacing sets the degeneracy-guard scale
    const double spacing =
        std::abs(defect_energy(sp, st.n + 1, st.l, st.j) - st.energy);
    double alpha = 0.0;
    for (int n = basis.n_min; n <= basis.n_max; ++n) {
        for (int l : {st.l - 1, st.l + 1}) {
            if (l < 0 || l >= n || l > basis.l_max) continue;
            for (int tj = 2 * l - 1; tj <= 2 * l + 1; tj += 2) {
                if (tj < 1) continue;
                const double j = 0.5 * tj;
                if (std::abs(st.mj) > j + 1e-9) continue;
                const double ang = tensor_element_coupled(l, j, st.mj, 1, 0,
                                                          st.l, st.j, st.mj);
                if (ang == 0.0) continue;
                const auto k = make_state(sp, n, l, j, st.mj);
                const double de = k.energy - st.energy;
                if (std::abs(de) < 1e-6 * spacing)
                    throw DegenerateDenominatorError(
                        "degenerate denominator: n=" + std::to_string(n) +
                            " l=" + std::to_string(l) + " vs state n=" +
                            std::to_string(st.n) + " l=" + std::to_string(st.l),
                        std::abs(de));
                const auto wk = cache.get(sp, k);
                const double d = ea0 * radial_moment(wk, ws, 1) * ang;
                alpha += 2.0 * d * d / de;
            }
        }
    }
    return alpha;
}

inline double polarizability(const RydbergState& st, const Species& sp,
                             const BasisSpec& basis) {
    WavefunctionCache off;
    return polarizability(st, sp, basis, off);
}

// SI -> atomic units (e^2 a0^2 / E_h)
inline double polarizability_au(double alpha_si) {
    return alpha_si / constants::alpha_au;
}

} // namespace rydion
