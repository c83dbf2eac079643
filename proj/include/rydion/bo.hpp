#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rydion/angular.hpp"
#include "rydion/constants.hpp"
#include "rydion/paul_trap.hpp"
#include "rydion/polarizability.hpp"
#include "rydion/rydberg.hpp"

namespace rydion {

namespace detail {

// radial_moment integrates on the first function's grid, so it is symmetric
// only to quadrature accuracy; a canonical argument order keeps assembled
// matrices Hermitian to machine precision.
inline double radial_moment_sym(const RadialWavefunction& a,
                                const RadialWavefunction& b, int k) {
    const auto key = [](const RydbergState& s) {
        return std::make_tuple(s.n, s.l, static_cast<int>(std::lround(2 * s.j)));
    };
    return key(a.state) <= key(b.state) ? radial_moment(a, b, k)
                                        : radial_moment(b, a, k);
}

} // namespace detail

enum class RfPhase { max_plus, zero, max_minus };
enum class TrapAxis { radial, axial }; // direction of the atom from the ion

struct TrapSnapshot {
    TrapParams trap;
    RfPhase phase = RfPhase::zero;
    TrapAxis axis = TrapAxis::radial;
};

// The interaction matrix split by physical origin (all in J):
//   charge-dipole, scalar r^2, quadrupole (r.Rhat)^2, ion-induced spin-orbit.
struct BOTerms {
    Eigen::MatrixXd dipole;
    Eigen::MatrixXd scalar_r2;
    Eigen::MatrixXd quadrupole;
    Eigen::MatrixXd spin_orbit;
};

struct BOMatrix {
    std::vector<RydbergState> basis;
    double R = 0.0;                    // m
    std::optional<TrapSnapshot> field; // none: field-free
    Eigen::MatrixXd matrix;            // J, real symmetric (axis = z frame)
    Eigen::MatrixXd dipole_op;         // <r . Rhat> in m (for field couplings)
};

// All (n, l, j) states in the basis range at fixed mj (quantization axis
// along the atom-ion separation conserves mj), sorted by energy.
inline std::vector<RydbergState> enumerate_basis(const Species& sp,
                                                 const BasisSpec& bs,
                                                 double mj = 0.5) {
    std::vector<RydbergState> basis;
    for (int n = bs.n_min; n <= bs.n_max; ++n)
        for (int l = 0; l <= std::min(bs.l_max, n - 1); ++l)
            for (int tj = std::max(1, 2 * l - 1); tj <= 2 * l + 1; tj += 2) {
                const double j = 0.5 * tj;
                if (std::abs(mj) > j + 1e-9) continue;
                basis.push_back(make_state(sp, n, l, j, mj));
            }
    std::sort(basis.begin(), basis.end(),
              [](const RydbergState& a, const RydbergState& b) {
                  return std::tie(a.energy, a.l, a.j) < std::tie(b.energy, b.l, b.j);
              });
    return basis;
}

// Assembles the electronic interaction Hamiltonian of a Rydberg atom with a
// distant ion, expanded to second order in r/R with the quantization axis
// along the separation vector:
//   e^2 k_C [ -r.Rhat / R^2 + (m_c - m_e)/(2M) r^2 / R^3 ]
//   - (3/2) e^2 k_C (m_c - m_e)/M  (r.Rhat)^2 / R^3
//   + e^2 k_C mu/(m_e^2 c^2 R^2) (E_bra - E_ket) <s_{+1}C^1_{-1} - s_{-1}C^1_{+1}>
// (the last line is the ion-field spin-orbit term with the momentum operator
// eliminated through the commutator with the unperturbed Hamiltonian).
// Radial and angular factors are precomputed once per basis.
class BOBuilder {
public:
    BOBuilder(const Species& atom, const Species& ion, const BasisSpec& bs,
              WavefunctionCache* cache = nullptr, double mj = 0.5)
        : atom_(atom), ion_(ion), spec_(bs), basis_(enumerate_basis(atom, bs, mj)) {
        const int n = static_cast<int>(basis_.size());
        if (n == 0) throw std::invalid_argument("empty basis");
        WavefunctionCache local;
        WavefunctionCache& c = cache ? *cache : local;

        std::vector<RadialWavefunction> wf;
        wf.reserve(n);
        for (const auto& st : basis_) wf.push_back(c.get(atom_, st));

        const double a0 = constants::bohr_radius;
        e0_.resize(n);
        for (int i = 0; i < n; ++i) e0_(i) = basis_[i].energy;
        dip_m_ = Eigen::MatrixXd::Zero(n, n);
        r2_m_ = Eigen::MatrixXd::Zero(n, n);
        quad_m_ = Eigen::MatrixXd::Zero(n, n);
        so_m_ = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const auto& a = basis_[i];
            for (int k = i; k < n; ++k) {
                const auto& b = basis_[k];
                const int dl = std::abs(a.l - b.l);
                if (dl == 1) {
                    const double r1 = a0 * detail::radial_moment_sym(wf[i], wf[k], 1);
                    const double ang1 = tensor_element_coupled(
                        a.l, a.j, a.mj, 1, 0, b.l, b.j, b.mj);
                    dip_m_(i, k) = dip_m_(k, i) = r1 * ang1;
                    const double x =
                        spin_tensor_element_coupled(a.l, a.j, a.mj, +1, 1, -1,
                                                    b.l, b.j, b.mj) -
                        spin_tensor_element_coupled(a.l, a.j, a.mj, -1, 1, +1,
                                                    b.l, b.j, b.mj);
                    // (E_i - E_k) antisymmetry times antisymmetric x:
                    // symmetric matrix
                    so_m_(i, k) = (a.energy - b.energy) * r1 * x;
                    so_m_(k, i) = so_m_(i, k);
                } else if (dl == 0 || dl == 2) {
                    const double r2 = a0 * a0 * detail::radial_moment_sym(wf[i], wf[k], 2);
                    const double same =
                        (a.l == b.l && std::abs(a.j - b.j) < 1e-9) ? 1.0 : 0.0;
                    const double ang2 = tensor_element_coupled(
                        a.l, a.j, a.mj, 2, 0, b.l, b.j, b.mj);
                    r2_m_(i, k) = r2_m_(k, i) = r2 * same;
                    quad_m_(i, k) = quad_m_(k, i) =
                        r2 * (same / 3.0 + 2.0 / 3.0 * ang2);
                }
            }
        }
    }

    const std::vector<RydbergState>& basis() const { return basis_; }
    const Species& atom() const { return atom_; }
    const Species& ion() const { return ion_; }
    const BasisSpec& spec() const { return spec_; }
    const Eigen::VectorXd& asymptotic_energies() const { return e0_; }

    BOTerms term_matrices(double R) const {
        if (!(R > 0.0)) throw std::invalid_argument("R must be > 0");
        namespace C = constants;
        const double e2kc = C::e_charge * C::e_charge * C::k_coulomb;
        const double mass_factor =
            (atom_.core_mass() - C::m_electron) / atom_.mass;
        const double c_dip = -e2kc / (R * R);
        const double c_r2 = e2kc * mass_factor / (2.0 * R * R * R);
        const double c_quad = -1.5 * e2kc * mass_factor / (R * R * R);
        const double c_so = e2kc * atom_.reduced_mass() /
                            (C::m_electron * C::m_electron * C::c_light *
                             C::c_light * R * R);
        BOTerms t;
        t.dipole = c_dip * dip_m_;
        t.scalar_r2 = c_r2 * r2_m_;
        t.quadrupole = c_quad * quad_m_;
        t.spin_orbit = c_so * so_m_;
        return t;
    }

    BOMatrix build_interaction(double R) const {
        const auto t = term_matrices(R);
        BOMatrix m;
        m.basis = basis_;
        m.R = R;
        m.matrix = t.dipole + t.scalar_r2 + t.quadrupole;
        if (spec_.include_spin_orbit) m.matrix += t.spin_orbit;
        m.matrix += e0_.asDiagonal();
        m.dipole_op = dip_m_;
        return m;
    }

private:
    Species atom_, ion_;
    BasisSpec spec_;
    std::vector<RydbergState> basis_;
    Eigen::VectorXd e0_;       // J
    Eigen::MatrixXd dip_m_;    // <r.zhat>, m
    Eigen::MatrixXd r2_m_;     // <r^2> delta_{lj}, m^2
    Eigen::MatrixXd quad_m_;   // <(r.zhat)^2>, m^2
    Eigen::MatrixXd so_m_;     // (E_i - E_j) <r.zhat> X, J m
};

// Quasi-static dipole coupling of the Rydberg electron to the trap field
// evaluated at the atom position (distance R from the trap center along the
// chosen axis; the field there is parallel to the separation axis).
inline BOMatrix add_trap_snapshot(const BOMatrix& m, const TrapParams& trap,
                                  RfPhase phase, const Species& ion,
                                  TrapAxis axis = TrapAxis::radial) {
    if (m.field)
        throw std::invalid_argument("trap snapshot already applied");
    const Vec3 pos = axis == TrapAxis::radial ? Vec3{m.R, 0, 0} : Vec3{0, 0, m.R};
    const Vec3 unit = axis == TrapAxis::radial ? Vec3{1, 0, 0} : Vec3{0, 0, 1};
    const double s = phase == RfPhase::max_plus  ? 1.0
                     : phase == RfPhase::max_minus ? -1.0
                                                   : 0.0;
    const Vec3 field =
        static_field(pos, trap, ion) + rf_field(pos, 0.0, trap, ion) * s;
    const double e_par = field.dot(unit);
    BOMatrix out = m;
    out.field = TrapSnapshot{trap, phase, axis};
    out.matrix += constants::e_charge * e_par * m.dipole_op;
    return out;
}

class OverlapAmbiguityError : public std::runtime_error {
public:
    OverlapAmbiguityError(const std::string& msg, double R_at)
        : std::runtime_error(msg), R(R_at) {}
    double R; // m
};

struct PotentialCurve {
    std::vector<double> R_grid;          // m, ascending
    Eigen::MatrixXd energies;            // (n_curves, n_R), J
    std::vector<RydbergState> labels;    // dominant character at largest R

    int find(int n, int l, double j) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k].n == n && labels[k].l == l &&
                std::abs(labels[k].j - j) < 1e-9)
                return static_cast<int>(k);
        throw std::out_of_range("no curve labeled n=" + std::to_string(n) +
                                " l=" + std::to_string(l));
    }
};

namespace detail {

// Match each previous eigenvector to its best-overlap successor. Greedy in
// order of decreasing overlap, so unambiguous pairs claim their columns
// first. An ambiguous split between two non-degenerate eigenvectors is an
// error; within a numerically degenerate pair the choice is gauge freedom.
inline std::vector<int> connect_by_overlap(const Eigen::MatrixXd& v_prev,
                                           const Eigen::MatrixXd& v_cur,
                                           const Eigen::VectorXd& evals_cur,
                                           double R) {
    const int n = static_cast<int>(v_prev.cols());
    const Eigen::MatrixXd ov = (v_prev.transpose() * v_cur).cwiseAbs();
    const double deg_tol = 1e3 * constants::h_planck; // exact degeneracies only
    for (int r = 0; r < n; ++r) {
        int best = 0, second = -1;
        for (int c = 1; c < n; ++c)
            if (ov(r, c) > ov(r, best))
                second = best, best = c;
            else if (second < 0 || ov(r, c) > ov(r, second))
                second = c;
        if (second >= 0 && ov(r, best) - ov(r, second) < 1e-6 &&
            std::abs(evals_cur(best) - evals_cur(second)) > deg_tol)
            throw OverlapAmbiguityError(
                "ambiguous curve connection (overlaps " +
                    std::to_string(ov(r, best)) + " vs " +
                    std::to_string(ov(r, second)) + ") at R = " +
                    std::to_string(R * 1e6) + " um",
                R);
    }
    std::vector<std::tuple<double, int, int>> entries;
    entries.reserve(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) entries.emplace_back(ov(r, c), r, c);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<int> match(n, -1);
    std::vector<char> row_used(n, 0), col_used(n, 0);
    int assigned = 0;
    for (const auto& [o, r, c] : entries) {
        if (row_used[r] || col_used[c]) continue;
        match[r] = c;
        row_used[r] = col_used[c] = 1;
        if (++assigned == n) break;
    }
    return match;
}

} // namespace detail

// Dense eigendecomposition per R with curves connected between adjacent grid
// points by maximum eigenvector overlap (energy ordering breaks at avoided
// crossings). Labels are assigned at the largest R where the eigenvectors
// coincide with basis states.
inline PotentialCurve diagonalize_curves(
    const BOBuilder& builder, const std::vector<double>& R_grid,
    const std::optional<TrapSnapshot>& field = std::nullopt) {
    if (R_grid.empty()) throw std::invalid_argument("empty R grid");
    if (!std::is_sorted(R_grid.begin(), R_grid.end()))
        throw std::invalid_argument("R grid must be ascending");
    const int n = static_cast<int>(builder.basis().size());
    const int nr = static_cast<int>(R_grid.size());

    PotentialCurve out;
    out.R_grid = R_grid;
    out.energies.resize(n, nr);

    Eigen::MatrixXd v_prev;
    std::vector<int> perm(n); // curve k -> eigencolumn at the current R
    for (int ir = nr - 1; ir >= 0; --ir) {
        BOMatrix bo = builder.build_interaction(R_grid[ir]);
        if (field)
            bo = add_trap_snapshot(bo, field->trap, field->phase, builder.ion(),
                                   field->axis);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bo.matrix);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("eigendecomposition failed");
        if (ir == nr - 1) {
            // dominant basis component labels each curve at the largest R
            out.labels.resize(n);
            for (int k = 0; k < n; ++k) {
                int imax = 0;
                es.eigenvectors().col(k).cwiseAbs().maxCoeff(&imax);
                out.labels[k] = builder.basis()[imax];
                perm[k] = k;
            }
        } else {
            const auto match = detail::connect_by_overlap(
                v_prev, es.eigenvectors(), es.eigenvalues(), R_grid[ir]);
            std::vector<int> next(n);
            for (int k = 0; k < n; ++k) next[k] = match[perm[k]];
            perm = next;
        }
        for (int k = 0; k < n; ++k) out.energies(k, ir) = es.eigenvalues()(perm[k]);
        // reorder columns so row indices of the next overlap matrix are curves
        Eigen::MatrixXd v(n, n);
        for (int k = 0; k < n; ++k) v.col(k) = es.eigenvectors().col(perm[k]);
        v_prev = std::move(v);
        for (int k = 0; k < n; ++k) perm[k] = k;
    }
    return out;
}

// C4 = alpha e^2 k_C^2 / 2 from the perturbative polarizability (J m^4).
inline double c4_second_order(const RydbergState& st, const Species& sp,
                              const BasisSpec& basis, WavefunctionCache& cache) {
    const double ekc = constants::e_charge * constants::k_coulomb;
    return polarizability(st, sp, basis, cache) * ekc * ekc / 2.0;
}

// ---------------------------------------------------------------------------
// Reference assembly for an arbitrary quantization axis (complex, mj-resolved
// basis). Exists to verify rotational invariance of the production z-axis
// builder; O(N^2) matrix elements are computed directly.

inline std::vector<RydbergState> enumerate_basis_all_mj(const Species& sp,
                                                        const BasisSpec& bs) {
    std::vector<RydbergState> basis;
    for (int n = bs.n_min; n <= bs.n_max; ++n)
        for (int l = 0; l <= std::min(bs.l_max, n - 1); ++l)
            for (int tj = std::max(1, 2 * l - 1); tj <= 2 * l + 1; tj += 2)
                for (int tmj = -tj; tmj <= tj; tmj += 2)
                    basis.push_back(make_state(sp, n, l, 0.5 * tj, 0.5 * tmj));
    return basis;
}

inline Eigen::MatrixXcd build_interaction_any_axis(
    double R, const Vec3& axis, const std::vector<RydbergState>& basis,
    const Species& atom, const Species& ion, WavefunctionCache& cache,
    bool include_spin_orbit = true) {
    (void)ion;
    namespace C = constants;
    using cd = std::complex<double>;
    const double an = axis.norm();
    if (!(an > 0.0)) throw std::invalid_argument("axis must be nonzero");
    const double nx = axis.x / an, ny = axis.y / an, nz = axis.z / an;
    const cd npl(nx, ny), nmi(nx, -ny);
    // spherical components C^1_q(nhat) and C^2_q(nhat), index q + k
    const cd n1[3] = {nmi / std::sqrt(2.0), nz, -npl / std::sqrt(2.0)};
    const cd n2[5] = {std::sqrt(3.0 / 8.0) * nmi * nmi,
                      std::sqrt(3.0 / 2.0) * nz * nmi,
                      0.5 * (3.0 * nz * nz - 1.0),
                      -std::sqrt(3.0 / 2.0) * nz * npl,
                      std::sqrt(3.0 / 8.0) * npl * npl};

    const int n = static_cast<int>(basis.size());
    std::map<std::tuple<int, int, int>, RadialWavefunction> wfs;
    auto wf = [&](const RydbergState& st) -> const RadialWavefunction& {
        const auto key = std::make_tuple(st.n, st.l, static_cast<int>(std::lround(2 * st.j)));
        auto it = wfs.find(key);
        if (it == wfs.end()) it = wfs.emplace(key, cache.get(atom, st)).first;
        return it->second;
    };

    const double a0 = C::bohr_radius;
    const double e2kc = C::e_charge * C::e_charge * C::k_coulomb;
    const double mass_factor = (atom.core_mass() - C::m_electron) / atom.mass;
    const double c_dip = -e2kc / (R * R);
    const double c_r2 = e2kc * mass_factor / (2.0 * R * R * R);
    const double c_quad = -1.5 * e2kc * mass_factor / (R * R * R);
    const double c_so = e2kc * atom.reduced_mass() /
                        (C::m_electron * C::m_electron * C::c_light * C::c_light * R * R);

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& a = basis[i];
        h(i, i) += a.energy;
        for (int k = 0; k < n; ++k) {
            const auto& b = basis[k];
            const int dl = std::abs(a.l - b.l);
            if (dl == 1) {
                const double r1 = a0 * detail::radial_moment_sym(wf(a), wf(b), 1);
                // r . nhat = sum_q (-1)^q r_q n_{-q}
                cd dip = 0.0;
                for (int q = -1; q <= 1; ++q)
                    dip += double((q % 2) ? -1 : 1) *
                           tensor_element_coupled(a.l, a.j, a.mj, 1, q, b.l, b.j, b.mj) *
                           n1[1 - q];
                h(i, k) += c_dip * r1 * dip;
                if (include_spin_orbit) {
                    // s.(nhat x r), cross product as a rank-1 tensor product
                    cd t = 0.0;
                    for (int q = -1; q <= 1; ++q)
                        for (int q1 = -1; q1 <= 1; ++q1) {
                            const int q2 = -q - q1;
                            if (std::abs(q2) > 1) continue;
                            const double ste = spin_tensor_element_coupled(
                                a.l, a.j, a.mj, q, 1, q2, b.l, b.j, b.mj);
                            if (ste == 0.0) continue;
                            t += double((q % 2) ? -1 : 1) * n1[q1 + 1] *
                                 (cd(0, -1) * std::sqrt(2.0)) *
                                 clebsch_gordan(1, q1, 1, q2, 1, -q) * ste;
                        }
                    h(i, k) += cd(0, -1) * c_so * (a.energy - b.energy) * r1 * t;
                }
            } else if (dl == 0 || dl == 2) {
                const double r2 = a0 * a0 * detail::radial_moment_sym(wf(a), wf(b), 2);
                const double same = (a.l == b.l && std::abs(a.j - b.j) < 1e-9 &&
                                     std::abs(a.mj - b.mj) < 1e-9)
                                        ? 1.0
                                        : 0.0;
                // (r.nhat)^2 = r^2 [1/3 + (2/3) sum_q (-1)^q C^2_q(rhat) C^2_{-q}(nhat)]
                cd p2 = 0.0;
                for (int q = -2; q <= 2; ++q)
                    p2 += double((q % 2) ? -1 : 1) *
                          tensor_element_coupled(a.l, a.j, a.mj, 2, q, b.l, b.j, b.mj) *
                          n2[2 - q];
                h(i, k) += c_r2 * r2 * same;
                h(i, k) += c_quad * r2 * (same / 3.0 + 2.0 / 3.0 * p2);
            }
        }
    }
    return h;
}

} // namespace rydion
