#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <vector>

#include "rydion/bo.hpp"
#include "rydion/constants.hpp"

using namespace rydion;
namespace C = rydion::constants;

TEST_SUITE_BEGIN("bo");

namespace {

WavefunctionCache& shared_cache() {
    static WavefunctionCache cache(std::filesystem::temp_directory_path() /
                                   "rydion_wf_cache");
    return cache;
}

const Species kLi = make_li6();
const Species kYb = make_yb171_ion();

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, i / double(n - 1));
    return g;
}

// eigenvalue of the curve passing through the 30S asymptote at a single R
double eigen_near(const Eigen::MatrixXd& h, double e_ref) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    double best = es.eigenvalues()(0);
    for (int i = 1; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - e_ref) < std::abs(best - e_ref))
            best = es.eigenvalues()(i);
    return best;
}

} // namespace

TEST_CASE("interaction vanishes at large separation") {
    BOBuilder b(kLi, kYb, BasisSpec(29, 31, 2), &shared_cache());
    const auto m = b.build_interaction(100e-6);
    const int n = static_cast<int>(m.basis.size());
    // off-diagonal couplings are set by the largest dipole element (~1100 e a0),
    // h * 1.3 MHz at 100 um and dropping as R^-2
    auto max_offdiag = [&](double R) {
        const auto t = b.term_matrices(R);
        double offdiag = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (i != k) offdiag = std::max(offdiag, std::abs(t.dipole(i, k)));
        return offdiag;
    };
    CHECK(max_offdiag(100e-6) < C::h_planck * 2e6);
    CHECK(max_offdiag(4e-3) < C::h_planck * 1e3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix, Eigen::EigenvaluesOnly);
    Eigen::VectorXd e0 = b.asymptotic_energies();
    std::sort(e0.data(), e0.data() + n);
    for (int i = 0; i < n; ++i)
        CHECK(std::abs(es.eigenvalues()(i) - e0(i)) < C::h_planck * 1e3);
}

TEST_CASE("matrix is symmetric and R must be positive") {
    BOBuilder b(kLi, kYb, BasisSpec(29, 31, 2), &shared_cache());
    const auto m = b.build_interaction(1e-6);
    const double scale = m.matrix.cwiseAbs().maxCoeff();
    CHECK((m.matrix - m.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale);
    CHECK_THROWS_AS(b.build_interaction(0.0), std::invalid_argument);
    CHECK_THROWS_AS(b.build_interaction(-1e-6), std::invalid_argument);
}

TEST_CASE("quadrupole term scales as R^-3") {
    BOBuilder b(kLi, kYb, BasisSpec(29, 31, 3), &shared_cache());
    const double R = 1.2e-6;
    const auto t1 = b.term_matrices(R);
    const auto t2 = b.term_matrices(2.0 * R);
    const double m1 = t1.quadrupole.cwiseAbs().maxCoeff();
    const double m2 = t2.quadrupole.cwiseAbs().maxCoeff();
    CHECK(m1 / m2 == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("full diagonalization approaches the -C4/R^4 curve") {
    const BasisSpec spec(26, 34, 3);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    const auto st = make_state(kLi, 30, 0, 0.5, 0.5);
    const double c4 = c4_second_order(st, kLi, spec, shared_cache());
    std::vector<double> rel;
    for (double R : {1.0e-6, 1.25e-6, 1.5e-6, 2.0e-6, 2.5e-6, 3.0e-6}) {
        const double full = eigen_near(b.build_interaction(R).matrix, st.energy) -
                            st.energy;
        const double pt = -c4 / (R * R * R * R);
        rel.push_back(std::abs(full - pt) / std::abs(pt));
    }
    CHECK(rel[2] < 0.05); // 1.5 um
    CHECK(rel[3] < 0.02); // 2.0 um
    // |full - PT| relative gap shrinks monotonically with R
    for (std::size_t i = 1; i < rel.size(); ++i) CHECK(rel[i] < rel[i - 1]);
}

TEST_CASE("C4 from the perturbative path") {
    const BasisSpec spec(25, 35, 2);
    const auto st = make_state(kLi, 30, 0, 0.5, 0.5);
    const double alpha = polarizability(st, kLi, spec, shared_cache());
    const double c4 = c4_second_order(st, kLi, spec, shared_cache());
    const double ekc = C::e_charge * C::k_coulomb;
    CHECK(c4 == doctest::Approx(alpha * ekc * ekc / 2.0).epsilon(1e-12));
    // characteristic dressing radius for Delta0 = 2 pi 1 GHz is about 1 um
    const double rw = std::pow(c4 / (C::hbar * C::two_pi * 1e9), 0.25);
    CHECK(rw / 1e-6 == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("rotational invariance: x axis vs z axis") {
    const BasisSpec spec(29, 31, 2);
    const auto basis = enumerate_basis_all_mj(kLi, spec);
    const double R = 1.0e-6;
    const auto hz = build_interaction_any_axis(R, {0, 0, 1}, basis, kLi, kYb,
                                               shared_cache());
    const auto hx = build_interaction_any_axis(R, {1, 0, 0}, basis, kLi, kYb,
                                               shared_cache());
    const double scale = hz.cwiseAbs().maxCoeff();
    CHECK((hz - hz.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * scale);
    CHECK((hx - hx.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ez(hz, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ex(hx, Eigen::EigenvaluesOnly);
    for (int i = 0; i < ez.eigenvalues().size(); ++i)
        CHECK(std::abs(ez.eigenvalues()(i) - ex.eigenvalues()(i)) <
              1e-10 * std::abs(ez.eigenvalues()(i)));
}

TEST_CASE("production z-axis block agrees with the generic assembly") {
    const BasisSpec spec(29, 31, 2);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    const double R = 1.0e-6;
    const auto prod = b.build_interaction(R);
    const auto basis = enumerate_basis_all_mj(kLi, spec);
    const auto hz = build_interaction_any_axis(R, {0, 0, 1}, basis, kLi, kYb,
                                               shared_cache());
    // the z-axis matrix is block diagonal in mj; every production eigenvalue
    // must appear in the full spectrum
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(prod.matrix,
                                                      Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ez(hz, Eigen::EigenvaluesOnly);
    for (int i = 0; i < ep.eigenvalues().size(); ++i) {
        double gap = 1e300;
        for (int k = 0; k < ez.eigenvalues().size(); ++k)
            gap = std::min(gap, std::abs(ez.eigenvalues()(k) - ep.eigenvalues()(i)));
        CHECK(gap < 1e-10 * std::abs(ep.eigenvalues()(i)));
    }
}

TEST_CASE("mj = +1/2 and -1/2 blocks are degenerate") {
    const BasisSpec spec(29, 31, 2);
    BOBuilder bp(kLi, kYb, spec, &shared_cache(), +0.5);
    BOBuilder bm(kLi, kYb, spec, &shared_cache(), -0.5);
    for (double R : {0.8e-6, 2.0e-6}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(
            bp.build_interaction(R).matrix, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(
            bm.build_interaction(R).matrix, Eigen::EigenvaluesOnly);
        for (int i = 0; i < ep.eigenvalues().size(); ++i)
            CHECK(std::abs(ep.eigenvalues()(i) - em.eigenvalues()(i)) <
                  1e-12 * std::abs(ep.eigenvalues()(i)));
    }
}

TEST_CASE("30S curve isolation and asymptotic spacing") {
    // full azimuthal range so the degenerate manifolds bracket the 30S curve
    const BasisSpec spec(27, 33, 32);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    const auto grid = log_grid(0.5e-6, 4.0e-6, 20);
    const auto curves = diagonalize_curves(b, grid);
    const int ns = curves.find(30, 0, 0.5);
    const int np = curves.find(30, 1, 1.5);
    const int nr = static_cast<int>(grid.size());
    // asymptotic 30S-30P splitting ~ 87.7 GHz
    const double gap_sp =
        (curves.energies(np, nr - 1) - curves.energies(ns, nr - 1)) / C::h_planck;
    CHECK(gap_sp / 1e9 == doctest::Approx(87.7).epsilon(1.0 / 87.7));
    // the 30S curve stays > h * 1 GHz away from every other curve
    for (int ir = 0; ir < nr; ++ir) {
        double min_gap = 1e300;
        for (int k = 0; k < curves.energies.rows(); ++k)
            if (k != ns)
                min_gap = std::min(min_gap,
                                   std::abs(curves.energies(k, ir) -
                                            curves.energies(ns, ir)));
        CHECK(min_gap > C::h_planck * 1e9);
    }
    // curve is attractive and deepens monotonically toward small R
    for (int ir = 0; ir + 1 < nr; ++ir)
        CHECK(curves.energies(ns, ir) < curves.energies(ns, ir + 1));
    CHECK(curves.energies(ns, nr - 1) < make_state(kLi, 30, 0, 0.5, 0.5).energy);
}

TEST_CASE("curves settle onto defect energies far out") {
    const BasisSpec spec(29, 31, 2);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    const auto curves = diagonalize_curves(b, {50e-6, 100e-6});
    for (int k = 0; k < curves.energies.rows(); ++k) {
        const auto& lab = curves.labels[k];
        const double e0 = defect_energy(kLi, lab.n, lab.l, lab.j);
        CHECK(std::abs(curves.energies(k, 1) - e0) < C::h_planck * 1e6);
    }
}

TEST_CASE("trap snapshot: zero-amplitude axial field barely shifts curves") {
    const BasisSpec spec(29, 31, 6);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    // a pure rf trap has no field at all at the zero-amplitude phase
    const auto rf = TrapParams::rf_only(C::two_pi * 2.5e6, 0.28);
    const auto free1 = b.build_interaction(1.5e-6);
    const auto snap1 =
        add_trap_snapshot(free1, rf, RfPhase::zero, kYb, TrapAxis::axial);
    CHECK((snap1.matrix - free1.matrix).cwiseAbs().maxCoeff() == 0.0);
    // weak static confinement: the isolated 30S curve barely moves (the
    // leading effect is a cross term between the ion-dipole admixture and
    // the trap field, well below 1 MHz at 50 kHz confinement)
    const auto trap = TrapParams::axial(C::two_pi * 50e3, C::two_pi * 2.5e6);
    const double e_ref = make_state(kLi, 30, 0, 0.5, 0.5).energy;
    for (double R : {1.0e-6, 2.0e-6}) {
        const auto free = b.build_interaction(R);
        const auto snap =
            add_trap_snapshot(free, trap, RfPhase::zero, kYb, TrapAxis::axial);
        CHECK(std::abs(eigen_near(snap.matrix, e_ref) -
                       eigen_near(free.matrix, e_ref)) < C::h_planck * 1e6);
    }
}

TEST_CASE("trap snapshot: rf deviation grows with distance") {
    // the rf field grows linearly with distance from the trap center, so the
    // spectrum deviation (dominated by the linear Stark fan of the degenerate
    // high-l manifolds) grows with R
    const BasisSpec spec(29, 31, 6);
    BOBuilder b(kLi, kYb, spec, &shared_cache());
    const auto trap = TrapParams::rf_only(C::two_pi * 2.5e6, 0.28);
    const auto st = make_state(kLi, 30, 0, 0.5, 0.5);
    double prev = 0.0;
    for (double R : {1.0e-6, 2.0e-6, 3.0e-6}) {
        const auto free = b.build_interaction(R);
        const auto snap = add_trap_snapshot(free, trap, RfPhase::max_plus, kYb,
                                            TrapAxis::radial);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(free.matrix,
                                                          Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(snap.matrix,
                                                          Eigen::EigenvaluesOnly);
        const double dev =
            (e0.eigenvalues() - e1.eigenvalues()).cwiseAbs().maxCoeff();
        CHECK(dev > prev);
        prev = dev;
        // the isolated 30S curve is also perturbed, if far less
        CHECK(std::abs(eigen_near(snap.matrix, st.energy) -
                       eigen_near(free.matrix, st.energy)) > 0.0);
        // snapshot cannot be applied twice
        CHECK_THROWS_AS(
            add_trap_snapshot(snap, trap, RfPhase::max_plus, kYb, TrapAxis::radial),
            std::invalid_argument);
    }
    CHECK(prev > C::h_planck * 1e6);
}

TEST_CASE("trap snapshot: azimuthal cutoff is converged") {
    const auto trap = TrapParams::rf_only(C::two_pi * 2.5e6, 0.28);
    const auto st = make_state(kLi, 30, 0, 0.5, 0.5);
    const double R = 1.0e-6;
    double val[2];
    int idx = 0;
    for (int lmax : {6, 12}) {
        BOBuilder b(kLi, kYb, BasisSpec(28, 32, lmax), &shared_cache());
        const auto snap = add_trap_snapshot(b.build_interaction(R), trap,
                                            RfPhase::max_plus, kYb);
        val[idx++] = eigen_near(snap.matrix, st.energy);
    }
    const double depth = std::abs(val[1] - st.energy);
    CHECK(std::abs(val[0] - val[1]) < 0.01 * depth);
}

TEST_SUITE_END();
