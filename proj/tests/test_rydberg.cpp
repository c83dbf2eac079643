#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rydion/constants.hpp"
#include "rydion/rydberg.hpp"

using namespace rydion;
namespace C = rydion::constants;

TEST_SUITE_BEGIN("rydberg");

namespace {
const Species kH = make_hydrogenic();
const Species kLi = make_li6();
} // namespace

namespace {

// Simpson quadrature on [a, b]
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
    double acc = f(a) + f(b);
    const double h = (b - a) / n;
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// compare a numerical wavefunction against a closed form, with the closed
// form renormalized on the same truncated radial domain
template <class F>
double shape_error(const RadialWavefunction& w, F u_exact) {
    const double norm = std::sqrt(simpson(
        [&](double r) { return u_exact(r) * u_exact(r); }, w.grid.front(),
        w.grid.back()));
    double maxerr = 0.0;
    for (std::size_t i = 0; i < w.grid.size(); ++i)
        maxerr = std::max(maxerr, std::abs(std::abs(w.values[i]) -
                                           u_exact(w.grid[i]) / norm));
    return maxerr;
}

} // namespace

TEST_CASE("hydrogen 1s and 2p wavefunctions in closed form") {
    // u_{10}(r) = 2 r exp(-r), u_{21}(r) = r^2 exp(-r/2) / (2 sqrt(6))
    const auto w10 = numerov_radial(make_state(kH, 1, 0, 0.5, 0.5), kH);
    CHECK(shape_error(w10, [](double r) { return 2.0 * r * std::exp(-r); }) <
          1e-4);
    const auto w21 = numerov_radial(make_state(kH, 2, 1, 1.5, 0.5), kH);
    CHECK(shape_error(w21, [](double r) {
              return r * r * std::exp(-r / 2.0) / (2.0 * std::sqrt(6.0));
          }) < 1e-4);
}

TEST_CASE("hydrogen expectation values <r> and <r^2>") {
    // <r> = (3n^2 - l(l+1))/2, <r^2> = n^2 (5n^2 + 1 - 3l(l+1))/2
    for (auto [n, l] : {std::pair{10, 2}, {30, 0}, {30, 1}, {25, 24}}) {
        const auto w = numerov_radial(make_state(kH, n, l, l + 0.5, 0.5), kH);
        const double r1 = radial_moment(w, w, 1);
        const double r2 = radial_moment(w, w, 2);
        CHECK(r1 == doctest::Approx((3.0 * n * n - l * (l + 1)) / 2.0).epsilon(1e-4));
        CHECK(r2 == doctest::Approx(n * n * (5.0 * n * n + 1 - 3.0 * l * (l + 1)) / 2.0)
                        .epsilon(2e-4));
    }
}

TEST_CASE("hydrogen 1s-2p dipole moment") {
    const auto w10 = numerov_radial(make_state(kH, 1, 0, 0.5, 0.5), kH);
    const auto w21 = numerov_radial(make_state(kH, 2, 1, 1.5, 0.5), kH);
    // closed-form integrand u21 r u10 = r^4 exp(-3r/2) / sqrt(6), evaluated
    // on the same truncated overlap as the numerical grids; the full-axis
    // value is 128 sqrt(6)/243 = 1.2903
    const double lo = std::max(w10.grid.front(), w21.grid.front());
    const double hi = std::min(w10.grid.back(), w21.grid.back());
    const double ref = simpson(
        [](double r) {
            return std::pow(r, 4) * std::exp(-1.5 * r) / std::sqrt(6.0);
        },
        lo, hi);
    CHECK(std::abs(radial_moment(w21, w10, 1)) ==
          doctest::Approx(ref).epsilon(3e-3));
    CHECK(ref == doctest::Approx(128.0 * std::sqrt(6.0) / 243.0).epsilon(0.06));
}

TEST_CASE("norm and node count") {
    for (auto [n, l] : {std::pair{30, 0}, {30, 1}, {28, 2}}) {
        const auto w = numerov_radial(make_state(kLi, n, l, l + 0.5, 0.5), kLi);
        CHECK(w.node_count() == n - l - 1);
        double norm = 0.0;
        for (std::size_t i = 0; i + 1 < w.grid.size(); ++i)
            norm += 0.5 * (w.grid[i + 1] - w.grid[i]) *
                    (w.values[i] * w.values[i] + w.values[i + 1] * w.values[i + 1]);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("node-count mismatch raises") {
    // wavefunction integrated at the wrong energy picks up the wrong number
    // of oscillations
    RydbergState st(10, 0, 0.5, 0.5, defect_energy(kH, 12, 0, 0.5));
    CHECK_THROWS_AS(numerov_radial(st, kH), NumerovError);
}

TEST_CASE("lithium 30s dipole moments are near-hydrogenic at high n") {
    const auto ws = numerov_radial(make_state(kLi, 30, 0, 0.5, 0.5), kLi);
    const auto wp = numerov_radial(make_state(kLi, 30, 1, 1.5, 0.5), kLi);
    const double d = std::abs(radial_moment(ws, wp, 1));
    // strongest partner carries most of the n*^2 scale oscillator strength
    const double nstar = 30 - kLi.defects.defect(30, 0, 0.5);
    CHECK(d / (nstar * nstar) > 0.8);
    CHECK(d / (nstar * nstar) < 1.6);
}

TEST_CASE("disk cache round trip and invalidation") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "rydion_cache_test";
    fs::remove_all(dir);
    WavefunctionCache cache(dir);
    const auto st = make_state(kLi, 30, 0, 0.5, 0.5);
    const auto a = cache.get(kLi, st);
    CHECK(fs::exists(dir));
    int files = 0;
    for (auto& e : fs::directory_iterator(dir)) (void)e, ++files;
    CHECK(files == 1);
    const auto b = cache.get(kLi, st); // served from disk
    REQUIRE(a.grid.size() == b.grid.size());
    for (std::size_t i = 0; i < a.grid.size(); i += 97) {
        CHECK(a.grid[i] == b.grid[i]);
        CHECK(a.values[i] == b.values[i]);
    }
    // corrupt the record: bad magic must force a clean recompute
    for (auto& e : fs::directory_iterator(dir)) {
        std::ofstream f(e.path(), std::ios::binary);
        f << "GARBAGE!";
    }
    const auto c = cache.get(kLi, st);
    CHECK(c.grid.size() == a.grid.size());
    CHECK(c.values[a.grid.size() / 2] ==
          doctest::Approx(a.values[a.grid.size() / 2]).epsilon(1e-12));
    // disabled cache bypasses the directory entirely
    fs::remove_all(dir);
    WavefunctionCache off(dir, false);
    (void)off.get(kLi, st);
    CHECK_FALSE(fs::exists(dir));
    fs::remove_all(dir);
}

TEST_SUITE_END();
