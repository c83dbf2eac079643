#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

#include "rydion/constants.hpp"
#include "rydion/species.hpp"

namespace rydion {

struct RydbergState {
    int n = 0;
    int l = 0;
    double j = 0.5;
    double mj = 0.5;
    double energy = 0.0; // J, < 0
    bool hydrogenic_fallback = false; // defect missing from the table

    RydbergState() = default;
    RydbergState(int n_, int l_, double j_, double mj_, double energy_ = -1.0,
                 bool fallback = false)
        : n(n_), l(l_), j(j_), mj(mj_), energy(energy_), hydrogenic_fallback(fallback) {
        if (l < 0 || l >= n) throw std::invalid_argument("need 0 <= l < n");
        if (std::abs(std::abs(j - l) - 0.5) > 1e-9)
            throw std::invalid_argument("need |j - l| = 1/2");
        if (std::abs(mj) > j + 1e-9) throw std::invalid_argument("need |mj| <= j");
    }

    double effective_n(const Species& sp) const {
        return n - sp.defects.defect(n, l, j);
    }
};

// E = -h c R_species / (n - delta_{nlj})^2
inline double defect_energy(const Species& sp, int n, int l, double j) {
    if (l < 0 || l >= n) throw std::invalid_argument("need 0 <= l < n");
    const double nstar = n - sp.defects.defect(n, l, j);
    return -constants::h_planck * constants::c_light * sp.rydberg_constant() /
           (nstar * nstar);
}

inline RydbergState make_state(const Species& sp, int n, int l, double j, double mj) {
    return RydbergState(n, l, j, mj, defect_energy(sp, n, l, j),
                        !sp.defects.has(l, j));
}

struct RadialWavefunction {
    std::vector<double> grid;   // r in a0, ascending
    std::vector<double> values; // u(r) = r R(r), normalized: int u^2 dr = 1
    RydbergState state;
    double norm_check = 0.0; // norm before final rescale

    int node_count() const {
        const double thresh =
            1e-6 * *std::max_element(values.begin(), values.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
        int nodes = 0;
        double prev = 0.0;
        for (double v : values) {
            if (std::abs(v) < std::abs(thresh)) continue;
            if (prev != 0.0 && v * prev < 0.0) ++nodes;
            prev = v;
        }
        return nodes;
    }
};

class NumerovError : public std::runtime_error {
public:
    NumerovError(const std::string& msg, int nodes) : std::runtime_error(msg), nodes_found(nodes) {}
    int nodes_found;
};

struct NumerovSpec {
    double step = 0.005; // in sqrt(a0); halved until converged
    double tol = 1e-6;
    int max_halvings = 3;
};

namespace detail {

// One inward Numerov sweep for w'' = G(x) w on a uniform sqrt(r) grid,
// with G(x) = [4 l(l+1) + 3/4]/x^2 - 8 mu - 8 mu E x^2 (atomic units,
// mu = reduced mass in m_e, E in hartree). Returns u(r) on the r = x^2 grid.
inline RadialWavefunction numerov_sweep(const RydbergState& st, const Species& sp,
                                        double h) {
    const double mu = sp.reduced_mass() / constants::m_electron;
    const double nstar = st.effective_n(sp);
    const double energy_au = st.energy / constants::hartree;
    const double r_out = 2.0 * st.n * (st.n + 15.0);
    const double lph = st.l + 0.5;
    const double rad = nstar * nstar - lph * lph;
    const double r_in = rad > 0.0
                            ? std::max(1e-3, nstar * (nstar - std::sqrt(rad)))
                            : std::max(1e-3, 0.5 * nstar);
    const double x_out = std::sqrt(r_out);
    double x_in = std::sqrt(r_in);

    const double cl = 4.0 * st.l * (st.l + 1) + 0.75;
    auto G = [&](double x) {
        const double x2 = x * x;
        return cl / x2 - 8.0 * mu - 8.0 * mu * energy_au * x2;
    };

    // Extend ~4 Airy widths below the inner turning point: for near-circular
    // states the amplitude there is O(max), and truncating at the turning
    // point itself loses a percent-level piece of the norm.
    const double gp =
        std::abs(-2.0 * cl / (x_in * x_in * x_in) - 16.0 * mu * energy_au * x_in);
    if (gp > 0.0)
        x_in = std::max(std::sqrt(1e-3),
                        x_in - std::min(4.0 / std::cbrt(gp), 0.6 * x_in));
    const int npts = static_cast<int>(std::ceil((x_out - x_in) / h)) + 1;

    std::vector<double> x(npts), w(npts);
    for (int i = 0; i < npts; ++i) x[i] = x_out - i * h;
    w[0] = 1e-12;
    w[1] = 2e-12;
    const double h2 = h * h;
    for (int i = 1; i + 1 < npts; ++i) {
        const double gm = G(x[i - 1]), g0 = G(x[i]), gp = G(x[i + 1]);
        w[i + 1] = (2.0 * w[i] * (1.0 + 5.0 * h2 * g0 / 12.0) -
                    w[i - 1] * (1.0 - h2 * gm / 12.0)) /
                   (1.0 - h2 * gp / 12.0);
        if (std::abs(w[i + 1]) > 1e200) { // rescale to avoid overflow
            for (int k = 0; k <= i + 1; ++k) w[k] *= 1e-100;
        }
    }

    RadialWavefunction out;
    out.state = st;
    out.grid.resize(npts);
    out.values.resize(npts);
    for (int i = 0; i < npts; ++i) {
        const int k = npts - 1 - i; // ascending r
        out.grid[i] = x[k] * x[k];
        out.values[i] = w[k] * std::sqrt(x[k]);
    }
    // trapezoid norm in r
    double norm = 0.0;
    for (int i = 0; i + 1 < npts; ++i) {
        const double dr = out.grid[i + 1] - out.grid[i];
        norm += 0.5 * dr * (out.values[i] * out.values[i] +
                            out.values[i + 1] * out.values[i + 1]);
    }
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumerovError("Numerov normalization failed", -1);
    const double s = 1.0 / std::sqrt(norm);
    for (double& v : out.values) v *= s;
    out.norm_check = norm;
    return out;
}

} // namespace detail

// Inward Numerov integration at the quantum-defect energy with a pure -1/r
// potential, on a grid uniform in sqrt(r). The step is halved until the
// wavefunction is stable to spec.tol; the node count must equal n - l - 1.
inline RadialWavefunction numerov_radial(const RydbergState& st, const Species& sp,
                                         const NumerovSpec& spec = {}) {
    double h = spec.step;
    RadialWavefunction cur = detail::numerov_sweep(st, sp, h);
    for (int iter = 0; iter < spec.max_halvings; ++iter) {
        RadialWavefunction fine = detail::numerov_sweep(st, sp, h / 2.0);
        // compare on the coarse grid (fine grid contains every other point offsets)
        double maxdiff = 0.0;
        for (std::size_t i = 0; i < cur.grid.size(); i += 7) {
            // locate r in fine grid by bisection
            const auto& g = fine.grid;
            auto it = std::lower_bound(g.begin(), g.end(), cur.grid[i]);
            if (it == g.begin() || it == g.end()) continue;
            const std::size_t k = it - g.begin();
            const double t = (cur.grid[i] - g[k - 1]) / (g[k] - g[k - 1]);
            const double v = fine.values[k - 1] * (1 - t) + fine.values[k] * t;
            maxdiff = std::max(maxdiff, std::abs(v - cur.values[i]));
        }
        if (maxdiff < spec.tol) break;
        cur = std::move(fine);
        h /= 2.0;
    }
    const int expected = st.n - st.l - 1;
    const int nodes = cur.node_count();
    if (nodes != expected)
        throw NumerovError("Numerov node count " + std::to_string(nodes) +
                               " != " + std::to_string(expected) + " for n=" +
                               std::to_string(st.n) + " l=" + std::to_string(st.l),
                           nodes);
    return cur;
}

// int u1(r) r^k u2(r) dr on the overlap of the two grids (a0^k units).
inline double radial_moment(const RadialWavefunction& w1,
                            const RadialWavefunction& w2, int k) {
    const double lo = std::max(w1.grid.front(), w2.grid.front());
    const double hi = std::min(w1.grid.back(), w2.grid.back());
    if (hi <= lo) return 0.0;
    // integrate on w1's grid, interpolating w2; evaluation points are
    // monotone, so a rolling segment index replaces a per-point search
    std::size_t seg = 1;
    auto interp2 = [&](double r) {
        const auto& g = w2.grid;
        while (seg + 1 < g.size() && g[seg] < r) ++seg;
        if (r > g[seg] * (1.0 + 1e-12))
            throw std::runtime_error("radial_moment: interpolation out of range");
        const double t = (r - g[seg - 1]) / (g[seg] - g[seg - 1]);
        return w2.values[seg - 1] * (1 - t) + w2.values[seg] * t;
    };
    double acc = 0.0;
    double prev_r = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < w1.grid.size(); ++i) {
        const double r = w1.grid[i];
        if (r < lo || r > hi) continue;
        const double f = w1.values[i] * std::pow(r, k) * interp2(r);
        if (have_prev) acc += 0.5 * (r - prev_r) * (f + prev_f);
        prev_r = r;
        prev_f = f;
        have_prev = true;
    }
    return acc;
}

// -------------------------- disk cache ------------------------------------
// Record: 8-byte magic, u32 version, state descriptor, u64 count, then the
// grid and value arrays as little-endian f64. Writes go to a temp file that
// is atomically renamed into place.
class WavefunctionCache {
public:
    WavefunctionCache() = default;
    explicit WavefunctionCache(std::filesystem::path dir, bool enabled = true)
        : dir_(std::move(dir)), enabled_(enabled) {
        if (enabled_) std::filesystem::create_directories(dir_);
    }

    bool enabled() const { return enabled_; }

    RadialWavefunction get(const Species& sp, const RydbergState& st,
                           const NumerovSpec& spec = {}) {
        if (!enabled_) return numerov_radial(st, sp, spec);
        const auto path = file_path(sp, st, spec);
        if (auto cached = read_file(path, st)) return *cached;
        RadialWavefunction wf = numerov_radial(st, sp, spec);
        write_file(path, wf);
        return wf;
    }

private:
    static constexpr char kMagic[8] = {'R', 'Y', 'D', 'W', 'F', '0', '0', '1'};
    static constexpr std::uint32_t kVersion = 1;

    std::filesystem::path file_path(const Species& sp, const RydbergState& st,
                                    const NumerovSpec& spec) const {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s_n%d_l%d_2j%d_h%.6g.wf",
                      sp.name.c_str(), st.n, st.l,
                      static_cast<int>(std::lround(2 * st.j)), spec.step);
        return dir_ / buf;
    }

    static std::optional<RadialWavefunction> read_file(const std::filesystem::path& p,
                                                       const RydbergState& st) {
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        char magic[8];
        std::uint32_t version = 0;
        in.read(magic, 8);
        in.read(reinterpret_cast<char*>(&version), 4);
        if (!in || std::memcmp(magic, kMagic, 8) != 0 || version != kVersion)
            return std::nullopt;
        double energy = 0, norm_check = 0;
        std::uint64_t count = 0;
        in.read(reinterpret_cast<char*>(&energy), 8);
        in.read(reinterpret_cast<char*>(&norm_check), 8);
        in.read(reinterpret_cast<char*>(&count), 8);
        if (!in || count == 0 || count > (1ull << 32)) return std::nullopt;
        RadialWavefunction wf;
        wf.state = st;
        wf.state.energy = energy;
        wf.norm_check = norm_check;
        wf.grid.resize(count);
        wf.values.resize(count);
        in.read(reinterpret_cast<char*>(wf.grid.data()), count * 8);
        in.read(reinterpret_cast<char*>(wf.values.data()), count * 8);
        if (!in) return std::nullopt;
        return wf;
    }

    void write_file(const std::filesystem::path& p, const RadialWavefunction& wf) const {
        static std::atomic<unsigned> counter{0};
        auto tmp = p;
        tmp += ".tmp" + std::to_string(::getpid()) + "_" +
               std::to_string(counter.fetch_add(1));
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) return; // cache is best-effort
            out.write(kMagic, 8);
            out.write(reinterpret_cast<const char*>(&kVersion), 4);
            out.write(reinterpret_cast<const char*>(&wf.state.energy), 8);
            out.write(reinterpret_cast<const char*>(&wf.norm_check), 8);
            const std::uint64_t count = wf.grid.size();
            out.write(reinterpret_cast<const char*>(&count), 8);
            out.write(reinterpret_cast<const char*>(wf.grid.data()), count * 8);
            out.write(reinterpret_cast<const char*>(wf.values.data()), count * 8);
        }
        std::error_code ec;
        std::filesystem::rename(tmp, p, ec);
        if (ec) std::filesystem::remove(tmp, ec);
    }

    std::filesystem::path dir_;
    bool enabled_ = false;
};

} // namespace rydion
