#pragma once

// Result persistence and the experiment dispatcher behind the CLI.  One run
// is one process: the configured experiment writes its CSV/JSON outputs into
// the output directory and a manifest (config hash, code version, per-output
// checksums, convergence diagnostics) is written last, so a complete manifest
// implies a complete run.  The pipeline is deterministic: identical configs
// yield byte-identical data files.

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydion/bo.hpp"
#include "rydion/config.hpp"
#include "rydion/constants.hpp"
#include "rydion/dressed.hpp"
#include "rydion/gate.hpp"
#include "rydion/micromotion.hpp"

namespace rydion {

inline constexpr const char* code_version = "rydion 0.1.0";

// ---------------------------------------------------------------------------
// Deterministic formatting and checksums.

namespace detail {

// Shortest decimal form that round-trips a double; C locale, no grouping.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v)
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("need at least 2 grid points");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Run context: collects output files as they are written and emits the
// manifest last.

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::filesystem::path cache_dir =
        std::filesystem::temp_directory_path() / "rydion_wf_cache";
    bool use_cache = true;
    int threads = 1;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    double wall_time_s = 0.0;
    std::map<std::string, std::string> outputs; // file name -> checksum
    nlohmann::json diagnostics;
};

class RunContext {
public:
    RunContext(const ExperimentConfig& cfg, const RunOptions& opt)
        : cfg_(cfg), opt_(opt), start_(std::chrono::steady_clock::now()),
          cache_(opt.cache_dir, opt.use_cache) {
        std::filesystem::create_directories(opt_.out_dir);
        manifest_.config_hash = detail::hex64(detail::fnv1a64(cfg.serialize()));
        manifest_.version = code_version;
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    const RunOptions& options() const { return opt_; }
    WavefunctionCache& cache() { return cache_; }
    nlohmann::json& diagnostics() { return manifest_.diagnostics; }

    void write_file(const std::string& name, const std::string& bytes) {
        std::ofstream out(opt_.out_dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + name);
        out << bytes;
        manifest_.outputs[name] = detail::hex64(detail::fnv1a64(bytes));
    }

    void write_json(const std::string& name, const nlohmann::json& j) {
        write_file(name, j.dump(2) + "\n");
    }

    // Column-major CSV: header row, comma separated, decimal point.
    void write_csv(const std::string& name,
                   const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns) {
        std::string buf = csv_header(header);
        const std::size_t rows = columns.empty() ? 0 : columns[0].size();
        for (const auto& c : columns)
            if (c.size() != rows)
                throw std::logic_error("ragged CSV columns in " + name);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (c) buf += ',';
                buf += detail::fmt(columns[c][r]);
            }
            buf += '\n';
        }
        write_file(name, buf);
    }

    RunManifest finish() {
        manifest_.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                .count();
        nlohmann::json j;
        j["config"] = cfg_.values;
        j["config_hash"] = manifest_.config_hash;
        j["code_version"] = manifest_.version;
        j["wall_time_s"] = manifest_.wall_time_s;
        j["outputs"] = manifest_.outputs;
        j["diagnostics"] = manifest_.diagnostics;
        std::ofstream out(opt_.out_dir / "manifest.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest.json");
        out << j.dump(2) << "\n";
        return manifest_;
    }

    static std::string csv_header(const std::vector<std::string>& header) {
        std::string buf;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c) buf += ',';
            buf += header[c];
        }
        buf += '\n';
        return buf;
    }

private:
    ExperimentConfig cfg_;
    RunOptions opt_;
    std::chrono::steady_clock::time_point start_;
    WavefunctionCache cache_;
    RunManifest manifest_;
};

// ---------------------------------------------------------------------------
// Shared assembly helpers.

namespace detail {

inline RfPhase parse_rf_phase(const std::string& s) {
    if (s == "plus") return RfPhase::max_plus;
    if (s == "zero") return RfPhase::zero;
    if (s == "minus") return RfPhase::max_minus;
    throw ConfigError("key \"rf_phase\": expected plus, zero or minus");
}

inline Sector parse_sector(const std::string& s) {
    for (int k = 0; k < 4; ++k)
        if (s == sector_label(static_cast<Sector>(k))) return static_cast<Sector>(k);
    throw ConfigError("key \"sector\": expected dd, du, ud or uu");
}

// Dressed 30S working point of a gate-style config: C4 from second-order
// perturbation theory in the configured basis.
struct DressedSetup {
    Species atom, ion;
    RydbergState state;
    double c4 = 0.0;
    DressingParams dp;
    AdiabaticPotential pot;
};

inline DressedSetup dressed_setup(const ExperimentConfig& c, WavefunctionCache& cache,
                                  int l = 0, double j = 0.5) {
    DressedSetup s;
    s.atom = c.atom();
    s.ion = make_yb171_ion();
    s.state = make_state(s.atom, c.integer("n"), l, j, 0.5);
    const BasisSpec basis(c.integer("basis_n_min"), c.integer("basis_n_max"),
                          c.integer("basis_l_max"));
    s.c4 = c4_second_order(s.state, s.atom, basis, cache);
    s.dp = DressingParams{c.rad("Omega_MHz"), c.rad("Delta0_GHz"), 0.0, 0.0, s.state};
    s.pot = adiabatic_potential(s.dp, s.c4);
    return s;
}

inline GateParams gate_from_config(const ExperimentConfig& c, WavefunctionCache& cache,
                                   DressedSetup& setup) {
    setup = dressed_setup(c, cache);
    double d = c.meters("d_um");
    if (d == 0.0) d = force_optimum(setup.pot);
    const auto no_fields = TrapParams::rf_only(c.rad("Omega_rf_MHz"), 0.0);
    const auto tc = taylor3(d, 0.0, setup.dp, setup.pot, no_fields, setup.ion);
    GateParams g = gate_params(tc, setup.pot, setup.atom, setup.ion,
                               c.rad("omega_i_kHz"), c.rad("omega_a_kHz"),
                               constants::two_pi * 1e3, 0.0);
    g.eta_Omega_SM = std::abs(g.v[1][0]) * g.ell_i / (2.0 * constants::hbar);
    const double delta = c.rad("delta_kHz");
    g.delta = delta == 0.0 ? g.eta_Omega_SM : delta;
    g.n_i = c.integer("n_fock_i");
    g.n_a = c.integer("n_fock_a");
    g.steps_per_period = c.integer("steps_per_period");
    g.validate();
    return g;
}

inline MMParams mm_from_config(const ExperimentConfig& c, WavefunctionCache& cache,
                               DressedSetup& setup) {
    setup = dressed_setup(c, cache);
    MMParams p;
    p.atom = setup.atom;
    p.ion = setup.ion;
    p.trap = TrapParams::rf_only(c.rad("Omega_rf_MHz"), c.number("q"));
    p.omega_a = c.rad("omega_a_kHz");
    p.d = c.meters("d_um");
    p.dressing = setup.dp;
    p.c4 = setup.c4;
    p.eta_Omega_SM = c.rad("eta_Omega_SM_kHz");
    p.delta_perp = c.rad("delta_perp_kHz");
    p.ramp_time = c.seconds("ramp_us");
    p.t_end = c.seconds("t_end_us");
    if (p.t_end == 0.0) p.t_end = constants::two_pi / p.delta_perp;
    p.steps_per_rf_period = c.integer("steps_per_rf_period");
    p.validate();
    return p;
}

inline nlohmann::json state_label_json(const RydbergState& st) {
    return {{"n", st.n}, {"l", st.l}, {"two_j", static_cast<int>(std::lround(2 * st.j))}};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Experiment runners.  Each writes its data files through the context; the
// caller finishes the manifest.

inline void run_bo_curves(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    const Species atom = c.atom();
    const Species ion = make_yb171_ion();
    const BasisSpec basis(c.integer("basis_n_min"), c.integer("basis_n_max"),
                          c.integer("basis_l_max"));
    BOBuilder builder(atom, ion, basis, &ctx.cache());
    const auto R = detail::linspace(c.meters("R_min_um"), c.meters("R_max_um"),
                                    c.integer("n_R"));
    std::optional<TrapSnapshot> field;
    if (c.flag("trap_field"))
        field = TrapSnapshot{TrapParams::rf_only(c.rad("Omega_rf_MHz"), c.number("q")),
                             detail::parse_rf_phase(c.str("rf_phase"))};
    const PotentialCurve curves = diagonalize_curves(builder, R, field);

    const int nc = static_cast<int>(curves.labels.size());
    std::vector<std::string> header = {"R_m"};
    std::vector<std::vector<double>> cols = {R};
    nlohmann::json labels = nlohmann::json::array();
    for (int k = 0; k < nc; ++k) {
        header.push_back("eps_" + std::to_string(k) + "_GHz");
        std::vector<double> col(R.size());
        for (std::size_t i = 0; i < R.size(); ++i)
            col[i] = curves.energies(k, i) / (constants::h_planck * 1e9);
        cols.push_back(std::move(col));
        labels.push_back(detail::state_label_json(curves.labels[k]));
    }
    ctx.write_csv("bo_curves.csv", header, cols);
    ctx.write_json("bo_curves.json",
                   {{"atom", atom.name},
                    {"basis", {{"n_min", basis.n_min},
                               {"n_max", basis.n_max},
                               {"l_max", basis.l_max}}},
                    {"curve_labels_at_large_R", labels},
                    {"energy_convention", "eigenenergy / h in GHz"},
                    {"trap_field", c.flag("trap_field")}});
    ctx.diagnostics() = {{"basis_size", nc}, {"n_R", static_cast<int>(R.size())}};
}

inline void run_dressed(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    const auto s = detail::dressed_setup(c, ctx.cache(), c.integer("l"),
                                         0.5 * c.integer("two_j"));
    const auto R = detail::linspace(c.meters("R_min_um"), c.meters("R_max_um"),
                                    c.integer("n_R"));
    std::vector<double> v(R.size());
    for (std::size_t i = 0; i < R.size(); ++i)
        v[i] = v_dressed(R[i], s.pot) / (constants::h_planck * 1e3);
    ctx.write_csv("dressed.csv", {"R_m", "V_over_h_kHz"}, {R, v});
    ctx.diagnostics() = {{"C4_J_m4", s.c4},
                         {"A_over_h_kHz", s.pot.A / (constants::h_planck * 1e3)},
                         {"R_w_um", s.pot.R_w * 1e6},
                         {"lifetime_enhancement", lifetime_enhancement(s.dp)}};
}

inline void run_trap_info(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    const Species ion = make_yb171_ion();
    const TrapParams trap(c.rad("omega_i_kHz"), c.rad("Omega_rf_MHz"),
                          c.number("q"), 0.0);
    const auto lengths = char_lengths(trap, ion);
    const TrapParams rf = TrapParams::rf_only(trap.Omega_rf, trap.q);
    nlohmann::json report = {
        {"ion", ion.name},
        {"ell_z_um", lengths.ell_z * 1e6},
        {"ell_perp_um", lengths.ell_perp * 1e6},
        {"rf_crossover_um", rf_dominance_crossover(trap, ion) * 1e6},
        {"secular_frequency_kHz", secular_frequency(rf) / (constants::two_pi * 1e3)},
        {"mathieu_beta", mathieu_beta(0.0, trap.q)},
        {"frequency_convention", "ordinary frequencies (no 2 pi)"}};
    ctx.write_json("trap_info.json", report);
    ctx.diagnostics() = {{"q", trap.q}};
}

namespace detail {

inline void write_gate_traces(RunContext& ctx, const std::string& name,
                              const GateTraces& tr) {
    std::vector<std::vector<double>> cols(7);
    const std::size_t n = tr.t.size();
    for (auto& c : cols) c.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        cols[0].push_back(tr.t[k] * 1e6);
        cols[1].push_back(tr.pop[3][k]); // uu
        cols[2].push_back(tr.pop[2][k]); // ud (atom up, ion down)
        cols[3].push_back(tr.pop[1][k]); // du
        cols[4].push_back(tr.pop[0][k]); // dd
        cols[5].push_back(tr.n_ion[k]);
        cols[6].push_back(tr.n_atom[k]);
    }
    ctx.write_csv(name, {"t_us", "P_uu", "P_ud", "P_du", "P_dd", "n_ion", "n_atom"},
                  cols);
}

inline nlohmann::json gate_summary(const GateParams& g,
                                   const std::array<GateResult, 4>& results) {
    static const char* input_names[4] = {"pp", "pm", "mp", "mm"};
    nlohmann::json fidelities = nlohmann::json::object();
    for (int k = 0; k < 4; ++k)
        fidelities[input_names[k]] = {{"fidelity", results[k].fidelity},
                                      {"return_overlap", results[k].return_overlap},
                                      {"goal_branch", results[k].goal_branch}};
    return {{"fidelity_by_input", fidelities},
            {"gate_time_us", constants::two_pi / g.delta * 1e6},
            {"eta_Omega_SM_kHz", g.eta_Omega_SM / (constants::two_pi * 1e3)},
            {"delta_kHz", g.delta / (constants::two_pi * 1e3)},
            {"stark_oscillation_ratio", stark_oscillation_ratio(g)},
            {"frequency_convention", "ordinary frequencies (no 2 pi)"}};
}

} // namespace detail

inline void run_gate(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    detail::DressedSetup setup;
    const GateParams g = detail::gate_from_config(c, ctx.cache(), setup);
    const auto results = run_all_gates(g, c.integer("n_samples"));
    static const char* input_names[4] = {"pp", "pm", "mp", "mm"};
    for (int k = 0; k < 4; ++k)
        detail::write_gate_traces(ctx, std::string("gate_") + input_names[k] + ".csv",
                                  results[k].traces);
    ctx.write_json("gate_summary.json", detail::gate_summary(g, results));
    ctx.diagnostics() = {{"n_fock_i", g.n_i},
                         {"n_fock_a", g.n_a},
                         {"steps_per_period", g.steps_per_period},
                         {"C4_J_m4", setup.c4}};
}

inline void run_gate_thermal(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    detail::DressedSetup setup;
    const GateParams g = detail::gate_from_config(c, ctx.cache(), setup);
    ThermalSpec spec;
    spec.nbar_i = spec.nbar_a = c.number("nbar");
    spec.n_max = c.integer("n_max_thermal");
    const ThermalResult thermal = run_thermal(spec, g);
    const auto pure = run_all_gates(g, c.integer("n_samples"));
    nlohmann::json summary = detail::gate_summary(g, pure);
    summary["thermal"] = {{"nbar", spec.nbar_i},
                          {"n_max", spec.n_max},
                          {"fidelity", thermal.fidelity},
                          {"input_trace", thermal.trace}};
    ctx.write_json("gate_summary.json", summary);
    ctx.diagnostics() = {{"n_fock_i", g.n_i},
                         {"n_fock_a", g.n_a},
                         {"steps_per_period", g.steps_per_period}};
}

namespace detail {

inline void write_mm_traces(RunContext& ctx, const std::string& name,
                            const MMResult& res) {
    std::string buf = RunContext::csv_header(
        {"t_us", "sector", "x_i_nm", "x_a_nm", "n_i_eff", "n_a_eff"});
    for (int s = 0; s < 4; ++s) {
        const MMTrace& tr = res.traces[s];
        for (std::size_t k = 0; k < tr.t.size(); ++k) {
            buf += fmt(tr.t[k] * 1e6);
            buf += ',';
            buf += sector_label(static_cast<Sector>(s));
            buf += ',';
            buf += fmt(tr.x_i[k] * 1e9);
            buf += ',';
            buf += fmt(tr.x_a[k] * 1e9);
            buf += ',';
            buf += fmt(tr.n_i_eff[k]);
            buf += ',';
            buf += fmt(tr.n_a_eff[k]);
            buf += '\n';
        }
    }
    ctx.write_file(name, buf);
}

} // namespace detail

inline void run_micromotion(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    detail::DressedSetup setup;
    const MMParams p = detail::mm_from_config(c, ctx.cache(), setup);
    const Grid2D grid = default_grid(p, c.integer("grid_n"));
    std::vector<ZoomWindow> zooms;
    if (c.seconds("zoom_len_us") > 0.0)
        zooms.push_back({c.seconds("zoom_start_us"), c.seconds("zoom_len_us")});
    const MMResult res = run_micromotion_gate(p, grid, c.integer("n_samples"), zooms,
                                              ctx.options().threads);
    detail::write_mm_traces(ctx, "micromotion.csv", res);
    ctx.diagnostics() = {
        {"dt_s", res.dt},
        {"steps", static_cast<long>(std::lround(p.t_end / res.dt))},
        {"grid", {{"n_i", grid.n_i}, {"n_a", grid.n_a},
                  {"extent_i_um", grid.extent_i * 1e6},
                  {"extent_a_um", grid.extent_a * 1e6}}},
        {"t_end_us", p.t_end * 1e6},
        {"C4_J_m4", setup.c4}};
}

inline void run_taylor_check(RunContext& ctx) {
    const ExperimentConfig& c = ctx.cfg();
    detail::DressedSetup setup;
    const MMParams p = detail::mm_from_config(c, ctx.cache(), setup);
    const Sector sector = detail::parse_sector(c.str("sector"));
    const AdequacyReport rep = taylor_adequacy_check(p, 0.0, sector);
    const double ell_i = oscillator_length(p.ion.mass, p.omega_i_basis());
    const double ell_a = oscillator_length(p.atom.mass, p.omega_a);
    ctx.write_json("taylor_check.json",
                   {{"sector", c.str("sector")},
                    {"separation_um", p.d * 1e6},
                    {"max_ion_deviation_over_ell_i", rep.dev_ion},
                    {"max_atom_deviation_over_ell_a", rep.dev_atom},
                    {"ell_i_nm", ell_i * 1e9},
                    {"ell_a_nm", ell_a * 1e9},
                    {"comparison",
                     "classical orbit: third-order Taylor potential vs the full "
                     "field-dependent potential"}});
    ctx.diagnostics() = {{"C4_J_m4", setup.c4}};
}

// ---------------------------------------------------------------------------
// Preconfigured figure-data exports.

inline void run_fig2(RunContext& ctx) {
    ExperimentConfig bo = default_config(ExperimentKind::bo_curves);
    const Species atom = bo.atom();
    const BasisSpec basis(bo.integer("basis_n_min"), bo.integer("basis_n_max"),
                          bo.integer("basis_l_max"));
    BOBuilder builder(atom, make_yb171_ion(), basis, &ctx.cache());
    const auto R = detail::linspace(bo.meters("R_min_um"), bo.meters("R_max_um"),
                                    bo.integer("n_R"));
    const PotentialCurve curves = diagonalize_curves(builder, R);

    // second-order reference: -C4/R^4 attached to the unperturbed 30S level
    const auto s30 = make_state(atom, 30, 0, 0.5, 0.5);
    const double c4 = c4_second_order(s30, atom, basis, ctx.cache());

    std::vector<std::string> header = {"R_m"};
    std::vector<std::vector<double>> cols = {R};
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t k = 0; k < curves.labels.size(); ++k) {
        header.push_back("eps_" + std::to_string(k) + "_GHz");
        std::vector<double> col(R.size());
        for (std::size_t i = 0; i < R.size(); ++i)
            col[i] = curves.energies(static_cast<int>(k), static_cast<int>(i)) /
                     (constants::h_planck * 1e9);
        cols.push_back(std::move(col));
        labels.push_back(detail::state_label_json(curves.labels[k]));
    }
    header.push_back("c4_reference_GHz");
    std::vector<double> ref(R.size());
    for (std::size_t i = 0; i < R.size(); ++i)
        ref[i] = (s30.energy - c4 / std::pow(R[i], 4)) / (constants::h_planck * 1e9);
    cols.push_back(std::move(ref));

    ctx.write_csv("fig2.csv", header, cols);
    ctx.write_json("fig2.json",
                   {{"atom", atom.name},
                    {"x", "R_m: atom-ion separation in m"},
                    {"y", "eigenenergy / h in GHz"},
                    {"reference", "unperturbed 30S level minus C4/R^4"},
                    {"curve_labels_at_large_R", labels}});
    ctx.diagnostics() = {{"basis_size", static_cast<int>(curves.labels.size())},
                         {"C4_J_m4", c4}};
}

inline void run_fig3(RunContext& ctx) {
    ExperimentConfig d1 = default_config(ExperimentKind::dressed); // 2 pi x 1 GHz
    ExperimentConfig d04 = d1;
    d04.values["Delta0_GHz"] = 0.4;
    const auto s1 = detail::dressed_setup(d1, ctx.cache());
    const auto s04 = detail::dressed_setup(d04, ctx.cache());
    const auto R = detail::linspace(d1.meters("R_min_um"), d1.meters("R_max_um"),
                                    d1.integer("n_R"));
    // undressed ground-state atom: literature static polarizability
    const double ekc = constants::e_charge * constants::k_coulomb;
    const double c4_ground =
        constants::alpha_li_ground_au * constants::alpha_au * ekc * ekc / 2.0;
    std::vector<double> vg(R.size()), v1(R.size()), v04(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) {
        vg[i] = -c4_ground / std::pow(R[i], 4) / (constants::h_planck * 1e3);
        v1[i] = v_dressed(R[i], s1.pot) / (constants::h_planck * 1e3);
        v04[i] = v_dressed(R[i], s04.pot) / (constants::h_planck * 1e3);
    }
    ctx.write_csv("fig3.csv",
                  {"R_m", "V_ground_over_h_kHz", "V_dressed_1GHz_over_h_kHz",
                   "V_dressed_0p4GHz_over_h_kHz"},
                  {R, vg, v1, v04});
    ctx.write_json("fig3.json",
                   {{"x", "R_m: atom-ion separation in m"},
                    {"y", "potential / h in kHz"},
                    {"Omega_MHz", 10.0},
                    {"columns",
                     {"ground-state atom (-C4_ground / R^4)",
                      "dressed, Delta0 = 1 GHz", "dressed, Delta0 = 0.4 GHz"}}});
    ctx.diagnostics() = {{"A_over_h_kHz_1GHz", s1.pot.A / (constants::h_planck * 1e3)},
                         {"R_w_um_1GHz", s1.pot.R_w * 1e6},
                         {"R_w_um_0p4GHz", s04.pot.R_w * 1e6}};
}

inline void run_fig4(RunContext& ctx) {
    ExperimentConfig gc = default_config(ExperimentKind::gate);
    detail::DressedSetup setup;
    const GateParams g = detail::gate_from_config(gc, ctx.cache(), setup);
    const auto results = run_all_gates(g, gc.integer("n_samples"));
    detail::write_gate_traces(ctx, "fig4.csv", results[0].traces); // ++ input
    nlohmann::json summary = detail::gate_summary(g, results);
    summary["input"] = "pp";
    ctx.write_json("fig4.json", summary);
    ctx.diagnostics() = {{"n_fock_i", g.n_i}, {"n_fock_a", g.n_a}};
}

inline void run_fig5mm(RunContext& ctx) {
    ExperimentConfig mc = default_config(ExperimentKind::micromotion);
    detail::DressedSetup setup;
    const MMParams p = detail::mm_from_config(mc, ctx.cache(), setup);
    const Grid2D grid = default_grid(p, mc.integer("grid_n"));
    // per-step zooms resolving the micromotion ripple mid-gate and at closure
    const std::vector<ZoomWindow> zooms = {{0.5 * p.t_end, 2e-6},
                                           {p.t_end - 3e-6, 2e-6}};
    const MMResult res = run_micromotion_gate(p, grid, mc.integer("n_samples"), zooms,
                                              ctx.options().threads);
    detail::write_mm_traces(ctx, "fig5mm.csv", res);
    ctx.write_json("fig5mm.json",
                   {{"x", "t_us: time in microseconds"},
                    {"y", "position expectation values in nm, per spin sector"},
                    {"sectors", "first letter atom, second letter ion"},
                    {"zooms_us",
                     {{0.5 * p.t_end * 1e6, 2.0}, {(p.t_end - 3e-6) * 1e6, 2.0}}}});
    ctx.diagnostics() = {{"dt_s", res.dt}, {"t_end_us", p.t_end * 1e6}};
}

inline void run_figA(RunContext& ctx) {
    // 30S of 6Li with the radial rf trapping field frozen at maximal positive,
    // zero and maximal negative amplitude, against the field-free curve.
    const Species atom = make_li6();
    const Species ion = make_yb171_ion();
    const BasisSpec basis(25, 35, 3);
    BOBuilder builder(atom, ion, basis, &ctx.cache());
    const auto R = detail::linspace(0.5e-6, 4e-6, 120);
    const TrapParams trap = TrapParams::rf_only(constants::two_pi * 2.5e6, 0.28);

    auto curve_30s = [&](const std::optional<TrapSnapshot>& field) {
        const PotentialCurve curves = diagonalize_curves(builder, R, field);
        const int k = curves.find(30, 0, 0.5);
        std::vector<double> col(R.size());
        for (std::size_t i = 0; i < R.size(); ++i)
            col[i] = curves.energies(k, static_cast<int>(i)) /
                     (constants::h_planck * 1e9);
        return col;
    };
    const auto no_field = curve_30s(std::nullopt);
    const auto plus = curve_30s(TrapSnapshot{trap, RfPhase::max_plus});
    const auto zero = curve_30s(TrapSnapshot{trap, RfPhase::zero});
    const auto minus = curve_30s(TrapSnapshot{trap, RfPhase::max_minus});
    ctx.write_csv("figA.csv",
                  {"R_m", "eps_30S_GHz", "eps_30S_rf_plus_GHz", "eps_30S_rf_zero_GHz",
                   "eps_30S_rf_minus_GHz"},
                  {R, no_field, plus, zero, minus});
    ctx.write_json("figA.json",
                   {{"atom", atom.name},
                    {"x", "R_m: radial distance from the trap center in m"},
                    {"y", "30S eigenenergy / h in GHz"},
                    {"Omega_rf_MHz", 2.5},
                    {"q", 0.28},
                    {"columns", {"no trapping field", "rf at maximal positive amplitude",
                                 "rf at zero amplitude", "rf at maximal negative amplitude"}}});
    ctx.diagnostics() = {{"basis", {{"n_min", basis.n_min}, {"n_max", basis.n_max},
                                    {"l_max", basis.l_max}}}};
}

// ---------------------------------------------------------------------------

inline RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    RunContext ctx(cfg, opt);
    switch (cfg.kind) {
    case ExperimentKind::bo_curves: run_bo_curves(ctx); break;
    case ExperimentKind::dressed: run_dressed(ctx); break;
    case ExperimentKind::trap_info: run_trap_info(ctx); break;
    case ExperimentKind::gate: run_gate(ctx); break;
    case ExperimentKind::gate_thermal: run_gate_thermal(ctx); break;
    case ExperimentKind::micromotion: run_micromotion(ctx); break;
    case ExperimentKind::taylor_check: run_taylor_check(ctx); break;
    case ExperimentKind::fig2: run_fig2(ctx); break;
    case ExperimentKind::fig3: run_fig3(ctx); break;
    case ExperimentKind::fig4: run_fig4(ctx); break;
    case ExperimentKind::fig5mm: run_fig5mm(ctx); break;
    case ExperimentKind::figA: run_figA(ctx); break;
    }
    return ctx.finish();
}

} // namespace rydion
