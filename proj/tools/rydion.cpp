// Command-line front end: one subcommand per experiment plus `figures` for
// the preconfigured plot-data exports.  Exit codes: 0 success, 2 validation
// error (CLI or config), 3 numerical-convergence failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rydion/config.hpp"
#include "rydion/io.hpp"

namespace {

int dispatch(rydion::ExperimentKind kind, const std::string& config_path,
             const rydion::RunOptions& opt, double zoom_start_us,
             double zoom_len_us) {
    using namespace rydion;
    try {
        ExperimentConfig cfg = config_path.empty() ? default_config(kind)
                                                   : load_config(config_path, kind);
        if (kind == ExperimentKind::micromotion && zoom_len_us > 0.0) {
            cfg.values["zoom_start_us"] = zoom_start_us;
            cfg.values["zoom_len_us"] = zoom_len_us;
        }
        const RunManifest manifest = run_experiment(cfg, opt);
        std::printf("%s: wrote %zu file(s) + manifest.json to %s (%.1f s)\n",
                    kind_name(kind).c_str(), manifest.outputs.size(),
                    opt.out_dir.string().c_str(), manifest.wall_time_s);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const CutoffError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const NormConservationError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const BoundaryLeakError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const GridError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const OverlapAmbiguityError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const LevelCrossingError& e) {
        std::fprintf(stderr, "convergence failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controlled long-range interactions between a trapped ion and "
                 "a Rydberg-dressed atom: data pipeline"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    rydion::RunOptions opt;
    std::string out_dir = opt.out_dir.string();
    bool no_cache = false;
    std::vector<double> zoom;
    std::string figure_id;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (defaults if omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--no-cache", no_cache, "disable the radial-wavefunction cache");
        sub->add_option("--threads", opt.threads, "worker threads for sector evolution")
            ->check(CLI::PositiveNumber);
    };

    std::vector<std::pair<rydion::ExperimentKind, CLI::App*>> subs;
    for (auto kind : {rydion::ExperimentKind::bo_curves, rydion::ExperimentKind::dressed,
                      rydion::ExperimentKind::trap_info, rydion::ExperimentKind::gate,
                      rydion::ExperimentKind::gate_thermal,
                      rydion::ExperimentKind::micromotion,
                      rydion::ExperimentKind::taylor_check}) {
        CLI::App* sub = app.add_subcommand(rydion::kind_name(kind));
        add_common(sub);
        if (kind == rydion::ExperimentKind::micromotion)
            sub->add_option("--zoom", zoom,
                            "per-step sampling window: start_us length_us")
                ->expected(2);
        subs.emplace_back(kind, sub);
    }
    CLI::App* figures = app.add_subcommand("figures", "emit plot-ready figure data");
    figures->add_option("id", figure_id, "one of: fig2, fig3, fig4, fig5mm, figA")
        ->required();
    add_common(figures);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    opt.out_dir = out_dir;
    opt.use_cache = !no_cache;

    rydion::ExperimentKind kind = rydion::ExperimentKind::trap_info;
    if (figures->parsed()) {
        try {
            kind = rydion::kind_from_name(figure_id);
        } catch (const rydion::ConfigError& e) {
            std::fprintf(stderr, "%s\n", e.what());
            return 2;
        }
        switch (kind) {
        case rydion::ExperimentKind::fig2:
        case rydion::ExperimentKind::fig3:
        case rydion::ExperimentKind::fig4:
        case rydion::ExperimentKind::fig5mm:
        case rydion::ExperimentKind::figA:
            break;
        default:
            std::fprintf(stderr,
                         "unknown figure id \"%s\"; valid: fig2, fig3, fig4, "
                         "fig5mm, figA\n",
                         figure_id.c_str());
            return 2;
        }
    } else {
        for (const auto& [k, sub] : subs)
            if (sub->parsed()) kind = k;
    }
    const double zoom_start = zoom.size() == 2 ? zoom[0] : 0.0;
    const double zoom_len = zoom.size() == 2 ? zoom[1] : 0.0;
    return dispatch(kind, config_path, opt, zoom_start, zoom_len);
}
