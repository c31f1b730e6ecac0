// Command-line front end: runs presets or config files and the supporting
// diagnostics, writing every result to disk before printing a summary.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "waapo/errors.hpp"
#include "waapo/io/experiment.hpp"
#include "waapo/io/grid_file.hpp"
#include "waapo/io/raster.hpp"
#include "waapo/metrics.hpp"
#include "waapo/objective.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace waapo;
using namespace waapo::io;

namespace {

struct Source {
    std::string preset;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_source(CLI::App* cmd, Source& src) {
    auto* p = cmd->add_option("--preset", src.preset, "named experiment preset");
    auto* c = cmd->add_option("--config", src.config, "INI run configuration");
    p->excludes(c);
    cmd->add_option("--seed", src.seed, "experiment seed (initial state S, target S+1)");
    cmd->add_option("--out", src.out, "parent directory for run output");
}

RunConfig resolve_source(const Source& src) {
    RunConfig c = !src.config.empty() ? load_run_config(src.config)
                  : !src.preset.empty() ? preset(src.preset)
                                        : preset("channel-only");
    if (src.seed) c.set_seed(*src.seed);
    if (!src.out.empty()) c.output_directory = src.out;
    c.validate();
    return c;
}

int fail(const std::exception& e) {
    std::cerr << error_json(e).dump() << "\n";
    return exit_code_for(e);
}

void print_summary(const RunOutcome& r) {
    if (r.exit_code != kExitOk) {
        std::cerr << r.error.dump() << "\n";
        if (!r.run_dir.empty()) std::cerr << "run directory: " << r.run_dir.string() << "\n";
        return;
    }
    const json& m = r.metrics;
    std::printf("%s  relative target distance %.4g  target/truth %.4g  pmrg %.4g  -> %s\n",
                m["preset"].get<std::string>().c_str(),
                m["alignment"]["relative_target_distance"].get<double>(),
                m["alignment"]["target_to_truth_ratio"].get<double>(), m["pmrg"]["value"].get<double>(),
                r.run_dir.string().c_str());
}

std::pair<std::uint64_t, std::uint64_t> parse_sweep(const std::string& spec) {
    const std::string prefix = "seeds=";
    const auto dots = spec.find("..");
    if (spec.rfind(prefix, 0) != 0 || dots == std::string::npos) {
        throw ConfigError("--sweep expects seeds=A..B, got '" + spec + "'");
    }
    try {
        return {std::stoull(spec.substr(prefix.size(), dots - prefix.size())), std::stoull(spec.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw ConfigError("--sweep expects seeds=A..B, got '" + spec + "'");
    }
}

std::uint64_t parse_sampled(const std::string& spec) {
    const std::string prefix = "seed=";
    try {
        std::size_t pos = 0;
        if (spec.rfind(prefix, 0) == 0) {
            const std::uint64_t v = std::stoull(spec.substr(prefix.size()), &pos);
            if (prefix.size() + pos == spec.size()) return v;
        }
    } catch (const std::logic_error&) {
    }
    throw ConfigError("--sampled-denominator expects seed=N, got '" + spec + "'");
}

int cmd_run(const Source& src, bool keep_best, const std::string& sweep, const std::string& sampled) {
    RunConfig c = resolve_source(src);
    if (keep_best) c.optimizer.keep_best = true;
    if (!sampled.empty()) c.pmrg_sampled_seed = parse_sampled(sampled);
    if (sweep.empty()) {
        const RunOutcome r = run_experiment(c);
        print_summary(r);
        return r.exit_code;
    }
    const auto [first, last] = parse_sweep(sweep);
    int worst = kExitOk;
    for (const RunOutcome& r : run_sweep(c, first, last)) {
        print_summary(r);
        if (r.exit_code != kExitOk && worst == kExitOk) worst = r.exit_code;
    }
    return worst;
}

int cmd_calibrate(const Source& src) {
    const RunConfig c = resolve_source(src);
    const ResolvedRun run = resolve_run(c);
    const CalibratedBounds b = calibrate_constraints(run.model, run.initial, c.horizon);
    const fs::path dir = make_run_directory(c.output_directory, "calibrate-" + c.preset + "-seed" +
                                                                     std::to_string(c.initial_seed));
    std::string csv = "channel,epsilon,tau\r\n";
    for (std::size_t n = 0; n < b.epsilon.size(); ++n) {
        char line[128];
        std::snprintf(line, sizeof line, ",%.17g,%.17g\r\n", b.epsilon[n], b.tau[n]);
        csv += c.channel_names[n] + line;
    }
    write_text(dir / "config.ini", format_run_config(c));
    write_text(dir / "calibration.csv", csv);
    for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << csv;
    std::cout << "-> " << (dir / "calibration.csv").string() << "\n";
    return kExitOk;
}

int cmd_grad_check(const Source& src, double fd_epsilon, std::size_t samples) {
    const RunConfig c = resolve_source(src);
    const ResolvedRun run = resolve_run(c);
    const AttackLoss loss(run.target, run.attack.penalties, run.attack.penalty_window);
    const GradCheckResult g =
        grad_check(run.model, run.initial, c.horizon, loss, fd_epsilon, samples, c.optimizer.seed);
    const json j = {{"fd_epsilon", fd_epsilon},
                    {"coordinates_checked", g.coordinates_checked},
                    {"max_relative_error", g.max_relative_error},
                    {"worst_coordinate", g.worst_coordinate},
                    {"worst_analytic", g.worst_analytic},
                    {"worst_numeric", g.worst_numeric}};
    const fs::path dir = make_run_directory(c.output_directory, "grad-check-" + c.preset + "-seed" +
                                                                      std::to_string(c.initial_seed));
    write_text(dir / "config.ini", format_run_config(c));
    write_text(dir / "grad_check.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n-> " << (dir / "grad_check.json").string() << "\n";
    return kExitOk;
}

int cmd_ensemble(const Source& src, const EnsembleSpec& spec_in) {
    const RunConfig c = resolve_source(src);
    const ResolvedRun run = resolve_run(c);
    EnsembleSpec spec = spec_in;
    spec.validate();
    const EnsembleResult e = gaussian_ensemble(run.model, run.initial, spec, c.horizon);

    std::string csv = "member,target_distance,rmse_vs_control\r\n";
    double best = -1.0;
    for (std::size_t k = 0; k < e.members.size(); ++k) {
        const StateGrid& zt = e.members[k].final_state();
        const double d = squared_norm(zt - run.target);
        if (best < 0.0 || d < best) best = d;
        char line[128];
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\r\n", k, d, rmse(zt, e.control.final_state()));
        csv += line;
    }
    const json j = {{"sigma", spec.sigma},
                    {"members", spec.members},
                    {"seed", spec.seed},
                    {"control_target_distance", squared_norm(e.control.final_state() - run.target)},
                    {"best_member_target_distance", best},
                    {"mean_rmse_vs_control", rmse(e.mean.final_state(), e.control.final_state())}};
    const fs::path dir = make_run_directory(c.output_directory, "ensemble-" + c.preset + "-seed" +
                                                                    std::to_string(c.initial_seed));
    write_text(dir / "config.ini", format_run_config(c));
    write_text(dir / "ensemble.csv", csv);
    write_text(dir / "ensemble.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n-> " << dir.string() << "\n";
    return kExitOk;
}

std::size_t channel_arg(const LoadedGrid& g, const std::string& channel) {
    for (std::size_t n = 0; n < g.channel_names.size(); ++n) {
        if (g.channel_names[n] == channel) return n;
    }
    try {
        std::size_t pos = 0;
        const std::size_t n = std::stoul(channel, &pos);
        if (pos == channel.size() && n < g.grid.shape().channels) return n;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("no channel '" + channel + "' in grid");
}

int cmd_render(const std::string& grid_path, const std::string& minus, const std::string& channel,
               const std::string& palette, double clip_quantile, const std::string& output) {
    const LoadedGrid a = load_grid(grid_path);
    const std::size_t n = channel_arg(a, channel);
    StateGrid b(a.grid.shape());
    if (!minus.empty()) b = load_grid(minus).grid;
    const DiffMap map = diff_map(a.grid, b, n, minus.empty() ? "field" : "difference");
    if (palette != "diverging" && palette != "gray") throw ConfigError("palette must be diverging or gray");
    render_diffmap(map, output, palette == "gray" ? Palette::gray : Palette::diverging, clip_quantile);
    std::cout << "-> " << output << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    const GridFileHeader h = read_grid_header(path);
    const json j = {{"path", path},
                    {"version", h.version},
                    {"shape", {h.shape.lat, h.shape.lon, h.shape.channels}},
                    {"dtype", h.dtype == DType::f32 ? "f32" : "f64"},
                    {"channel_names", h.channel_names},
                    {"payload_offset", h.payload_offset},
                    {"payload_bytes", h.payload_bytes()}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Targeted initial-condition perturbation of a surrogate forecaster"};
    app.require_subcommand(1);

    Source run_src;
    bool keep_best = false;
    std::string sweep;
    auto* run = app.add_subcommand("run", "optimise a perturbation and write a run directory");
    add_source(run, run_src);
    run->add_flag("--keep-best", keep_best, "return the lowest-loss iterate");
    run->add_option("--sweep", sweep, "independent runs over seeds, e.g. seeds=1..8");
    std::string sampled;
    run->add_option("--sampled-denominator", sampled, "also report PMRG against a sampled field, seed=N");

    Source cal_src;
    auto* cal = app.add_subcommand("calibrate", "penalty bounds from the unperturbed rollout");
    add_source(cal, cal_src);

    Source gc_src;
    double fd_epsilon = 1e-4;
    std::size_t samples = 64;
    auto* gc = app.add_subcommand("grad-check", "adjoint gradient versus finite differences");
    add_source(gc, gc_src);
    gc->add_option("--fd-epsilon", fd_epsilon, "central difference step");
    gc->add_option("--samples", samples, "coordinates to check");

    Source ens_src;
    EnsembleSpec ens_spec;
    auto* ens = app.add_subcommand("ensemble", "Gaussian-noise ensemble baseline");
    add_source(ens, ens_src);
    ens->add_option("--sigma", ens_spec.sigma, "noise standard deviation");
    ens->add_option("--members", ens_spec.members, "ensemble size");
    ens->add_option("--ensemble-seed", ens_spec.seed, "noise seed");

    std::string grid_path, minus, channel = "0", palette = "diverging", output;
    double clip_quantile = 0.99;
    auto* render = app.add_subcommand("render", "write one channel of a grid (or a difference) as PNM");
    render->add_option("grid", grid_path, "grid file")->required();
    render->add_option("--minus", minus, "subtract this grid");
    render->add_option("--channel", channel, "channel name or index");
    render->add_option("--palette", palette, "diverging (P6) or gray (P5)")
        ->check(CLI::IsMember({"diverging", "gray"}));
    render->add_option("--clip-quantile", clip_quantile, "colour scale saturation quantile of |v|");
    render->add_option("-o,--output", output, "output .ppm / .pgm")->required();

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "print a grid file header");
    inspect->add_option("grid", inspect_path, "grid file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_src, keep_best, sweep, sampled);
        if (*cal) return cmd_calibrate(cal_src);
        if (*gc) return cmd_grad_check(gc_src, fd_epsilon, samples);
        if (*ens) return cmd_ensemble(ens_src, ens_spec);
        if (*render) return cmd_render(grid_path, minus, channel, palette, clip_quantile, output);
        if (*inspect) return cmd_inspect(inspect_path);
    } catch (const std::exception& e) {
        return fail(e);
    }
    return kExitFailure;
}
