#include "waapo/io/experiment.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <mutex>
#include <sstream>

#include "waapo/errors.hpp"
#include "waapo/io/grid_file.hpp"
#include "waapo/io/raster.hpp"
#include "waapo/io/synthetic.hpp"
#include "waapo/metrics.hpp"
#include "waapo/parallel.hpp"

namespace waapo::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

StateGrid load_state(const fs::path& path, const GridShape& shape, const std::string& what) {
    LoadedGrid g = load_grid(path);
    if (g.grid.shape() != shape) {
        throw ConfigError(what + " " + path.string() + " has shape " + g.grid.shape().str() +
                          ", the model expects " + shape.str());
    }
    return std::move(g.grid);
}

SpatialMask build_mask(const RunConfig& c) {
    const GridShape& s = c.model.shape;
    SpatialMask mask = SpatialMask::ones(s);
    if (c.patch) {
        const PatchSpec& p = *c.patch;
        mask = make_patch_mask(s.lat, s.lon, p.lat_origin, p.lon_origin, p.lat_size, p.lon_size);
    } else if (c.mask_file) {
        LoadedGrid g = load_grid(*c.mask_file);
        const GridShape& ms = g.grid.shape();
        if (ms.lat != s.lat || ms.lon != s.lon || ms.channels != 1) {
            throw ConfigError("mask " + c.mask_file->string() + " has shape " + ms.str() + ", expected " +
                              GridShape(s.lat, s.lon, 1).str());
        }
        try {
            const auto v = g.grid.values();
            mask = SpatialMask(s.lat, s.lon, std::vector<double>(v.begin(), v.end()));
        } catch (const ArgumentError& e) {
            throw ConfigError("mask " + c.mask_file->string() + ": " + e.what());
        }
    }
    if (c.mask_taper > 0) mask = smooth_patch_mask(mask, c.mask_taper);
    return mask;
}

json per_channel(const std::vector<std::string>& names, const std::vector<double>& values) {
    json out = json::object();
    for (std::size_t n = 0; n < names.size() && n < values.size(); ++n) out[names[n]] = values[n];
    return out;
}

json parts_json(const LossParts& p) {
    return {{"primary", p.primary}, {"inf", p.inf}, {"tv", p.tv}, {"total", p.total}};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DivergedError*>(&e)) return kExitDiverged;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitIo;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
        dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const BoundsError*>(&e) ||
        dynamic_cast<const RangeError*>(&e)) {
        return kExitConfig;
    }
    return kExitFailure;
}

json error_json(const std::exception& e) {
    std::string kind = "error";
    if (dynamic_cast<const DivergedError*>(&e)) {
        kind = "diverged";
    } else if (dynamic_cast<const IoError*>(&e)) {
        kind = "io";
    } else if (dynamic_cast<const FormatError*>(&e)) {
        kind = "format";
    } else if (exit_code_for(e) == kExitConfig) {
        kind = "config";
    }
    json j = {{"error", kind}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
    if (const auto* d = dynamic_cast<const DivergedError*>(&e)) {
        j["iteration"] = d->iteration();
        j["last_finite_loss"] = parts_json(d->last_finite().final_loss);
    }
    return j;
}

ResolvedRun resolve_run(const RunConfig& c) {
    c.validate();
    const GridShape& s = c.model.shape;
    SurrogateModel model(c.model);

    StateGrid initial = c.initial_file ? load_state(*c.initial_file, s, "initial state")
                                       : gen_synthetic_initial(s, c.initial_seed, c.initial_options);
    // A target file holds the adversarial forecast state itself; otherwise the
    // target is the forecast of a different synthetic initial state.
    StateGrid target =
        c.target_file ? load_state(*c.target_file, s, "target state")
                      : rollout(model, gen_synthetic_initial(s, c.target_seed, c.initial_options), c.horizon)
                            .final_state();

    std::optional<CalibratedBounds> calibration;
    PenaltyConfig penalties;
    if (c.calibrate) {
        calibration = calibrate_constraints(model, initial, c.horizon);
        penalties = make_penalties(*calibration, c.lambda_inf, c.lambda_tv);
    } else {
        penalties = PenaltyConfig::uniform(s.channels, c.lambda_inf, c.lambda_tv, c.epsilon, c.tau);
    }
    for (const auto& [name, o] : c.channel_penalties) {
        const std::size_t n = c.channel_index(name);
        if (o.lambda_inf) penalties.lambda_inf[n] = *o.lambda_inf;
        if (o.lambda_tv) penalties.lambda_tv[n] = *o.lambda_tv;
        if (o.epsilon) penalties.epsilon[n] = *o.epsilon;
        if (o.tau) penalties.tau[n] = *o.tau;
    }

    AttackConfig attack{c.channel_set(), build_mask(c), std::move(penalties), c.optimizer,
                        c.horizon,       std::move(target), c.penalty_window()};
    attack.validate(model);
    StateGrid target_copy = attack.target;
    return ResolvedRun{std::move(model), std::move(initial), std::move(target_copy), std::move(attack),
                       std::move(calibration)};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path make_run_directory(const fs::path& parent, const std::string& stem,
                            const std::optional<std::string>& timestamp) {
    // Serialises the exists/create pair across sweep workers.
    static std::mutex mutex;
    const std::lock_guard<std::mutex> lock(mutex);
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
    const std::string base = stem + "-" + timestamp.value_or(utc_timestamp());
    for (std::size_t k = 1;; ++k) {
        const fs::path dir = parent / (k == 1 ? base : base + "-" + std::to_string(k));
        if (fs::create_directory(dir, ec)) return dir;
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

std::string format_loss_history(const std::vector<LossRecord>& history) {
    std::string out = "iter,lr,l_primary,l_inf,l_tv,total,grad_norm_preclip\r\n";
    for (const LossRecord& r : history) {
        out += std::to_string(r.iteration) + "," + num(r.learning_rate) + "," + num(r.parts.primary) + "," +
               num(r.parts.inf) + "," + num(r.parts.tv) + "," + num(r.parts.total) + "," +
               num(r.grad_norm_preclip) + "\r\n";
    }
    return out;
}

json run_metrics(const RunConfig& c, const ResolvedRun& run, const AttackReport& report,
                 const Trajectory& control, const Trajectory& perturbed) {
    const auto& names = c.channel_names;
    const AlignmentMetrics a = alignment_metrics(perturbed, control, run.target, control.final_state());
    const StealthReport st = stealth_report(report.delta, run.attack.mask, c.pmrg_sigma);
    const PenaltyConfig& p = run.attack.penalties;

    json j;
    j["preset"] = c.preset;
    j["seeds"] = {{"initial", c.initial_seed}, {"target", c.target_seed}, {"model", c.model.seed},
                  {"optimizer", c.optimizer.seed}};
    j["grid"] = {{"lat", c.model.shape.lat}, {"lon", c.model.shape.lon}, {"channels", c.model.shape.channels}};
    j["horizon"] = c.horizon;
    j["iterations_run"] = report.iterations_run;
    j["best_iteration"] = report.best_iteration ? json(*report.best_iteration) : json(nullptr);
    j["loss"] = {{"final", parts_json(report.final_loss)},
                 {"initial", report.loss_history.empty() ? json(nullptr)
                                                         : parts_json(report.loss_history.front().parts)}};
    j["alignment"] = {
        {"target_distance", a.target_distance},
        {"ground_truth_distance", a.ground_truth_distance},
        {"control_target_distance", a.control_target_distance},
        {"target_to_truth_ratio", a.target_to_truth_ratio},
        {"relative_target_distance",
         a.control_target_distance > 0.0 ? a.target_distance / a.control_target_distance : 0.0},
        {"closer_to_target", a.closer_to_target},
        {"rmse_target", per_channel(names, a.rmse_target)},
        {"rmse_truth", per_channel(names, a.rmse_truth)},
    };
    j["pmrg"] = {{"sigma", c.pmrg_sigma}, {"value", st.pmrg}};
    if (c.pmrg_sampled_seed) {
        j["pmrg"]["sampled"] = pmrg_sampled(report.delta, c.pmrg_sigma, *c.pmrg_sampled_seed);
        j["pmrg"]["sampled_seed"] = *c.pmrg_sampled_seed;
    }
    j["stealth"] = {
        {"nonzero_channels", st.nonzero_channels},
        {"outside_mask_fraction", st.outside_mask_fraction},
        {"outside_mask_energy", st.outside_mask_energy},
        {"channel_inf_norm", per_channel(names, st.channel_inf_norm)},
        {"channel_tv", per_channel(names, st.channel_tv)},
        {"mask_cells", run.attack.mask.count_nonzero()},
    };
    std::vector<std::string> attacked;
    for (std::size_t n = 0; n < names.size(); ++n) {
        if (run.attack.channels.contains(n)) attacked.push_back(names[n]);
    }
    j["channels"] = attacked;
    j["penalties"] = {{"lambda_inf", per_channel(names, p.lambda_inf)},
                      {"lambda_tv", per_channel(names, p.lambda_tv)},
                      {"epsilon", per_channel(names, p.epsilon)},
                      {"tau", per_channel(names, p.tau)},
                      {"window", {run.attack.penalty_window.first, run.attack.penalty_window.last}}};
    if (run.calibration) {
        j["calibration"] = {{"epsilon", per_channel(names, run.calibration->epsilon)},
                            {"tau", per_channel(names, run.calibration->tau)},
                            {"warnings", run.calibration->warnings}};
    } else {
        j["calibration"] = nullptr;
    }
    return j;
}

RunOutcome run_experiment(const RunConfig& config, const RunOptions& options) {
    RunOutcome out;
    try {
        config.validate();
        const std::string stem = config.preset + "-seed" + std::to_string(config.initial_seed);
        out.run_dir = make_run_directory(config.output_directory, stem, options.timestamp);
        write_text(out.run_dir / "config.ini", format_run_config(config));

        const ResolvedRun run = resolve_run(config);
        const auto& names = config.channel_names;
        save_coupling(out.run_dir / "coupling.grd", run.model.coupling());
        save_grid(out.run_dir / "initial.grd", run.initial, names);
        save_grid(out.run_dir / "target.grd", run.target, names);

        AttackReport report;
        try {
            report = waapo_optimize(run.model, run.initial, run.attack, options.observer);
        } catch (const DivergedError& e) {
            write_text(out.run_dir / "loss_history.csv", format_loss_history(e.last_finite().loss_history));
            save_grid(out.run_dir / "delta_last_finite.grd", e.last_finite().delta, names);
            throw;
        }
        write_text(out.run_dir / "loss_history.csv", format_loss_history(report.loss_history));
        save_grid(out.run_dir / "delta.grd", report.delta, names);

        const Trajectory control = rollout(run.model, run.initial, config.horizon);
        const Trajectory perturbed = rollout(run.model, run.initial + report.delta, config.horizon);
        if (config.emit_trajectories) {
            save_trajectory(out.run_dir / "trajectory_control.grd", control, names);
            save_trajectory(out.run_dir / "trajectory_perturbed.grd", perturbed, names);
        }
        if (config.emit_rasters) {
            const std::size_t ch = config.channel_index(config.render_channel);
            const std::string& cn = config.render_channel;
            const StateGrid& zp = perturbed.final_state();
            render_diffmap(diff_map(zp, run.target, ch, "perturbed-target"),
                           out.run_dir / ("diff_target_" + cn + ".ppm"), Palette::diverging,
                           config.clip_quantile);
            render_diffmap(diff_map(zp, control.final_state(), ch, "perturbed-truth"),
                           out.run_dir / ("diff_truth_" + cn + ".ppm"), Palette::diverging,
                           config.clip_quantile);
            render_diffmap(diff_map(report.delta, StateGrid(report.delta.shape()), ch, "delta"),
                           out.run_dir / ("delta_" + cn + ".ppm"), Palette::diverging,
                           config.clip_quantile);
        }

        out.metrics = run_metrics(config, run, report, control, perturbed);
        write_json(out.run_dir / "metrics.json", out.metrics);
        out.report = std::move(report);
        out.exit_code = kExitOk;
    } catch (const std::exception& e) {
        out.exit_code = exit_code_for(e);
        out.error = error_json(e);
        if (!out.run_dir.empty()) {
            try {
                write_json(out.run_dir / "error.json", out.error);
            } catch (const std::exception&) {
                // The original failure is what gets reported.
            }
        }
    }
    return out;
}

std::vector<RunOutcome> run_sweep(const RunConfig& config, std::uint64_t first, std::uint64_t last) {
    if (last < first) throw ConfigError("sweep range must satisfy first <= last");
    const std::size_t count = static_cast<std::size_t>(last - first) + 1;
    std::vector<RunOutcome> results(count);
    parallel_for(count, [&](std::size_t k) {
        RunConfig c = config;
        c.set_seed(first + k);
        results[k] = run_experiment(c);
    });
    return results;
}

}  // namespace waapo::io
