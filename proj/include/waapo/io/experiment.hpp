#pragma once

// Resolving a RunConfig into model, states and attack, executing it, and
// persisting every artifact of the run.
//
// A run directory <output>/<preset>-seed<S>-<UTC timestamp>[-k] holds
//
//   config.ini                 resolved snapshot; re-running it reproduces metrics.json
//   coupling.grd               the model's channel coupling
//   initial.grd, target.grd    clean initial state and adversarial target state
//   delta.grd                  optimised perturbation
//   trajectory_control.grd     rollout of the clean state        (emit_trajectories)
//   trajectory_perturbed.grd   rollout of the perturbed state    (emit_trajectories)
//   loss_history.csv           iter, lr, l_primary, l_inf, l_tv, total, grad_norm_preclip
//   diff_target_<ch>.ppm, diff_truth_<ch>.ppm, delta_<ch>.ppm    (emit_rasters)
//   metrics.json               quality, stealth and calibration figures
//   error.json                 only when the run failed

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "waapo/attack.hpp"
#include "waapo/io/run_config.hpp"

namespace waapo::io {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDiverged = 3,
    kExitIo = 4,
};

// Exit code for an exception escaping a run (ConfigError and argument /
// shape / bounds / range errors map to kExitConfig, I/O and format errors to
// kExitIo, divergence to kExitDiverged).
int exit_code_for(const std::exception& e);
nlohmann::json error_json(const std::exception& e);

struct ResolvedRun {
    SurrogateModel model;
    StateGrid initial;
    StateGrid target;
    AttackConfig attack;
    std::optional<CalibratedBounds> calibration;
};

// Builds the model, loads or synthesises the initial state and target,
// builds the mask and the per-channel penalties. Throws ConfigError,
// IoError or FormatError.
ResolvedRun resolve_run(const RunConfig& config);

struct RunOptions {
    // Replaces the wall-clock stamp in the directory name (tests).
    std::optional<std::string> timestamp;
    // Called with every iterate; see waapo_optimize.
    IterateObserver observer;
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::filesystem::path run_dir;  // empty if the failure came before it was created
    nlohmann::json metrics;         // metrics.json content on success
    nlohmann::json error;           // error.json content on failure
    std::optional<AttackReport> report;
};

// Never throws for run failures; they are reported through exit_code/error.
RunOutcome run_experiment(const RunConfig& config, const RunOptions& options = {});

// Independent runs for seeds first..last in parallel, ordered by seed.
std::vector<RunOutcome> run_sweep(const RunConfig& config, std::uint64_t first, std::uint64_t last);

// Creates <parent>/<stem>-<timestamp>[-k]; k starts at 2 if the name exists.
std::filesystem::path make_run_directory(const std::filesystem::path& parent, const std::string& stem,
                                         const std::optional<std::string>& timestamp = {});

std::string utc_timestamp();

std::string format_loss_history(const std::vector<LossRecord>& history);

nlohmann::json run_metrics(const RunConfig& config, const ResolvedRun& run, const AttackReport& report,
                           const Trajectory& control, const Trajectory& perturbed);

}  // namespace waapo::io
