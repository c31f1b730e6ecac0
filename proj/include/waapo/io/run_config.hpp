#pragma once

// Run configuration: an INI document with sections
//
//   [model]      grid shape, channel names, seed and physics parameters
//   [attack]     channels by name, patch or mask file, horizon, initial / target states
//   [penalties]  defaults for every channel, "bounds = calibrate" or explicit values
//   [penalties.<channel>]  per-channel overrides (one block per table row)
//   [optimizer]  Adam, clipping and schedule settings
//   [output]     run directory and what to emit
//
// Unknown sections or keys are errors. Named presets reproduce the
// experiment suite at desk scale; a config file may also start from a preset
// ("[attack] preset = patch") and override individual keys.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "waapo/attack.hpp"
#include "waapo/io/synthetic.hpp"
#include "waapo/surrogate.hpp"

namespace waapo::io {

struct PatchSpec {
    std::size_t lat_origin = 0;
    std::size_t lon_origin = 0;
    std::size_t lat_size = 1;
    std::size_t lon_size = 1;

    bool operator==(const PatchSpec&) const = default;
};

struct ChannelPenaltyOverride {
    std::optional<double> lambda_inf;
    std::optional<double> lambda_tv;
    std::optional<double> epsilon;
    std::optional<double> tau;

    bool operator==(const ChannelPenaltyOverride&) const = default;
};

enum class WindowKind { leading, forecast, custom };

struct RunConfig {
    std::string preset = "custom";

    // [model]
    SurrogateParams model;
    std::vector<std::string> channel_names{"t2m", "u10", "v10", "sp"};

    // [attack]
    std::vector<std::string> attack_channels{"all"};
    std::optional<PatchSpec> patch;
    std::optional<std::filesystem::path> mask_file;
    std::size_t mask_taper = 0;
    std::size_t horizon = 8;
    SyntheticOptions initial_options{InitialStyle::zonal_bands, 8, 0.3};
    std::uint64_t initial_seed = 7;
    std::optional<std::filesystem::path> initial_file;
    std::uint64_t target_seed = 8;
    std::optional<std::filesystem::path> target_file;
    WindowKind window = WindowKind::leading;
    TimeWindow custom_window{};

    // [penalties]
    bool calibrate = true;
    double lambda_inf = 0.01;
    double lambda_tv = 0.01;
    double epsilon = 1.0;  // used when calibrate = false
    double tau = 1.0;
    std::map<std::string, ChannelPenaltyOverride> channel_penalties;

    // [optimizer]
    OptimizerConfig optimizer{};

    // [output]
    std::filesystem::path output_directory = "runs";
    bool emit_trajectories = true;
    bool emit_rasters = true;
    std::string render_channel = "t2m";
    double clip_quantile = 0.99;
    double pmrg_sigma = 0.3;
    // Also report PMRG against one sampled sigma-scaled Gaussian field.
    std::optional<std::uint64_t> pmrg_sampled_seed;

    // Applies the experiment seed: initial state from `seed`, target initial
    // state from `seed + 1`, optimizer provenance seed `seed`.
    void set_seed(std::uint64_t seed);

    // Structural checks that need no files (channel names resolve, patch
    // fits, ...). Throws ConfigError.
    void validate() const;

    TimeWindow penalty_window() const;
    ChannelSet channel_set() const;
    std::size_t channel_index(const std::string& name) const;  // throws ConfigError

    bool operator==(const RunConfig&) const = default;
};

// unconstrained, channel-only, patch, patch-smooth, patch-rough
const std::vector<std::string>& preset_names();
RunConfig preset(const std::string& name);  // throws ConfigError for unknown names

RunConfig parse_run_config(const std::string& text, const std::string& source);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical INI text; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& config);

std::vector<std::string> split_list(const std::string& text);

}  // namespace waapo::io
