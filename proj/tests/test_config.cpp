#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "waapo/errors.hpp"
#include "waapo/io/experiment.hpp"
#include "waapo/io/grid_file.hpp"
#include "waapo/io/run_config.hpp"

using namespace waapo;
using namespace waapo::io;
using waapo::testing::bitwise_equal;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "waapo-config-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Channel-only preset shrunk so a run takes milliseconds.
RunConfig small_config(const fs::path& out) {
    RunConfig c = preset("channel-only");
    c.model.shape = GridShape(8, 16, 4);
    c.horizon = 3;
    c.optimizer.max_iterations = 15;
    c.output_directory = out;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WAAPO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, PresetsRoundTripThroughText) {
    for (const auto& name : preset_names()) {
        const RunConfig c = preset(name);
        EXPECT_NO_THROW(c.validate()) << name;
        EXPECT_EQ(parse_run_config(format_run_config(c), name), c) << name;
    }
    EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(RunConfig, CustomValuesRoundTrip) {
    RunConfig c = preset("patch");
    c.model.diffusion_weight = 0.1 + 0.02;
    c.optimizer.clip_norm.reset();
    c.optimizer.schedule.kind = LearningRateSchedule::Kind::constant;
    c.window = WindowKind::custom;
    c.custom_window = {2, 5};
    c.channel_penalties["u10"].tau = 3.25;
    c.pmrg_sampled_seed = 11;
    c.initial_file = "/tmp/x y.grd";
    EXPECT_EQ(parse_run_config(format_run_config(c), "custom"), c);
}

TEST(RunConfig, PresetKeyThenOverrides) {
    const RunConfig c = parse_run_config(
        "preset = patch\n"
        "# a comment\n"
        "[optimizer]\n"
        "max_iterations = 5 \n"
        "; another comment\n"
        "[penalties.t2m]\n"
        "lambda_tv = 0\n",
        "mem");
    RunConfig want = preset("patch");
    want.optimizer.max_iterations = 5;
    want.channel_penalties["t2m"].lambda_tv = 0.0;
    EXPECT_EQ(c, want);
}

TEST(RunConfig, RejectsUnknownKeysAndSections) {
    try {
        parse_run_config("[optimizer]\nlearning_rat = 0.1\n", "bad.ini");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bad.ini"), std::string::npos) << msg;
        EXPECT_NE(msg.find("learning_rat"), std::string::npos) << msg;
    }
    EXPECT_THROW(parse_run_config("[optimiser]\nseed = 1\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("colour = red\n", "mem"), ConfigError);
}

TEST(RunConfig, RejectsDuplicatesAndBadValues) {
    EXPECT_THROW(parse_run_config("[optimizer]\nseed = 1\nseed = 2\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[optimizer]\nseed = 1\n[optimizer]\nbeta1 = 0.8\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[optimizer]\nlearning_rate = fast\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[optimizer]\nmax_iterations = -3\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[model]\nshape = 4, 4\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[attack]\npenalty_window = 3..1\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[output]\nemit_rasters = maybe\n", "mem"), ConfigError);
    EXPECT_THROW(parse_run_config("[model\n", "mem"), ConfigError);
}

TEST(RunConfig, ValidateResolvesNames) {
    RunConfig c = preset("channel-only");
    c.attack_channels = {"t2m", "q850"};
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("channel-only");
    c.channel_penalties["q850"].tau = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("patch");
    c.patch->lon_origin = 60;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("patch");
    c.horizon = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("channel-only");
    c.channel_names = {"a", "b", "c", "a"};
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("unconstrained");
    EXPECT_EQ(c.channel_set().size(), 4u);
    EXPECT_EQ(preset("channel-only").channel_index("t2m"), 0u);
}

TEST(RunConfig, SeedMapping) {
    RunConfig c = preset("patch");
    c.set_seed(40);
    EXPECT_EQ(c.initial_seed, 40u);
    EXPECT_EQ(c.target_seed, 41u);
    EXPECT_EQ(c.optimizer.seed, 40u);
}

TEST(RunConfig, PenaltyWindows) {
    RunConfig c = preset("patch");
    EXPECT_EQ(c.penalty_window().first, 0u);
    EXPECT_EQ(c.penalty_window().last, c.horizon - 1);
    c.window = WindowKind::forecast;
    EXPECT_EQ(c.penalty_window().first, 1u);
    EXPECT_EQ(c.penalty_window().last, c.horizon);
}

TEST(Experiment, WritesEveryArtifact) {
    const fs::path out = fresh_dir("artifacts");
    const RunOutcome r = run_experiment(small_config(out), {"T0"});
    ASSERT_EQ(r.exit_code, kExitOk) << r.error.dump();
    EXPECT_EQ(r.run_dir.filename(), "channel-only-seed7-T0");
    for (const char* f : {"config.ini", "coupling.grd", "initial.grd", "target.grd", "delta.grd",
                          "trajectory_control.grd", "trajectory_perturbed.grd", "loss_history.csv",
                          "diff_target_t2m.ppm", "diff_truth_t2m.ppm", "delta_t2m.ppm", "metrics.json"}) {
        EXPECT_TRUE(fs::exists(r.run_dir / f)) << f;
    }
    EXPECT_FALSE(fs::exists(r.run_dir / "error.json"));

    const LoadedGrid delta = load_grid(r.run_dir / "delta.grd");
    EXPECT_EQ(delta.channel_names, (std::vector<std::string>{"t2m", "u10", "v10", "sp"}));
    for (std::size_t n = 1; n < 4; ++n) EXPECT_EQ(channel_inf_norm(delta.grid, n), 0.0);
    EXPECT_GT(channel_inf_norm(delta.grid, 0), 0.0);
    EXPECT_EQ(r.metrics["stealth"]["nonzero_channels"], 1);
    EXPECT_EQ(load_grid(r.run_dir / "trajectory_perturbed.grd").grid.shape().channels, 16u);

    const std::string csv = slurp(r.run_dir / "loss_history.csv");
    EXPECT_EQ(csv.rfind("iter,lr,l_primary,l_inf,l_tv,total,grad_norm_preclip\r\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);

    // The snapshot reproduces the run.
    RunConfig again = load_run_config(r.run_dir / "config.ini");
    EXPECT_EQ(again, small_config(out));
    const RunOutcome r2 = run_experiment(again, {"T0"});
    ASSERT_EQ(r2.exit_code, kExitOk);
    EXPECT_EQ(r2.run_dir.filename(), "channel-only-seed7-T0-2");
    EXPECT_EQ(slurp(r.run_dir / "metrics.json"), slurp(r2.run_dir / "metrics.json"));
    EXPECT_EQ(slurp(r.run_dir / "delta.grd"), slurp(r2.run_dir / "delta.grd"));
}

TEST(Experiment, OptionalArtifactsCanBeSkipped) {
    RunConfig c = small_config(fresh_dir("skip"));
    c.emit_rasters = false;
    c.emit_trajectories = false;
    const RunOutcome r = run_experiment(c, {"T0"});
    ASSERT_EQ(r.exit_code, kExitOk);
    EXPECT_FALSE(fs::exists(r.run_dir / "delta_t2m.ppm"));
    EXPECT_FALSE(fs::exists(r.run_dir / "trajectory_control.grd"));
    EXPECT_TRUE(fs::exists(r.run_dir / "metrics.json"));
}

TEST(Experiment, LoadsStatesFromFiles) {
    const fs::path out = fresh_dir("files");
    RunConfig c = small_config(out);
    const ResolvedRun base = resolve_run(c);
    save_grid(out / "z0.grd", base.initial, c.channel_names);
    save_grid(out / "target.grd", base.target, c.channel_names);
    c.initial_file = out / "z0.grd";
    c.target_file = out / "target.grd";
    const ResolvedRun loaded = resolve_run(c);
    EXPECT_TRUE(bitwise_equal(loaded.initial, base.initial));
    EXPECT_TRUE(bitwise_equal(loaded.target, base.target));

    save_grid(out / "wrong.grd", StateGrid(GridShape(8, 16, 3)), {"a", "b", "c"});
    c.initial_file = out / "wrong.grd";
    EXPECT_THROW(resolve_run(c), ConfigError);
}

TEST(Experiment, FailuresMapToExitCodes) {
    const fs::path out = fresh_dir("failures");
    RunConfig c = small_config(out);
    c.initial_file = out / "missing.grd";
    RunOutcome r = run_experiment(c, {"T0"});
    EXPECT_EQ(r.exit_code, kExitIo);
    EXPECT_EQ(r.error["exit_code"], kExitIo);

    save_grid(out / "huge.grd", StateGrid(c.model.shape, 1e200), c.channel_names);
    c.initial_file = out / "huge.grd";
    r = run_experiment(c, {"T1"});
    EXPECT_EQ(r.exit_code, kExitDiverged);
    ASSERT_FALSE(r.run_dir.empty());
    EXPECT_TRUE(fs::exists(r.run_dir / "error.json"));
    EXPECT_TRUE(fs::exists(r.run_dir / "delta_last_finite.grd"));
    EXPECT_FALSE(fs::exists(r.run_dir / "metrics.json"));
    EXPECT_EQ(r.error["iteration"], 0);

    c = small_config(out);
    c.attack_channels = {"nope"};
    EXPECT_EQ(run_experiment(c, {"T2"}).exit_code, kExitConfig);
}

TEST(Experiment, SweepIsOrderedAndIndependent) {
    RunConfig c = small_config(fresh_dir("sweep"));
    c.emit_rasters = false;
    const auto runs = run_sweep(c, 3, 5);
    ASSERT_EQ(runs.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        ASSERT_EQ(runs[k].exit_code, kExitOk);
        EXPECT_EQ(runs[k].metrics["seeds"]["initial"], 3 + k);
    }
    RunConfig single = c;
    single.set_seed(4);
    const RunOutcome alone = run_experiment(single, {"T9"});
    EXPECT_EQ(alone.metrics.dump(), runs[1].metrics.dump());
}

TEST(Experiment, RunDirectoryNames) {
    const fs::path parent = fresh_dir("names");
    EXPECT_EQ(make_run_directory(parent, "x", "20260101T000000Z").filename(), "x-20260101T000000Z");
    EXPECT_EQ(make_run_directory(parent, "x", "20260101T000000Z").filename(), "x-20260101T000000Z-2");
    EXPECT_EQ(make_run_directory(parent, "x", "20260101T000000Z").filename(), "x-20260101T000000Z-3");
    const std::string ts = utc_timestamp();
    EXPECT_EQ(ts.size(), 16u);
    EXPECT_EQ(ts[8], 'T');
    EXPECT_EQ(ts.back(), 'Z');
}

TEST(Cli, ExitCodes) {
    const fs::path dir = fresh_dir("cli");
    RunConfig c = small_config(dir / "runs");
    c.emit_rasters = false;
    {
        std::ofstream(dir / "ok.ini") << format_run_config(c);
        std::ofstream(dir / "bad.ini") << "[optimizer]\nlearning_rat = 1\n";
    }
    const std::string cfg = " --config " + (dir / "ok.ini").string();
    EXPECT_EQ(run_cli("run" + cfg), 0);
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.ini").string()), 2);
    EXPECT_EQ(run_cli("run --config " + (dir / "absent.ini").string()), 4);
    EXPECT_EQ(run_cli("run --preset channel-only --config " + (dir / "ok.ini").string()), 2);
    EXPECT_EQ(run_cli("run --bogus-flag"), 2);
    EXPECT_EQ(run_cli("run --preset nope"), 2);

    save_grid(dir / "huge.grd", StateGrid(c.model.shape, 1e200), c.channel_names);
    c.initial_file = dir / "huge.grd";
    std::ofstream(dir / "diverge.ini") << format_run_config(c);
    EXPECT_EQ(run_cli("run --config " + (dir / "diverge.ini").string()), 3);

    EXPECT_EQ(run_cli("inspect " + (dir / "huge.grd").string()), 0);
    EXPECT_EQ(run_cli("inspect " + (dir / "absent.grd").string()), 4);
    std::ofstream(dir / "junk.grd") << "not a grid";
    EXPECT_EQ(run_cli("inspect " + (dir / "junk.grd").string()), 4);
    EXPECT_EQ(run_cli("render " + (dir / "huge.grd").string() + " --minus " + (dir / "huge.grd").string() +
                      " -o " + (dir / "d.ppm").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "d.ppm"));
    EXPECT_EQ(run_cli("calibrate" + cfg + " --out " + (dir / "cal").string()), 0);
    EXPECT_EQ(run_cli("grad-check" + cfg + " --samples 8 --out " + (dir / "gc").string()), 0);
    EXPECT_EQ(run_cli("ensemble" + cfg + " --members 3 --out " + (dir / "ens").string()), 0);
}
