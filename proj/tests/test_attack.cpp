#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "waapo/attack.hpp"
#include "waapo/errors.hpp"

using namespace waapo;
using waapo::testing::bitwise_equal;
using waapo::testing::random_grid;

namespace {

SurrogateModel small_model() {
    SurrogateParams p;
    p.shape = GridShape(8, 12, 3);
    p.advection_shift = {1, -1, 2};
    p.seed = 5;
    return SurrogateModel(p);
}

struct Problem {
    SurrogateModel model = small_model();
    StateGrid z0 = random_grid(model.shape(), 1, 0.5);
    StateGrid target = rollout(model, random_grid(model.shape(), 2, 0.5), 3).final_state();
};

AttackConfig constrained_config(const Problem& pb, std::size_t K) {
    AttackConfig c;
    c.channels = ChannelSet(3, {0, 2});
    c.mask = make_patch_mask(8, 12, 2, 3, 4, 5);
    c.penalties = make_penalties(calibrate_constraints(pb.model, pb.z0, 3), 0.01, 0.01);
    c.optimizer.max_iterations = K;
    c.optimizer.learning_rate = 0.05;
    c.horizon = 3;
    c.target = pb.target;
    c.penalty_window = TimeWindow::leading(3);
    return c;
}

bool support_ok(const StateGrid& d, const ChannelSet& c, const SpatialMask& m) {
    const GridShape& s = d.shape();
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        for (std::size_t n = 0; n < s.channels; ++n) {
            const double v = d[cell * s.channels + n];
            const bool allowed = c.contains(n) && m[cell] != 0.0;
            if (!allowed && (v != 0.0 || std::signbit(v))) return false;
        }
    }
    return true;
}

}  // namespace

TEST(LearningRateSchedule, StepAndConstant) {
    const LearningRateSchedule s = LearningRateSchedule::step(0.5, 200);
    EXPECT_EQ(s.rate(0.01, 0), 0.01);
    EXPECT_EQ(s.rate(0.01, 199), 0.01);
    EXPECT_EQ(s.rate(0.01, 200), 0.005);
    EXPECT_EQ(s.rate(0.01, 999), 0.01 * 0.0625);
    EXPECT_EQ(LearningRateSchedule::constant().rate(0.01, 5000), 0.01);
}

TEST(OptimizerConfig, DefaultsAndValidation) {
    OptimizerConfig o;
    EXPECT_EQ(o.learning_rate, 0.01);
    EXPECT_EQ(o.max_iterations, 1000u);
    EXPECT_EQ(o.beta1, 0.9);
    EXPECT_EQ(o.beta2, 0.999);
    EXPECT_EQ(o.adam_epsilon, 1e-8);
    ASSERT_TRUE(o.clip_norm.has_value());
    EXPECT_EQ(*o.clip_norm, 1.0);
    EXPECT_EQ(o.schedule, LearningRateSchedule::step(0.5, 200));
    EXPECT_NO_THROW(o.validate());
    o.beta1 = 1.0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = OptimizerConfig{};
    o.learning_rate = 0.0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = OptimizerConfig{};
    o.clip_norm = -1.0;
    EXPECT_THROW(o.validate(), ArgumentError);
}

TEST(Adam, MatchesReferenceRecursion) {
    Adam adam(2, 0.9, 0.999, 1e-8);
    std::vector<double> x{1.0, -2.0};
    const std::vector<std::vector<double>> grads{{0.5, -0.25}, {0.1, 0.3}, {-0.2, 0.0}};
    double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
    for (std::size_t t = 1; t <= grads.size(); ++t) {
        adam.update(x, grads[t - 1], 0.01);
        for (int k = 0; k < 2; ++k) {
            const double g = grads[t - 1][k];
            m[k] = 0.9 * m[k] + 0.1 * g;
            v[k] = 0.999 * v[k] + 0.001 * g * g;
            const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
            ref[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
            EXPECT_NEAR(x[k], ref[k], 1e-15);
        }
    }
    EXPECT_EQ(adam.steps(), 3u);
}

TEST(ClipGlobalNorm, RescalesOnlyAboveThreshold) {
    StateGrid g(GridShape(1, 1, 2), {3.0, 4.0});
    EXPECT_EQ(clip_global_norm(g, 10.0), 5.0);
    EXPECT_EQ(g[0], 3.0);
    EXPECT_EQ(clip_global_norm(g, 1.0), 5.0);
    EXPECT_NEAR(frobenius_norm(g), 1.0, 1e-15);
    EXPECT_NEAR(g[0], 0.6, 1e-15);
}

TEST(Optimize, TargetEqualToCleanForecastKeepsDeltaNearZero) {
    const Problem pb;
    OptimizerConfig o;
    o.max_iterations = 50;
    const StateGrid target = rollout(pb.model, pb.z0, 3).final_state();
    const AttackReport r = unconstrained_attack(pb.model, pb.z0, target, 3, o);
    EXPECT_LT(frobenius_norm(r.delta), 1e-6);
    EXPECT_LE(r.final_alignment, r.baseline_alignment);
    EXPECT_EQ(r.baseline_alignment, 0.0);
}

TEST(Optimize, ZeroIterations) {
    const Problem pb;
    OptimizerConfig o;
    o.max_iterations = 0;
    const AttackReport r = unconstrained_attack(pb.model, pb.z0, pb.target, 3, o);
    EXPECT_EQ(frobenius_norm(r.delta), 0.0);
    EXPECT_EQ(r.final_alignment, r.baseline_alignment);
    EXPECT_TRUE(r.loss_history.empty());
    EXPECT_EQ(r.iterations_run, 0u);
}

TEST(Optimize, ReducesAlignmentAndRecordsConsistentHistory) {
    const Problem pb;
    OptimizerConfig o;
    o.max_iterations = 120;
    o.learning_rate = 0.05;
    const AttackReport r = unconstrained_attack(pb.model, pb.z0, pb.target, 3, o);
    EXPECT_LT(r.final_alignment, 0.1 * r.baseline_alignment);
    ASSERT_EQ(r.loss_history.size(), r.iterations_run);
    for (std::size_t k = 0; k < r.loss_history.size(); ++k) {
        const LossRecord& rec = r.loss_history[k];
        EXPECT_EQ(rec.iteration, k);
        EXPECT_EQ(rec.parts.total, rec.parts.primary + rec.parts.inf + rec.parts.tv);
        EXPECT_EQ(rec.learning_rate, o.schedule.rate(o.learning_rate, k));
    }
    EXPECT_EQ(r.loss_history.front().parts.primary, r.baseline_alignment);
}

TEST(Optimize, UnconstrainedWrapperIsDefinitional) {
    const Problem pb;
    OptimizerConfig o;
    o.max_iterations = 30;
    const AttackReport a = unconstrained_attack(pb.model, pb.z0, pb.target, 3, o);
    const AttackReport b = waapo_optimize(pb.model, pb.z0, unconstrained_config(pb.model, pb.target, 3, o));
    ASSERT_EQ(a.loss_history.size(), b.loss_history.size());
    for (std::size_t k = 0; k < a.loss_history.size(); ++k) {
        EXPECT_EQ(a.loss_history[k].parts.total, b.loss_history[k].parts.total);
        EXPECT_EQ(a.loss_history[k].grad_norm_preclip, b.loss_history[k].grad_norm_preclip);
    }
    EXPECT_TRUE(bitwise_equal(a.delta, b.delta));
}

TEST(Optimize, DeterministicReports) {
    const Problem pb;
    const AttackConfig c = constrained_config(pb, 40);
    const AttackReport a = waapo_optimize(pb.model, pb.z0, c), b = waapo_optimize(pb.model, pb.z0, c);
    EXPECT_TRUE(bitwise_equal(a.delta, b.delta));
    ASSERT_EQ(a.loss_history.size(), b.loss_history.size());
    for (std::size_t k = 0; k < a.loss_history.size(); ++k) {
        EXPECT_EQ(a.loss_history[k].parts.total, b.loss_history[k].parts.total);
    }
    EXPECT_EQ(a.final_alignment, b.final_alignment);
}

TEST(Optimize, EveryIterateSatisfiesTheSupportConstraint) {
    const Problem pb;
    const AttackConfig c = constrained_config(pb, 60);
    const std::set<std::size_t> sampled{7, 23, 51};
    std::size_t checked = 0;
    const AttackReport r = waapo_optimize(pb.model, pb.z0, c, [&](std::size_t k, const StateGrid& d, const LossRecord&) {
        EXPECT_TRUE(support_ok(d, c.channels, c.mask)) << "iterate " << k;
        if (sampled.count(k)) ++checked;
    });
    EXPECT_EQ(checked, 3u);
    EXPECT_TRUE(support_ok(r.delta, c.channels, c.mask));
    EXPECT_GT(frobenius_norm(r.delta), 0.0);
    EXPECT_LT(r.final_alignment, r.baseline_alignment);
}

TEST(Optimize, FirstRecordedGradientNormIsTheProjectedAdjointGradient) {
    const Problem pb;
    AttackConfig c = constrained_config(pb, 1);
    const Trajectory traj = rollout(pb.model, pb.z0, 3);
    const StateGrid grad = project(
        rollout_adjoint(pb.model, pb.z0, 3, total_loss_cotangents(traj, c.target, c.penalties, c.penalty_window)),
        c.channels, c.mask);
    const AttackReport r = waapo_optimize(pb.model, pb.z0, c);
    EXPECT_NEAR(r.loss_history[0].grad_norm_preclip, frobenius_norm(grad), 1e-12 * frobenius_norm(grad));
}

TEST(Optimize, KeepBestReturnsLowestIterate) {
    const Problem pb;
    AttackConfig c = constrained_config(pb, 80);
    c.optimizer.learning_rate = 2.0;  // large steps make the loss oscillate
    c.optimizer.clip_norm.reset();
    c.optimizer.schedule = LearningRateSchedule::constant();
    c.optimizer.keep_best = true;
    std::vector<StateGrid> iterates;
    const AttackReport r = waapo_optimize(pb.model, pb.z0, c, [&](std::size_t, const StateGrid& d, const LossRecord&) {
        iterates.push_back(d);
    });
    double lowest = r.loss_history[0].parts.total;
    for (const auto& rec : r.loss_history) lowest = std::min(lowest, rec.parts.total);
    EXPECT_LE(r.final_loss.total, lowest);
    if (r.best_iteration) {
        EXPECT_TRUE(bitwise_equal(r.delta, iterates[*r.best_iteration]));
        EXPECT_EQ(r.final_loss.total, r.loss_history[*r.best_iteration].parts.total);
    }
}

TEST(Optimize, DivergenceCarriesLastFiniteReport) {
    const Problem pb;
    OptimizerConfig o;
    o.max_iterations = 10;
    const StateGrid huge(pb.model.shape(), 1e200);
    try {
        unconstrained_attack(pb.model, huge, pb.target, 3, o);
        FAIL() << "expected divergence";
    } catch (const DivergedError& e) {
        EXPECT_EQ(e.iteration(), 0u);
        EXPECT_TRUE(e.last_finite().loss_history.empty());
        EXPECT_TRUE(e.last_finite().delta.all_finite());
    }
}

TEST(AttackConfig, Validation) {
    const Problem pb;
    AttackConfig c = constrained_config(pb, 1);
    c.mask = SpatialMask(8, 11, 1.0);
    EXPECT_THROW(c.validate(pb.model), ShapeError);
    c = constrained_config(pb, 1);
    c.penalty_window = {0, 4};
    EXPECT_THROW(c.validate(pb.model), BoundsError);
    c = constrained_config(pb, 1);
    c.target = StateGrid(GridShape(8, 12, 2));
    EXPECT_THROW(c.validate(pb.model), ShapeError);
    c = constrained_config(pb, 1);
    c.channels = ChannelSet::all(4);
    EXPECT_THROW(c.validate(pb.model), ShapeError);
}

TEST(Calibration, ZeroStateIsFlooredWithWarning) {
    const Problem pb;
    const CalibratedBounds b = calibrate_constraints(pb.model, StateGrid(pb.model.shape()), 3);
    for (std::size_t n = 0; n < 3; ++n) {
        EXPECT_EQ(b.epsilon[n], kCalibrationFloor);
        EXPECT_EQ(b.tau[n], kCalibrationFloor);
    }
    EXPECT_FALSE(b.warnings.empty());
    EXPECT_NO_THROW(make_penalties(b, 0.01, 0.01).validate(3));
}

TEST(Calibration, RotationPreservesMaxima) {
    SurrogateParams p;
    p.shape = GridShape(4, 6, 2);
    p.advection_shift = {1, 2};
    p.diffusion_weight = 0.0;
    p.nonlinearity_gain = 0.0;
    const SurrogateModel model(p, CouplingMatrix::identity(2));
    const StateGrid z0 = random_grid(p.shape, 3);
    const CalibratedBounds b = calibrate_constraints(model, z0, 5);
    for (std::size_t n = 0; n < 2; ++n) {
        EXPECT_EQ(b.epsilon[n], channel_inf_norm(z0, n));
        EXPECT_NEAR(b.tau[n], total_variation(z0, n), 1e-12);
    }
}

TEST(Calibration, MatchesRecomputationFromStoredTrajectory) {
    const Problem pb;
    const std::size_t T = 4;
    const CalibratedBounds b = calibrate_constraints(pb.model, pb.z0, T);
    const Trajectory traj = rollout(pb.model, pb.z0, T);
    for (std::size_t n = 0; n < 3; ++n) {
        double eps = 0.0, tau = 0.0;
        for (std::size_t t = 0; t <= T; ++t) {
            for (std::size_t cell = 0; cell < traj.at(t).shape().cells(); ++cell) {
                eps = std::max(eps, std::fabs(traj.at(t)[cell * 3 + n]));
            }
            tau += total_variation(traj.at(t), n);
        }
        EXPECT_EQ(b.epsilon[n], eps);
        EXPECT_NEAR(b.tau[n], tau / (T + 1), 1e-12);
    }
    EXPECT_TRUE(b.warnings.empty());
}

TEST(Calibration, OwnBoundsGiveZeroInfPenalty) {
    const Problem pb;
    const CalibratedBounds b = calibrate_constraints(pb.model, pb.z0, 3);
    const PenaltyConfig p = make_penalties(b, 0.01, 0.01);
    const Trajectory traj = rollout(pb.model, pb.z0, 3);
    EXPECT_EQ(penalty_inf(traj, p, {0, 3}), 0.0);
    EXPECT_EQ(penalty_inf(traj, p, TimeWindow::leading(3)), 0.0);
    EXPECT_EQ(penalty_inf(traj, p, TimeWindow::forecast(3)), 0.0);
}
