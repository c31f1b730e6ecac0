#pragma once

// Projected Adam optimisation of an initial-condition perturbation that
// steers the forecast toward an adversarial target, plus calibration of the
// penalty bounds from an unperturbed rollout.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waapo/errors.hpp"
#include "waapo/grid.hpp"
#include "waapo/objective.hpp"
#include "waapo/surrogate.hpp"

namespace waapo {

struct LearningRateSchedule {
    enum class Kind { constant, step };

    Kind kind = Kind::step;
    double decay_factor = 0.5;
    std::size_t decay_every = 200;

    static LearningRateSchedule constant() { return {Kind::constant, 1.0, 1}; }
    static LearningRateSchedule step(double factor, std::size_t every) {
        return {Kind::step, factor, every};
    }

    // base * factor^floor(k / every) for step decay.
    double rate(double base, std::size_t iteration) const;

    bool operator==(const LearningRateSchedule&) const = default;
};

struct OptimizerConfig {
    double learning_rate = 0.01;
    std::size_t max_iterations = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::optional<double> clip_norm = 1.0;  // global L2 over the whole gradient
    LearningRateSchedule schedule{};
    std::uint64_t seed = 0;  // recorded for provenance; the optimiser itself is deterministic
    bool keep_best = false;  // return the lowest-total-loss iterate instead of the last

    void validate() const;
    bool operator==(const OptimizerConfig&) const = default;
};

// Adam with bias correction over a flat parameter vector.
class Adam {
public:
    Adam(std::size_t size, double beta1, double beta2, double epsilon);

    // params -= lr * m_hat / (sqrt(v_hat) + epsilon)
    void update(std::span<double> params, std::span<const double> grad, double learning_rate);

    std::size_t steps() const { return steps_; }

private:
    double beta1_;
    double beta2_;
    double epsilon_;
    std::size_t steps_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

// Rescales `grad` in place to L2 norm `max_norm` if it is larger; returns the
// norm before clipping.
double clip_global_norm(StateGrid& grad, double max_norm);

struct AttackConfig {
    ChannelSet channels;
    SpatialMask mask;
    PenaltyConfig penalties;
    OptimizerConfig optimizer;
    std::size_t horizon = 1;
    StateGrid target;
    TimeWindow penalty_window{};

    // Throws ShapeError / ArgumentError / BoundsError when inconsistent with `model`.
    void validate(const SurrogateModel& model) const;
};

struct LossRecord {
    std::size_t iteration = 0;
    double learning_rate = 0.0;
    LossParts parts;
    double grad_norm_preclip = 0.0;
};

struct AttackReport {
    StateGrid delta;
    std::vector<LossRecord> loss_history;
    LossParts final_loss;  // objective at the returned delta
    double final_alignment = 0.0;     // ||phi_T(z0 + delta) - target||^2
    double baseline_alignment = 0.0;  // ||phi_T(z0) - target||^2
    std::size_t iterations_run = 0;
    std::optional<std::size_t> best_iteration;  // set when keep_best chose an earlier iterate
};

// Raised when the loss or its gradient stops being finite. Carries the report
// as of the last finite iterate.
class DivergedError : public Error {
public:
    DivergedError(std::size_t iteration, AttackReport last_finite);

    std::size_t iteration() const { return iteration_; }
    const AttackReport& last_finite() const { return last_finite_; }

private:
    std::size_t iteration_;
    AttackReport last_finite_;
};

// Sees delta^(k) together with the loss it produced, before the update.
using IterateObserver =
    std::function<void(std::size_t iteration, const StateGrid& delta, const LossRecord& record)>;

// Each iteration: rollout from z0 + delta, objective, adjoint gradient,
// projection of the gradient onto the feasible set, optional global-norm
// clipping, Adam step at the scheduled rate, projection of delta.
// delta starts at zero.
AttackReport waapo_optimize(const SurrogateModel& model, const StateGrid& z0,
                            const AttackConfig& config, const IterateObserver& observer = {});

// All channels, unit mask, no penalties.
AttackReport unconstrained_attack(const SurrogateModel& model, const StateGrid& z0,
                                  const StateGrid& target, std::size_t horizon,
                                  const OptimizerConfig& optimizer,
                                  const IterateObserver& observer = {});

AttackConfig unconstrained_config(const SurrogateModel& model, const StateGrid& target,
                                  std::size_t horizon, const OptimizerConfig& optimizer);

struct CalibratedBounds {
    std::vector<double> epsilon;  // max over t in [0, T] of ||(Z_t)_n||_inf
    std::vector<double> tau;      // mean over t in [0, T] of TV((Z_t)_n)
    std::vector<std::string> warnings;
};

inline constexpr double kCalibrationFloor = 1e-12;

// Bounds from the unperturbed rollout; zero bounds are lifted to
// kCalibrationFloor with a warning.
CalibratedBounds calibrate_constraints(const SurrogateModel& model, const StateGrid& z0,
                                       std::size_t horizon);

PenaltyConfig make_penalties(const CalibratedBounds& bounds, double lambda_inf, double lambda_tv);

}  // namespace waapo
