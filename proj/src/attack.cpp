#include "waapo/attack.hpp"

#include <algorithm>
#include <cmath>

namespace waapo {

double LearningRateSchedule::rate(double base, std::size_t iteration) const {
    if (kind == Kind::constant) return base;
    return base * std::pow(decay_factor, static_cast<double>(iteration / decay_every));
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ArgumentError("learning_rate must be finite and > 0");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ArgumentError("adam betas must lie in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw ArgumentError("adam_epsilon must be > 0");
    if (clip_norm && !(*clip_norm > 0.0)) throw ArgumentError("clip_norm must be > 0");
    if (schedule.kind == LearningRateSchedule::Kind::step) {
        if (!(schedule.decay_factor > 0.0) || schedule.decay_every == 0) {
            throw ArgumentError("step schedule needs decay_factor > 0 and decay_every >= 1");
        }
    }
}

Adam::Adam(std::size_t size, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::update(std::span<double> params, std::span<const double> grad, double learning_rate) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw ShapeError("adam state holds " + std::to_string(m_.size()) + " parameters");
    }
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double correction1 = 1.0 - std::pow(beta1_, t);
    const double correction2 = 1.0 - std::pow(beta2_, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
        const double m_hat = m_[k] / correction1;
        const double v_hat = v_[k] / correction2;
        params[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
}

double clip_global_norm(StateGrid& grad, double max_norm) {
    const double norm = frobenius_norm(grad);
    if (norm > max_norm) grad *= max_norm / norm;
    return norm;
}

void AttackConfig::validate(const SurrogateModel& model) const {
    const GridShape& shape = model.shape();
    if (horizon == 0) throw ArgumentError("attack horizon must be >= 1");
    require_same_shape(target.shape(), shape, "adversarial target");
    if (!mask.matches(shape)) throw ShapeError("spatial mask does not match the model grid");
    if (channels.channel_count() != shape.channels) {
        throw ShapeError("channel set does not match the model channel count");
    }
    if (penalty_window.first > penalty_window.last || penalty_window.last > horizon) {
        throw BoundsError("penalty window must lie within [0, horizon]");
    }
    penalties.validate(shape.channels);
    optimizer.validate();
    if (!target.all_finite()) throw ArgumentError("adversarial target has non-finite values");
}

DivergedError::DivergedError(std::size_t iteration, AttackReport last_finite)
    : Error("optimisation diverged at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      last_finite_(std::move(last_finite)) {}

namespace {

bool finite(const LossParts& p) {
    return std::isfinite(p.primary) && std::isfinite(p.inf) && std::isfinite(p.tv) &&
           std::isfinite(p.total);
}

}  // namespace

AttackReport waapo_optimize(const SurrogateModel& model, const StateGrid& z0,
                            const AttackConfig& config, const IterateObserver& observer) {
    config.validate(model);
    require_same_shape(z0.shape(), model.shape(), "initial state");
    const OptimizerConfig& opt = config.optimizer;

    AttackReport report;
    report.delta = StateGrid(z0.shape());
    report.baseline_alignment = loss_primary(rollout(model, z0, config.horizon), config.target);
    report.loss_history.reserve(opt.max_iterations);

    Adam adam(z0.size(), opt.beta1, opt.beta2, opt.adam_epsilon);
    StateGrid& delta = report.delta;
    std::optional<StateGrid> best_delta;
    double best_total = 0.0;
    std::size_t best_k = 0;
    // Latest iterate whose loss and gradient were finite.
    StateGrid last_finite_delta = delta;

    auto diverge = [&](std::size_t k) {
        report.delta = last_finite_delta;
        report.iterations_run = report.loss_history.size();
        report.final_alignment = report.loss_history.empty()
                                     ? report.baseline_alignment
                                     : report.loss_history.back().parts.primary;
        if (!report.loss_history.empty()) report.final_loss = report.loss_history.back().parts;
        throw DivergedError(k, report);
    };

    for (std::size_t k = 0; k < opt.max_iterations; ++k) {
        const RolloutTape tape = record_rollout(model, z0 + delta, config.horizon);
        LossRecord record;
        record.iteration = k;
        record.learning_rate = opt.schedule.rate(opt.learning_rate, k);
        record.parts = total_loss(tape.trajectory, config.target, config.penalties,
                                  config.penalty_window);
        if (!finite(record.parts)) diverge(k);

        StateGrid grad = backpropagate(
            model, tape,
            total_loss_cotangents(tape.trajectory, config.target, config.penalties,
                                  config.penalty_window));
        // Masked coordinates get zero gradient so the Adam moments stay on the
        // feasible set.
        grad = project(grad, config.channels, config.mask);
        if (!grad.all_finite()) diverge(k);
        last_finite_delta = delta;
        record.grad_norm_preclip =
            opt.clip_norm ? clip_global_norm(grad, *opt.clip_norm) : frobenius_norm(grad);

        if (observer) observer(k, delta, record);
        if (opt.keep_best && (!best_delta || record.parts.total < best_total)) {
            best_delta = delta;
            best_total = record.parts.total;
            best_k = k;
        }
        report.loss_history.push_back(record);

        adam.update(delta.values(), grad.values(), record.learning_rate);
        delta = project(delta, config.channels, config.mask);
        if (!delta.all_finite()) diverge(k);
    }

    report.iterations_run = report.loss_history.size();
    report.final_loss = total_loss(rollout(model, z0 + delta, config.horizon), config.target,
                                   config.penalties, config.penalty_window);
    if (!finite(report.final_loss)) diverge(opt.max_iterations);
    if (best_delta && best_total < report.final_loss.total) {
        delta = *best_delta;
        report.best_iteration = best_k;
        report.final_loss = report.loss_history[best_k].parts;
    }
    report.final_alignment = report.final_loss.primary;
    return report;
}

AttackConfig unconstrained_config(const SurrogateModel& model, const StateGrid& target,
                                  std::size_t horizon, const OptimizerConfig& optimizer) {
    const GridShape& shape = model.shape();
    AttackConfig config;
    config.channels = ChannelSet::all(shape.channels);
    config.mask = SpatialMask::ones(shape);
    config.penalties = PenaltyConfig::disabled(shape.channels);
    config.optimizer = optimizer;
    config.horizon = horizon;
    config.target = target;
    config.penalty_window = TimeWindow::leading(horizon);
    return config;
}

AttackReport unconstrained_attack(const SurrogateModel& model, const StateGrid& z0,
                                  const StateGrid& target, std::size_t horizon,
                                  const OptimizerConfig& optimizer,
                                  const IterateObserver& observer) {
    if (horizon == 0) throw ArgumentError("attack horizon must be >= 1");
    return waapo_optimize(model, z0, unconstrained_config(model, target, horizon, optimizer),
                          observer);
}

CalibratedBounds calibrate_constraints(const SurrogateModel& model, const StateGrid& z0,
                                       std::size_t horizon) {
    const Trajectory traj = rollout(model, z0, horizon);
    const std::size_t channels = model.shape().channels;
    CalibratedBounds bounds;
    bounds.epsilon.assign(channels, 0.0);
    bounds.tau.assign(channels, 0.0);
    for (std::size_t t = 0; t <= horizon; ++t) {
        const StateGrid& z = traj.at(t);
        for (std::size_t n = 0; n < channels; ++n) {
            bounds.epsilon[n] = std::max(bounds.epsilon[n], channel_inf_norm(z, n));
            bounds.tau[n] += total_variation(z, n);
        }
    }
    for (std::size_t n = 0; n < channels; ++n) {
        bounds.tau[n] /= static_cast<double>(horizon + 1);
        if (bounds.epsilon[n] < kCalibrationFloor) {
            bounds.warnings.push_back("channel " + std::to_string(n) +
                                      ": calibrated epsilon is 0, lifted to 1e-12");
            bounds.epsilon[n] = kCalibrationFloor;
        }
        if (bounds.tau[n] < kCalibrationFloor) {
            bounds.warnings.push_back("channel " + std::to_string(n) +
                                      ": calibrated tau is 0, lifted to 1e-12");
            bounds.tau[n] = kCalibrationFloor;
        }
    }
    return bounds;
}

PenaltyConfig make_penalties(const CalibratedBounds& bounds, double lambda_inf, double lambda_tv) {
    const std::size_t n = bounds.epsilon.size();
    return {std::vector<double>(n, lambda_inf), std::vector<double>(n, lambda_tv), bounds.epsilon,
            bounds.tau};
}

}  // namespace waapo
