#pragma once

// Attack objective: alignment with the adversarial target plus hinge
// penalties on the per-channel sup-norm and total variation of trajectory
// states, and the channel / spatial projection applied to perturbations.

#include <cstddef>
#include <vector>

#include "waapo/grid.hpp"
#include "waapo/surrogate.hpp"

namespace waapo {

struct PenaltyConfig {
    std::vector<double> lambda_inf;  // weight of the sup-norm hinge, >= 0
    std::vector<double> lambda_tv;   // weight of the TV hinge, >= 0
    std::vector<double> epsilon;     // sup-norm bound (field units), > 0
    std::vector<double> tau;         // TV bound, > 0

    // Same weights and bounds for every channel.
    static PenaltyConfig uniform(std::size_t channels, double lambda_inf, double lambda_tv,
                                 double epsilon, double tau);
    // All weights zero; bounds set to 1 so the config stays valid.
    static PenaltyConfig disabled(std::size_t channels);

    std::size_t channels() const { return epsilon.size(); }

    // Throws ArgumentError unless every vector has `channels` entries and the
    // sign constraints hold.
    void validate(std::size_t channels) const;

    bool operator==(const PenaltyConfig&) const = default;
};

// Inclusive range of time indices [first, last]; index 0 is the perturbed
// initial state Z_0 + delta.
struct TimeWindow {
    std::size_t first = 0;
    std::size_t last = 0;

    // [0, T-1]: the summation range of the optimisation listing.
    static TimeWindow leading(std::size_t horizon) { return {0, horizon - 1}; }
    // [1, T]: forecast states only.
    static TimeWindow forecast(std::size_t horizon) { return {1, horizon}; }

    bool operator==(const TimeWindow&) const = default;
};

struct LossParts {
    double primary = 0.0;
    double inf = 0.0;
    double tv = 0.0;
    double total = 0.0;
};

// ||Z_T - target||^2. Throws ShapeError.
double loss_primary(const Trajectory& traj, const StateGrid& target);

// sum_{t in window} sum_n lambda_inf_n * max(0, ||(Z_t)_n||_inf - eps_n).
// Throws BoundsError if the window leaves the trajectory.
double penalty_inf(const Trajectory& traj, const PenaltyConfig& penalties, TimeWindow window);

// sum_{t in window} sum_n lambda_tv_n * max(0, TV((Z_t)_n) - tau_n).
double penalty_tv(const Trajectory& traj, const PenaltyConfig& penalties, TimeWindow window);

// total = primary + inf + tv, in that order of addition.
LossParts total_loss(const Trajectory& traj, const StateGrid& target,
                     const PenaltyConfig& penalties, TimeWindow window);

// Cotangents of total_loss with respect to every Z_t: 2 (Z_T - target) at T
// plus the hinge subgradients at windowed t. Conventions: an inactive or
// exactly-at-bound hinge contributes nothing; a sup-norm tie sends the whole
// subgradient to the first maximising cell in row-major order; sign(0) = 0
// for TV differences.
CotangentMap total_loss_cotangents(const Trajectory& traj, const StateGrid& target,
                                   const PenaltyConfig& penalties, TimeWindow window);

// The objective above packaged for grad_check.
class AttackLoss final : public TrajectoryLoss {
public:
    AttackLoss(StateGrid target, PenaltyConfig penalties, TimeWindow window)
        : target_(std::move(target)), penalties_(std::move(penalties)), window_(window) {}

    double value(const Trajectory& traj) const override {
        return total_loss(traj, target_, penalties_, window_).total;
    }
    CotangentMap cotangents(const Trajectory& traj) const override {
        return total_loss_cotangents(traj, target_, penalties_, window_);
    }

private:
    StateGrid target_;
    PenaltyConfig penalties_;
    TimeWindow window_;
};

// Channels outside `channels` are zeroed, channels inside are multiplied by
// the mask cellwise. Throws ShapeError on mismatched mask or channel count.
StateGrid project(const StateGrid& delta, const ChannelSet& channels, const SpatialMask& mask);

}  // namespace waapo
