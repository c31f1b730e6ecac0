#include "waapo/objective.hpp"

#include <cmath>

#include "waapo/errors.hpp"

namespace waapo {

PenaltyConfig PenaltyConfig::uniform(std::size_t channels, double lambda_inf, double lambda_tv,
                                     double epsilon, double tau) {
    return {std::vector<double>(channels, lambda_inf), std::vector<double>(channels, lambda_tv),
            std::vector<double>(channels, epsilon), std::vector<double>(channels, tau)};
}

PenaltyConfig PenaltyConfig::disabled(std::size_t channels) {
    return uniform(channels, 0.0, 0.0, 1.0, 1.0);
}

void PenaltyConfig::validate(std::size_t channels) const {
    if (lambda_inf.size() != channels || lambda_tv.size() != channels ||
        epsilon.size() != channels || tau.size() != channels) {
        throw ArgumentError("penalty vectors must have one entry per channel (" +
                            std::to_string(channels) + ")");
    }
    for (std::size_t n = 0; n < channels; ++n) {
        if (!(lambda_inf[n] >= 0.0) || !(lambda_tv[n] >= 0.0) || !std::isfinite(lambda_inf[n]) ||
            !std::isfinite(lambda_tv[n])) {
            throw ArgumentError("penalty weights must be finite and >= 0");
        }
        if (!(epsilon[n] > 0.0) || !(tau[n] > 0.0) || !std::isfinite(epsilon[n]) ||
            !std::isfinite(tau[n])) {
            throw ArgumentError("penalty bounds epsilon and tau must be finite and > 0");
        }
    }
}

namespace {

void check_window(const Trajectory& traj, TimeWindow window) {
    if (window.first > window.last || window.last > traj.horizon()) {
        throw BoundsError("penalty window [" + std::to_string(window.first) + ", " +
                          std::to_string(window.last) + "] outside [0, " +
                          std::to_string(traj.horizon()) + "]");
    }
}

void check_penalties(const Trajectory& traj, const PenaltyConfig& penalties) {
    penalties.validate(traj.initial.shape().channels);
}

}  // namespace

double loss_primary(const Trajectory& traj, const StateGrid& target) {
    if (traj.states.empty()) throw ArgumentError("trajectory has no forecast states");
    const StateGrid& last = traj.final_state();
    require_same_shape(last.shape(), target.shape(), "loss_primary");
    double sum = 0.0;
    for (std::size_t k = 0; k < last.size(); ++k) {
        const double r = last[k] - target[k];
        sum += r * r;
    }
    return sum;
}

double penalty_inf(const Trajectory& traj, const PenaltyConfig& penalties, TimeWindow window) {
    check_window(traj, window);
    check_penalties(traj, penalties);
    double sum = 0.0;
    for (std::size_t t = window.first; t <= window.last; ++t) {
        const StateGrid& z = traj.at(t);
        for (std::size_t n = 0; n < z.shape().channels; ++n) {
            if (penalties.lambda_inf[n] == 0.0) continue;
            const double excess = channel_inf_norm(z, n) - penalties.epsilon[n];
            if (excess > 0.0) sum += penalties.lambda_inf[n] * excess;
        }
    }
    return sum;
}

double penalty_tv(const Trajectory& traj, const PenaltyConfig& penalties, TimeWindow window) {
    check_window(traj, window);
    check_penalties(traj, penalties);
    double sum = 0.0;
    for (std::size_t t = window.first; t <= window.last; ++t) {
        const StateGrid& z = traj.at(t);
        for (std::size_t n = 0; n < z.shape().channels; ++n) {
            if (penalties.lambda_tv[n] == 0.0) continue;
            const double excess = total_variation(z, n) - penalties.tau[n];
            if (excess > 0.0) sum += penalties.lambda_tv[n] * excess;
        }
    }
    return sum;
}

LossParts total_loss(const Trajectory& traj, const StateGrid& target,
                     const PenaltyConfig& penalties, TimeWindow window) {
    LossParts parts;
    parts.primary = loss_primary(traj, target);
    parts.inf = penalty_inf(traj, penalties, window);
    parts.tv = penalty_tv(traj, penalties, window);
    parts.total = parts.primary + parts.inf + parts.tv;
    return parts;
}

CotangentMap total_loss_cotangents(const Trajectory& traj, const StateGrid& target,
                                   const PenaltyConfig& penalties, TimeWindow window) {
    check_window(traj, window);
    check_penalties(traj, penalties);
    const std::size_t horizon = traj.horizon();
    require_same_shape(traj.final_state().shape(), target.shape(), "loss cotangent");

    CotangentMap cot;
    StateGrid& at_final = cot.try_emplace(horizon, target.shape()).first->second;
    const StateGrid& last = traj.final_state();
    for (std::size_t k = 0; k < last.size(); ++k) at_final[k] = 2.0 * (last[k] - target[k]);

    for (std::size_t t = window.first; t <= window.last; ++t) {
        const StateGrid& z = traj.at(t);
        for (std::size_t n = 0; n < z.shape().channels; ++n) {
            const double li = penalties.lambda_inf[n];
            if (li != 0.0) {
                const std::size_t k = channel_inf_argmax(z, n);
                if (std::abs(z[k]) - penalties.epsilon[n] > 0.0) {
                    StateGrid& g = cot.try_emplace(t, z.shape()).first->second;
                    g[k] += li * (z[k] > 0.0 ? 1.0 : -1.0);
                }
            }
            const double lt = penalties.lambda_tv[n];
            if (lt != 0.0 && total_variation(z, n) - penalties.tau[n] > 0.0) {
                StateGrid& g = cot.try_emplace(t, z.shape()).first->second;
                accumulate_tv_subgradient(z, n, lt, g);
            }
        }
    }
    return cot;
}

StateGrid project(const StateGrid& delta, const ChannelSet& channels, const SpatialMask& mask) {
    const GridShape& s = delta.shape();
    if (!mask.matches(s)) {
        throw ShapeError("projection mask " + std::to_string(mask.lat()) + "x" +
                         std::to_string(mask.lon()) + " does not match grid " + s.str());
    }
    if (channels.channel_count() != s.channels) {
        throw ShapeError("channel set over " + std::to_string(channels.channel_count()) +
                         " channels applied to grid " + s.str());
    }
    StateGrid out(s);
    for (std::size_t n : channels.members()) {
        for (std::size_t cell = 0; cell < s.cells(); ++cell) {
            const std::size_t k = cell * s.channels + n;
            // Explicit +0.0 so masked-out cells are bitwise zero even for negative inputs.
            out[k] = mask[cell] == 0.0 ? 0.0 : mask[cell] * delta[k];
        }
    }
    return out;
}

}  // namespace waapo
