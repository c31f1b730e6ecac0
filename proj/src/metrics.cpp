#include "waapo/metrics.hpp"

#include <cmath>

#include "waapo/errors.hpp"
#include "waapo/parallel.hpp"
#include "waapo/rng.hpp"

namespace waapo {

double pmrg(const StateGrid& delta, double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("pmrg needs sigma > 0");
    const double cells = static_cast<double>(delta.shape().size());
    return frobenius_norm(delta) / (sigma * std::sqrt(cells));
}

StateGrid gaussian_field(const GridShape& shape, std::uint64_t seed) {
    StateGrid g(shape);
    NormalStream rng(seed);
    for (double& v : g.values()) v = rng.normal();
    return g;
}

double pmrg_sampled(const StateGrid& delta, double sigma, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw ArgumentError("pmrg needs sigma > 0");
    return frobenius_norm(delta) / (sigma * frobenius_norm(gaussian_field(delta.shape(), seed)));
}

void EnsembleSpec::validate() const {
    if (members == 0) throw ArgumentError("ensemble needs at least one member");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ArgumentError("ensemble sigma must be finite and >= 0");
    }
}

EnsembleResult gaussian_ensemble(const SurrogateModel& model, const StateGrid& z0,
                                 const EnsembleSpec& spec, std::size_t horizon) {
    spec.validate();
    EnsembleResult result;
    result.control = rollout(model, z0, horizon);
    result.members.resize(spec.members);
    parallel_for(spec.members, [&](std::size_t k) {
        StateGrid start = z0;
        const StateGrid noise = gaussian_field(z0.shape(), stream_seed(spec.seed, k));
        for (std::size_t c = 0; c < start.size(); ++c) start[c] += spec.sigma * noise[c];
        result.members[k] = rollout(model, start, horizon);
    });

    // Fixed member order keeps the mean independent of scheduling.
    const double inv = 1.0 / static_cast<double>(spec.members);
    auto average = [&](std::size_t t) {
        StateGrid sum(z0.shape());
        for (const auto& m : result.members) sum += m.at(t);
        if (spec.members > 1) sum *= inv;
        return sum;
    };
    result.mean.initial = average(0);
    for (std::size_t t = 1; t <= horizon; ++t) result.mean.states.push_back(average(t));
    return result;
}

double rmse(const StateGrid& a, const StateGrid& b) {
    require_same_shape(a.shape(), b.shape(), "rmse");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double channel_rmse(const StateGrid& a, const StateGrid& b, std::size_t n) {
    require_same_shape(a.shape(), b.shape(), "rmse");
    const GridShape& s = a.shape();
    if (n >= s.channels) throw RangeError("channel " + std::to_string(n) + " out of range");
    double sum = 0.0;
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        const double d = a[cell * s.channels + n] - b[cell * s.channels + n];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(s.cells()));
}

namespace {

double squared_distance(const StateGrid& a, const StateGrid& b) {
    require_same_shape(a.shape(), b.shape(), "alignment");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
    return sum;
}

}  // namespace

AlignmentMetrics alignment_metrics(const Trajectory& perturbed, const Trajectory& control,
                                   const StateGrid& target, const StateGrid& ground_truth) {
    const StateGrid& pert = perturbed.final_state();
    const StateGrid& ctrl = control.final_state();
    AlignmentMetrics m;
    m.target_distance = squared_distance(pert, target);
    m.ground_truth_distance = squared_distance(pert, ground_truth);
    m.control_target_distance = squared_distance(ctrl, target);
    m.target_to_truth_ratio = m.ground_truth_distance > 0.0
                                  ? m.target_distance / m.ground_truth_distance
                                  : (m.target_distance > 0.0 ? INFINITY : 1.0);
    m.closer_to_target = m.target_distance < m.ground_truth_distance;
    for (std::size_t n = 0; n < pert.shape().channels; ++n) {
        m.rmse_target.push_back(channel_rmse(pert, target, n));
        m.rmse_truth.push_back(channel_rmse(pert, ground_truth, n));
    }
    return m;
}

DiffMap diff_map(const StateGrid& a, const StateGrid& b, std::size_t channel, std::string label) {
    require_same_shape(a.shape(), b.shape(), "diff_map");
    const GridShape& s = a.shape();
    if (channel >= s.channels) {
        throw RangeError("channel " + std::to_string(channel) + " out of range");
    }
    if (label.empty()) throw ArgumentError("diff map label must not be empty");
    DiffMap map{s.lat, s.lon, std::vector<double>(s.cells()), std::move(label)};
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        const std::size_t k = cell * s.channels + channel;
        map.values[cell] = a[k] - b[k];
    }
    return map;
}

StealthReport stealth_report(const StateGrid& delta, const SpatialMask& mask, double sigma) {
    const GridShape& s = delta.shape();
    if (!mask.matches(s)) throw ShapeError("stealth mask does not match the perturbation grid");
    StealthReport r;
    std::size_t nonzero_cells = 0;
    std::size_t outside_cells = 0;
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        bool any = false;
        for (std::size_t n = 0; n < s.channels; ++n) {
            const double v = delta[cell * s.channels + n];
            if (v != 0.0) any = true;
            if (mask[cell] == 0.0) r.outside_mask_energy += v * v;
        }
        if (any) {
            ++nonzero_cells;
            if (mask[cell] == 0.0) ++outside_cells;
        }
    }
    r.outside_mask_fraction =
        nonzero_cells > 0 ? static_cast<double>(outside_cells) / static_cast<double>(nonzero_cells)
                          : 0.0;
    for (std::size_t n = 0; n < s.channels; ++n) {
        const double inf = channel_inf_norm(delta, n);
        if (inf != 0.0) ++r.nonzero_channels;
        r.channel_inf_norm.push_back(inf);
        r.channel_tv.push_back(total_variation(delta, n));
    }
    r.pmrg = pmrg(delta, sigma);
    return r;
}

}  // namespace waapo
