#pragma once

// Attack quality and stealth metrics and the Gaussian-ensemble baseline.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "waapo/grid.hpp"
#include "waapo/surrogate.hpp"

namespace waapo {

// ||delta||_F / (sigma * sqrt(L M N)). Throws ArgumentError for sigma <= 0.
double pmrg(const StateGrid& delta, double sigma);

// ||delta||_F / ||sigma * g||_F for one N(0, 1) field g drawn from `seed`.
double pmrg_sampled(const StateGrid& delta, double sigma, std::uint64_t seed);

// Field of independent N(0, 1) values from NormalStream(seed), row-major.
StateGrid gaussian_field(const GridShape& shape, std::uint64_t seed);

struct EnsembleSpec {
    double sigma = 0.3;
    std::size_t members = 16;
    std::uint64_t seed = 0;

    void validate() const;  // members >= 1, sigma finite and >= 0
};

struct EnsembleResult {
    std::vector<Trajectory> members;
    Trajectory mean;     // per-time average of the member trajectories
    Trajectory control;  // rollout of the clean initial state
};

// Member k rolls out z0 + sigma * gaussian_field(shape, stream_seed(seed, k)).
EnsembleResult gaussian_ensemble(const SurrogateModel& model, const StateGrid& z0,
                                 const EnsembleSpec& spec, std::size_t horizon);

double rmse(const StateGrid& a, const StateGrid& b);
double channel_rmse(const StateGrid& a, const StateGrid& b, std::size_t n);

struct AlignmentMetrics {
    double target_distance = 0.0;          // ||Z_T^pert - t_adv||^2
    double ground_truth_distance = 0.0;    // ||Z_T^pert - GT||^2
    double control_target_distance = 0.0;  // ||Z_T^ctrl - t_adv||^2
    double target_to_truth_ratio = 0.0;    // target_distance / ground_truth_distance
    std::vector<double> rmse_target;       // per channel, perturbed vs target
    std::vector<double> rmse_truth;        // per channel, perturbed vs ground truth
    bool closer_to_target = false;
};

AlignmentMetrics alignment_metrics(const Trajectory& perturbed, const Trajectory& control,
                                   const StateGrid& target, const StateGrid& ground_truth);

struct DiffMap {
    std::size_t lat = 0;
    std::size_t lon = 0;
    std::vector<double> values;  // row-major (lat, lon)
    std::string label;
};

// a - b on channel n. Throws ShapeError / RangeError.
DiffMap diff_map(const StateGrid& a, const StateGrid& b, std::size_t channel,
                 std::string label = "a-b");

struct StealthReport {
    std::size_t nonzero_channels = 0;
    double outside_mask_fraction = 0.0;  // nonzero cells outside supp(mask) / nonzero cells
    double outside_mask_energy = 0.0;    // sum of delta^2 over cells where mask == 0
    std::vector<double> channel_inf_norm;
    std::vector<double> channel_tv;
    double pmrg = 0.0;
};

StealthReport stealth_report(const StateGrid& delta, const SpatialMask& mask, double sigma = 0.3);

}  // namespace waapo
