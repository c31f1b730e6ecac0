#pragma once

// Deterministic differentiable autoregressive forecast model.
//
// One step maps z to
//     c  = couple(diffuse(advect(z)))
//     z' = c + gain * tanh(c)
// where advect rotates each channel along longitude by a fixed number of
// cells, diffuse applies a 5-point smoothing stencil (Neumann at the poles,
// periodic in longitude) and couple mixes channels through an N x N matrix
// whose spectral norm is at most 1. The reverse pass needs only the cached
// pre-activation c of every step.

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "waapo/grid.hpp"

namespace waapo {

class CouplingMatrix {
public:
    CouplingMatrix() = default;
    CouplingMatrix(std::size_t n, std::vector<double> row_major);

    static CouplingMatrix identity(std::size_t n);

    std::size_t size() const { return n_; }
    double operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const CouplingMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

// Largest singular value, by power iteration on C^T C. Bounds the spectral radius.
double spectral_norm(const CouplingMatrix& c);

struct SurrogateParams {
    GridShape shape{32, 64, 4};
    std::vector<int> advection_shift{1, 1, 0, 2};  // longitude cells per step, per channel
    double diffusion_weight = 0.05;                // in [0, 0.25]
    double nonlinearity_gain = 0.3;                // >= 0
    double coupling_strength = 0.3;                // off-identity scale of the random coupling
    std::uint64_t seed = 2024;

    bool operator==(const SurrogateParams&) const = default;
};

class SurrogateModel {
public:
    // Draws the coupling matrix from `seed`: C = I + strength * A / sqrt(N) with
    // A_ij ~ N(0, 1) in row-major order, rescaled so that ||C||_2 <= 1.
    explicit SurrogateModel(SurrogateParams params);

    // Uses the given coupling; throws ArgumentError if ||C||_2 > 1 + 1e-6.
    SurrogateModel(SurrogateParams params, CouplingMatrix coupling);

    const SurrogateParams& params() const { return params_; }
    const GridShape& shape() const { return params_.shape; }
    const CouplingMatrix& coupling() const { return coupling_; }

private:
    void validate() const;

    SurrogateParams params_;
    CouplingMatrix coupling_;
};

// Z_0 .. Z_T. `initial` is the (possibly perturbed) state fed to the model.
struct Trajectory {
    StateGrid initial;
    std::vector<StateGrid> states;  // Z_1 .. Z_T

    std::size_t horizon() const { return states.size(); }
    const StateGrid& at(std::size_t t) const;  // throws RangeError for t > T
    const StateGrid& final_state() const { return states.back(); }
};

// Gradient of a scalar with respect to a state; same layout as StateGrid.
using TangentState = StateGrid;

// Cotangent of the scalar loss with respect to Z_t, keyed by t in [0, T].
using CotangentMap = std::map<std::size_t, TangentState>;

// Forward trajectory plus the pre-activation of every step, for the reverse pass.
struct RolloutTape {
    Trajectory trajectory;
    std::vector<StateGrid> pre_activations;  // c_1 .. c_T
};

StateGrid step(const SurrogateModel& model, const StateGrid& z);

// Throws ArgumentError for horizon 0, ShapeError for a mismatched z0.
Trajectory rollout(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon);

RolloutTape record_rollout(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon);

// d/dz0 of sum_t <cotangent_t, Z_t>, reusing a recorded forward pass.
TangentState backpropagate(const SurrogateModel& model, const RolloutTape& tape,
                           const CotangentMap& cotangents);

TangentState rollout_adjoint(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon,
                             const CotangentMap& cotangents);

// Forward-mode directional derivative: J_t * dz0 for t = 0..T.
Trajectory rollout_tangent(const SurrogateModel& model, const StateGrid& z0,
                           const StateGrid& dz0, std::size_t horizon);

// A scalar functional of a trajectory together with its cotangents.
class TrajectoryLoss {
public:
    virtual ~TrajectoryLoss() = default;
    virtual double value(const Trajectory& trajectory) const = 0;
    virtual CotangentMap cotangents(const Trajectory& trajectory) const = 0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
    std::size_t worst_coordinate = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Compares the adjoint gradient of `loss(rollout(z0))` with central finite
// differences at step fd_epsilon on `samples` coordinates (all of them if the
// grid is smaller) chosen by a seeded shuffle. The error of coordinate k is
// |a_k - f_k| / max(|a_k|, |f_k|, 1e-3 * max_j |a_j|).
GradCheckResult grad_check(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon,
                           const TrajectoryLoss& loss, double fd_epsilon,
                           std::size_t samples = 64, std::uint64_t seed = 0);

}  // namespace waapo
