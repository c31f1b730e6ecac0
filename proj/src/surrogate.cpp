#include "waapo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "waapo/errors.hpp"
#include "waapo/rng.hpp"

namespace waapo {

CouplingMatrix::CouplingMatrix(std::size_t n, std::vector<double> row_major)
    : n_(n), data_(std::move(row_major)) {
    if (data_.size() != n_ * n_) {
        throw ShapeError("coupling matrix of order " + std::to_string(n_) + " needs " +
                         std::to_string(n_ * n_) + " entries");
    }
}

CouplingMatrix CouplingMatrix::identity(std::size_t n) {
    std::vector<double> data(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) data[k * n + k] = 1.0;
    return {n, std::move(data)};
}

double spectral_norm(const CouplingMatrix& c) {
    const std::size_t n = c.size();
    if (n == 0) return 0.0;
    // Irregular start vector so it is not orthogonal to the top singular vector
    // of structured matrices.
    std::vector<double> v(n), cv(n), w(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = 1.0 + 0.1 * static_cast<double>(k) + 0.01 * k * k;
    double lambda = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += c(r, k) * v[k];
            cv[r] = s;
        }
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += c(r, k) * cv[r];
            w[k] = s;
        }
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (norm == 0.0) return 0.0;
        for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / norm;
        const bool converged = std::abs(norm - lambda) <= 1e-15 * norm;
        lambda = norm;
        if (converged) break;
    }
    return std::sqrt(lambda);
}

namespace {

constexpr double kSpectralTolerance = 1e-6;

CouplingMatrix draw_coupling(const SurrogateParams& p) {
    const std::size_t n = p.shape.channels;
    NormalStream rng(stream_seed(p.seed, 0));
    std::vector<double> data(n * n);
    const double scale = p.coupling_strength / std::sqrt(static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            data[r * n + c] = (r == c ? 1.0 : 0.0) + scale * rng.normal();
        }
    }
    CouplingMatrix raw(n, data);
    const double norm = spectral_norm(raw);
    if (norm > 1.0) {
        for (double& x : data) x /= norm;
    }
    return {n, std::move(data)};
}

// c_ij <- sum over the channel mixing, cell by cell.
void couple(const CouplingMatrix& c, const StateGrid& in, StateGrid& out, bool transpose) {
    const std::size_t n = c.size();
    const std::size_t cells = in.shape().cells();
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const std::size_t base = cell * n;
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += (transpose ? c(k, r) : c(r, k)) * in[base + k];
            }
            out[base + r] = s;
        }
    }
}

// Rotation of channel n by direction * shift_n cells along longitude.
void advect(const std::vector<int>& shift, const StateGrid& in, StateGrid& out, int direction) {
    const GridShape& s = in.shape();
    const auto m = static_cast<std::ptrdiff_t>(s.lon);
    for (std::size_t i = 0; i < s.lat; ++i) {
        for (std::size_t j = 0; j < s.lon; ++j) {
            for (std::size_t n = 0; n < s.channels; ++n) {
                const std::ptrdiff_t src =
                    ((static_cast<std::ptrdiff_t>(j) - direction * shift[n]) % m + m) % m;
                out(i, j, n) = in(i, static_cast<std::size_t>(src), n);
            }
        }
    }
}

// 5-point smoothing. Missing polar neighbours are replaced by the cell itself,
// which keeps the stencil symmetric, so this operator is its own adjoint.
void diffuse(double w, const StateGrid& in, StateGrid& out) {
    const GridShape& s = in.shape();
    const double centre = 1.0 - 4.0 * w;
    for (std::size_t i = 0; i < s.lat; ++i) {
        const std::size_t north = i > 0 ? i - 1 : i;
        const std::size_t south = i + 1 < s.lat ? i + 1 : i;
        for (std::size_t j = 0; j < s.lon; ++j) {
            const std::size_t west = j > 0 ? j - 1 : s.lon - 1;
            const std::size_t east = j + 1 < s.lon ? j + 1 : 0;
            for (std::size_t n = 0; n < s.channels; ++n) {
                out(i, j, n) = centre * in(i, j, n) +
                               w * (in(north, j, n) + in(south, j, n) + in(i, west, n) +
                                    in(i, east, n));
            }
        }
    }
}

// c = couple(diffuse(advect(z))), written into `c`.
void linear_part(const SurrogateModel& model, const StateGrid& z, StateGrid& scratch, StateGrid& c) {
    advect(model.params().advection_shift, z, c, +1);
    diffuse(model.params().diffusion_weight, c, scratch);
    couple(model.coupling(), scratch, c, false);
}

// Transpose of linear_part applied to a cotangent.
void linear_part_adjoint(const SurrogateModel& model, const StateGrid& bar_c, StateGrid& scratch,
                         StateGrid& bar_z) {
    couple(model.coupling(), bar_c, bar_z, true);
    diffuse(model.params().diffusion_weight, bar_z, scratch);
    advect(model.params().advection_shift, scratch, bar_z, -1);
}

double activation_slope(double gain, double c) {
    const double t = std::tanh(c);
    return 1.0 + gain * (1.0 - t * t);
}

void check_state(const SurrogateModel& model, const StateGrid& z, const char* what) {
    require_same_shape(z.shape(), model.shape(), what);
}

}  // namespace

SurrogateModel::SurrogateModel(SurrogateParams params) : params_(std::move(params)) {
    validate();
    coupling_ = draw_coupling(params_);
    if (spectral_norm(coupling_) > 1.0 + kSpectralTolerance) {
        throw ArgumentError("generated coupling matrix exceeds unit spectral norm");
    }
}

SurrogateModel::SurrogateModel(SurrogateParams params, CouplingMatrix coupling)
    : params_(std::move(params)), coupling_(std::move(coupling)) {
    validate();
    if (coupling_.size() != params_.shape.channels) {
        throw ShapeError("coupling matrix order " + std::to_string(coupling_.size()) +
                         " does not match " + std::to_string(params_.shape.channels) +
                         " channels");
    }
    for (double x : coupling_.data()) {
        if (!std::isfinite(x)) throw ArgumentError("coupling matrix has non-finite entries");
    }
    const double norm = spectral_norm(coupling_);
    if (norm > 1.0 + kSpectralTolerance) {
        throw ArgumentError("coupling matrix spectral norm " + std::to_string(norm) +
                            " exceeds 1");
    }
}

void SurrogateModel::validate() const {
    const auto& p = params_;
    if (p.advection_shift.size() != p.shape.channels) {
        throw ArgumentError("advection_shift needs one entry per channel");
    }
    if (!(p.diffusion_weight >= 0.0 && p.diffusion_weight <= 0.25)) {
        throw ArgumentError("diffusion_weight must lie in [0, 0.25]");
    }
    if (!(p.nonlinearity_gain >= 0.0) || !std::isfinite(p.nonlinearity_gain)) {
        throw ArgumentError("nonlinearity_gain must be finite and >= 0");
    }
    if (!std::isfinite(p.coupling_strength)) {
        throw ArgumentError("coupling_strength must be finite");
    }
}

const StateGrid& Trajectory::at(std::size_t t) const {
    if (t == 0) return initial;
    if (t > states.size()) {
        throw RangeError("time index " + std::to_string(t) + " beyond horizon " +
                         std::to_string(states.size()));
    }
    return states[t - 1];
}

StateGrid step(const SurrogateModel& model, const StateGrid& z) {
    check_state(model, z, "step");
    StateGrid scratch(z.shape());
    StateGrid out(z.shape());
    linear_part(model, z, scratch, out);
    const double gain = model.params().nonlinearity_gain;
    for (double& v : out.values()) v += gain * std::tanh(v);
    return out;
}

RolloutTape record_rollout(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon) {
    if (horizon == 0) throw ArgumentError("rollout horizon must be >= 1");
    check_state(model, z0, "rollout");
    const double gain = model.params().nonlinearity_gain;
    RolloutTape tape;
    tape.trajectory.initial = z0;
    tape.trajectory.states.reserve(horizon);
    tape.pre_activations.reserve(horizon);
    StateGrid scratch(z0.shape());
    for (std::size_t t = 1; t <= horizon; ++t) {
        StateGrid c(z0.shape());
        linear_part(model, tape.trajectory.at(t - 1), scratch, c);
        StateGrid next = c;
        for (double& v : next.values()) v += gain * std::tanh(v);
        tape.pre_activations.push_back(std::move(c));
        tape.trajectory.states.push_back(std::move(next));
    }
    return tape;
}

Trajectory rollout(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon) {
    if (horizon == 0) throw ArgumentError("rollout horizon must be >= 1");
    check_state(model, z0, "rollout");
    Trajectory traj;
    traj.initial = z0;
    traj.states.reserve(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) traj.states.push_back(step(model, traj.at(t - 1)));
    return traj;
}

TangentState backpropagate(const SurrogateModel& model, const RolloutTape& tape,
                           const CotangentMap& cotangents) {
    const GridShape& shape = model.shape();
    const std::size_t horizon = tape.trajectory.horizon();
    for (const auto& [t, cot] : cotangents) {
        if (t > horizon) {
            throw RangeError("cotangent at t=" + std::to_string(t) + " beyond horizon " +
                             std::to_string(horizon));
        }
        require_same_shape(cot.shape(), shape, "cotangent");
    }
    const double gain = model.params().nonlinearity_gain;
    TangentState bar(shape);
    StateGrid bar_c(shape);
    StateGrid scratch(shape);
    for (std::size_t t = horizon; t >= 1; --t) {
        if (auto it = cotangents.find(t); it != cotangents.end()) bar += it->second;
        const StateGrid& c = tape.pre_activations[t - 1];
        for (std::size_t k = 0; k < bar.size(); ++k) bar_c[k] = bar[k] * activation_slope(gain, c[k]);
        linear_part_adjoint(model, bar_c, scratch, bar);
    }
    if (auto it = cotangents.find(0); it != cotangents.end()) bar += it->second;
    return bar;
}

TangentState rollout_adjoint(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon,
                             const CotangentMap& cotangents) {
    if (cotangents.empty()) {
        check_state(model, z0, "rollout_adjoint");
        return TangentState(model.shape());
    }
    return backpropagate(model, record_rollout(model, z0, horizon), cotangents);
}

Trajectory rollout_tangent(const SurrogateModel& model, const StateGrid& z0, const StateGrid& dz0,
                           std::size_t horizon) {
    check_state(model, dz0, "rollout_tangent");
    const RolloutTape tape = record_rollout(model, z0, horizon);
    const double gain = model.params().nonlinearity_gain;
    Trajectory out;
    out.initial = dz0;
    StateGrid scratch(z0.shape());
    for (std::size_t t = 1; t <= horizon; ++t) {
        StateGrid dc(z0.shape());
        linear_part(model, out.at(t - 1), scratch, dc);
        const StateGrid& c = tape.pre_activations[t - 1];
        for (std::size_t k = 0; k < dc.size(); ++k) dc[k] *= activation_slope(gain, c[k]);
        out.states.push_back(std::move(dc));
    }
    return out;
}

GradCheckResult grad_check(const SurrogateModel& model, const StateGrid& z0, std::size_t horizon,
                           const TrajectoryLoss& loss, double fd_epsilon, std::size_t samples,
                           std::uint64_t seed) {
    if (!(fd_epsilon > 0.0)) throw ArgumentError("fd_epsilon must be > 0");
    const RolloutTape tape = record_rollout(model, z0, horizon);
    const TangentState analytic = backpropagate(model, tape, loss.cotangents(tape.trajectory));

    std::vector<std::size_t> coords(z0.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    const std::size_t count = std::min(std::max<std::size_t>(samples, 1), coords.size());
    NormalStream rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        const auto pick =
            k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(coords.size() - k));
        std::swap(coords[k], coords[std::min(pick, coords.size() - 1)]);
    }
    coords.resize(count);

    double scale = 0.0;
    for (std::size_t k : coords) scale = std::max(scale, std::abs(analytic[k]));
    const double floor = 1e-3 * scale;

    GradCheckResult result;
    result.coordinates_checked = count;
    StateGrid probe = z0;
    for (std::size_t k : coords) {
        const double original = probe[k];
        probe[k] = original + fd_epsilon;
        const double up = loss.value(rollout(model, probe, horizon));
        probe[k] = original - fd_epsilon;
        const double down = loss.value(rollout(model, probe, horizon));
        probe[k] = original;
        const double numeric = (up - down) / (2.0 * fd_epsilon);
        const double a = analytic[k];
        const double denom = std::max({std::abs(a), std::abs(numeric), floor});
        const double err = denom > 0.0 ? std::abs(a - numeric) / denom : 0.0;
        if (err >= result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_coordinate = k;
            result.worst_analytic = a;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

}  // namespace waapo
