#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"

namespace mfglp {

/// Whether the boundary of the state domain can be reached by the dynamics.
/// Under `unattainable` the chain must never send interior mass to a boundary
/// node; under `attainable` the diffusion must stay above a positive floor.
enum class BoundaryMode { unattainable, attainable };

/// Coefficient evaluator: (t, x, frozen slice moments z, action a) -> real.
using CoefficientFn = std::function<double(double, double, std::span<const double>, double)>;
/// Exit-reward evaluator: (t, x, frozen exit moments w) -> real.
using ExitRewardFn = std::function<double(double, double, std::span<const double>)>;
/// Moment kernel: (t, x) -> R^d, written into `out` (size d).
using KernelFn = std::function<void(double, double, std::span<double>)>;

/// Hard cap on the moment dimension d; the mean-field coupling needs only a
/// handful of scalar aggregates per slice and nothing in the solver scales
/// beyond this.
inline constexpr int kMaxMomentDim = 16;

/**
 * A mixed stopping/control problem in separable mean-field form.
 *
 * The running coefficients read the population only through per-slice moments
 * z = integral of the matching kernel against the occupation measure, and the
 * exit reward through w = integral of exit_kernel against the exit measure:
 *
 *   drift(t, x, z_drift, a), diffusion(t, x, z_diffusion, a),
 *   running_reward(t, x, z_running, a), exit_reward(t, x, w_exit).
 *
 * Problems with moment_dim == 0 are frozen (single-agent): the moment spans
 * are empty and every evaluator must ignore them.
 */
struct ProblemSpec {
    std::string name;
    double T = 1.0;
    double x_lo = 0.0;
    double x_hi = 1.0;
    BoundaryMode boundary_mode = BoundaryMode::attainable;
    int moment_dim = 0;

    CoefficientFn drift;
    CoefficientFn diffusion;
    CoefficientFn running_reward;
    ExitRewardFn exit_reward;

    KernelFn drift_kernel;
    KernelFn diffusion_kernel;
    KernelFn running_kernel;
    KernelFn exit_kernel;

    /// Initial probability weights per state node; boundary entries must be 0.
    numvec m0;

    /// Asserts that {(drift, diffusion^2, z) : a in A, z <= running_reward} is
    /// convex at every (t, x), enabling the strict-control certification.
    bool convex_actions = false;

    /// Positive diffusion floor required under attainable boundaries.
    double sigma_floor = 0.0;
};

/**
 * Validates a ProblemSpec against a Grid: shapes, the initial law, diffusion
 * sign conditions, and finiteness of every evaluator on the grid (sampled at
 * zero moments). Throws ConfigError naming the violated field.
 */
inline void validate(const ProblemSpec& spec, const Grid& grid) {
    validate(grid);
    if (!spec.drift || !spec.diffusion || !spec.running_reward || !spec.exit_reward)
        throw ConfigError("problem '" + spec.name + "': all four coefficient evaluators are required");
    if (spec.moment_dim < 0 || spec.moment_dim > kMaxMomentDim)
        throw ConfigError("problem '" + spec.name + "': moment_dim must lie in [0, " + std::to_string(kMaxMomentDim) + "]");
    if (spec.moment_dim > 0 && (!spec.drift_kernel || !spec.diffusion_kernel || !spec.running_kernel || !spec.exit_kernel))
        throw ConfigError("problem '" + spec.name + "': moment_dim > 0 requires all four moment kernels");
    if (std::abs(grid.horizon() - spec.T) > 1e-12 * std::max(1.0, spec.T))
        throw ConfigError("problem '" + spec.name + "': grid horizon dt*(t_count-1) does not match T");
    if (std::abs(grid.x_nodes.front() - spec.x_lo) > 1e-12 || std::abs(grid.x_nodes.back() - spec.x_hi) > 1e-12)
        throw ConfigError("problem '" + spec.name + "': grid state range does not match [x_lo, x_hi]");

    if (static_cast<int>(spec.m0.size()) != grid.x_count())
        throw ConfigError("problem '" + spec.name + "': m0 must have one weight per state node");
    double mass = 0.0;
    for (int i = 0; i < grid.x_count(); ++i) {
        const double w = spec.m0[static_cast<size_t>(i)];
        if (!(w >= 0.0)) throw ConfigError("problem '" + spec.name + "': m0 has a negative weight at node " + std::to_string(i));
        if (grid.is_boundary(i) && w != 0.0)
            throw ConfigError("problem '" + spec.name + "': m0 must put zero weight on boundary node " + std::to_string(i));
        mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-12)
        throw ConfigError("problem '" + spec.name + "': m0 must sum to 1 (got " + std::to_string(mass) + ")");

    if (spec.boundary_mode == BoundaryMode::attainable && !(spec.sigma_floor > 0.0))
        throw ConfigError("problem '" + spec.name + "': attainable boundaries require sigma_floor > 0");

    // Finiteness and diffusion sign, sampled at zero moments on every node.
    const numvec zero_z(static_cast<size_t>(spec.moment_dim), 0.0);
    const std::span<const double> z(zero_z);
    for (int k = 0; k < grid.t_count; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < grid.x_count(); ++i) {
            const double x = grid.x(i);
            if (!std::isfinite(spec.exit_reward(t, x, z)))
                throw ConfigError("problem '" + spec.name + "': exit_reward not finite at (k=" + std::to_string(k) + ", i=" + std::to_string(i) + ")");
            for (int j = 0; j < grid.a_count(); ++j) {
                const double a = grid.action(j);
                const double b = spec.drift(t, x, z, a);
                const double s = spec.diffusion(t, x, z, a);
                const double f = spec.running_reward(t, x, z, a);
                if (!std::isfinite(b) || !std::isfinite(s) || !std::isfinite(f))
                    throw ConfigError("problem '" + spec.name + "': coefficient not finite at (k=" + std::to_string(k) + ", i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")");
                if (s < 0.0)
                    throw ConfigError("problem '" + spec.name + "': diffusion must be nonnegative");
                if (spec.boundary_mode == BoundaryMode::attainable && s < spec.sigma_floor)
                    throw ConfigError("problem '" + spec.name + "': diffusion drops below sigma_floor under attainable boundaries");
            }
        }
    }
}

} // namespace mfglp
