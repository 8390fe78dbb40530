#pragma once

#include <cmath>
#include <string>

#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/problem.hpp"

namespace mfglp {

/**
 * Controlled Markov-chain approximation of the generator
 * L u = b u_x + (sigma^2/2) u_xx on the uniform grid.
 *
 * For every slice k, interior node i and action j the chain moves one cell up
 * or down or stays, with the Kushner-Dupuis upwind probabilities. Boundary
 * nodes are absorbing: arriving mass exits into the exit measure, so they
 * carry no outgoing row.
 */
struct TransitionModel {
    int slices = 0;
    int nx = 0;
    int na = 0;
    numvec p_up;   // (k, interior i, j); index uses interior offset i-1
    numvec p_down;
    numvec p_stay;

    size_t index(int k, int i, int j) const {
        return (static_cast<size_t>(k) * (nx - 2) + (i - 1)) * na + j;
    }
    double up(int k, int i, int j) const { return p_up[index(k, i, j)]; }
    double down(int k, int i, int j) const { return p_down[index(k, i, j)]; }
    double stay(int k, int i, int j) const { return p_stay[index(k, i, j)]; }
    bool is_boundary(int i) const { return i == 0 || i == nx - 1; }
};

/// Diagnosis of the explicit scheme's stability condition.
struct CflReport {
    bool pass = true;
    double max_lhs = 0.0; // max over (k,i,j) of dt*(sigma^2/dx^2 + |b|/dx)
    double margin = 1.0;  // 1 - max_lhs
    int k = -1, i = -1, j = -1;
};

namespace detail {

// Shared coefficient sweep: the stability left-hand side at one sample point.
inline double cfl_lhs(const ProblemSpec& spec, const Grid& grid, const MomentVector& moments,
                      int k, int i, int j, double* b_out = nullptr, double* s_out = nullptr) {
    const double t = grid.time(k);
    const double x = grid.x(i);
    const double a = grid.action(j);
    const double b = spec.drift(t, x, moments.drift_at(k), a);
    const double s = spec.diffusion(t, x, moments.diffusion_at(k), a);
    if (b_out) *b_out = b;
    if (s_out) *s_out = s;
    return grid.dt * (s * s / (grid.dx * grid.dx) + std::abs(b) / grid.dx);
}

} // namespace detail

/**
 * Checks dt*(sigma^2/dx^2 + |b|/dx) <= 1 over all sampled (k, i, j) (interior
 * nodes, all slices, all actions) and reports the maximal left-hand side with
 * its location. This is exactly the nonnegativity condition for p_stay below;
 * equality passes (p_stay = 0 is a valid probability).
 */
inline CflReport cfl_check(const ProblemSpec& spec, const Grid& grid, const MomentVector& moments) {
    if (moments.d != spec.moment_dim || moments.slices != grid.slice_count())
        throw ShapeError("cfl_check: moment vector shape does not match problem and grid");
    CflReport report;
    for (int k = 0; k < grid.slice_count(); ++k)
        for (int i = 1; i + 1 < grid.x_count(); ++i)
            for (int j = 0; j < grid.a_count(); ++j) {
                const double lhs = detail::cfl_lhs(spec, grid, moments, k, i, j);
                if (lhs > report.max_lhs) {
                    report.max_lhs = lhs;
                    report.k = k;
                    report.i = i;
                    report.j = j;
                }
            }
    report.margin = 1.0 - report.max_lhs;
    report.pass = report.max_lhs <= 1.0 + 1e-12;
    return report;
}

/**
 * Assembles the upwind chain at the frozen moments:
 *
 *   p_up   = dt * (s^2/(2 dx^2) + max(b,0)/dx)
 *   p_down = dt * (s^2/(2 dx^2) + max(-b,0)/dx)
 *   p_stay = 1 - p_up - p_down
 *
 * with b = drift(t_k, x_i, z_drift[k], a_j) and s = diffusion(...), sampled
 * at the left endpoint t_k of each slice. Throws ConfigError naming the first
 * offending (k,i,j) when the CFL condition fails, and, under unattainable
 * boundaries, when any interior transition targets a boundary node.
 */
inline TransitionModel assemble_transition(const ProblemSpec& spec, const Grid& grid,
                                           const MomentVector& moments) {
    if (moments.d != spec.moment_dim || moments.slices != grid.slice_count())
        throw ShapeError("assemble_transition: moment vector shape does not match problem and grid");
    TransitionModel trans;
    trans.slices = grid.slice_count();
    trans.nx = grid.x_count();
    trans.na = grid.a_count();
    const size_t n = static_cast<size_t>(trans.slices) * (trans.nx - 2) * trans.na;
    trans.p_up.assign(n, 0.0);
    trans.p_down.assign(n, 0.0);
    trans.p_stay.assign(n, 0.0);

    const double inv_dx = 1.0 / grid.dx;
    const double half_inv_dx2 = 0.5 / (grid.dx * grid.dx);
    for (int k = 0; k < trans.slices; ++k)
        for (int i = 1; i + 1 < trans.nx; ++i)
            for (int j = 0; j < trans.na; ++j) {
                double b = 0.0, s = 0.0;
                detail::cfl_lhs(spec, grid, moments, k, i, j, &b, &s);
                const double diff = grid.dt * s * s * half_inv_dx2;
                const double pu = diff + grid.dt * std::max(b, 0.0) * inv_dx;
                const double pd = diff + grid.dt * std::max(-b, 0.0) * inv_dx;
                const double ps = 1.0 - pu - pd;
                if (ps < -1e-12)
                    throw ConfigError("assemble_transition: CFL violation at (k=" + std::to_string(k) +
                                      ", i=" + std::to_string(i) + ", j=" + std::to_string(j) +
                                      "): dt*(s^2/dx^2 + |b|/dx) = " + std::to_string(pu + pd));
                if (spec.boundary_mode == BoundaryMode::unattainable) {
                    if ((i == 1 && pd > 0.0) || (i == trans.nx - 2 && pu > 0.0))
                        throw ConfigError("assemble_transition: unattainable boundary violated at (k=" +
                                          std::to_string(k) + ", i=" + std::to_string(i) + ", j=" +
                                          std::to_string(j) + "): interior transition targets the boundary");
                }
                const size_t q = trans.index(k, i, j);
                trans.p_up[q] = pu;
                trans.p_down[q] = pd;
                trans.p_stay[q] = std::max(ps, 0.0);
            }
    return trans;
}

} // namespace mfglp
