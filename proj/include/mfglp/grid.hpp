#pragma once

#include <cmath>
#include <string>

#include "mfglp/core.hpp"

namespace mfglp {

/**
 * Uniform space-time-action grid.
 *
 * Time nodes t_0 < ... < t_{K} with K = t_count-1 steps of length dt; slice k
 * is the interval [t_k, t_k + dt) (left-endpoint convention: coefficients and
 * occupation mass of slice k are sampled at t_k). The first and last entries
 * of x_nodes are the boundary of the state domain; indices 1..x_count()-2 are
 * interior. a_nodes is a finite sample of the compact action set.
 */
struct Grid {
    int t_count = 0; // number of time nodes, >= 2
    double dt = 0.0;
    double dx = 0.0;
    numvec x_nodes;
    numvec a_nodes;

    int x_count() const { return static_cast<int>(x_nodes.size()); }
    int a_count() const { return static_cast<int>(a_nodes.size()); }
    int slice_count() const { return t_count - 1; }
    int interior_count() const { return x_count() - 2; }

    double time(int k) const { return dt * k; }
    double horizon() const { return dt * (t_count - 1); }
    double x(int i) const { return x_nodes[static_cast<size_t>(i)]; }
    double action(int j) const { return a_nodes[static_cast<size_t>(j)]; }
    bool is_boundary(int i) const { return i == 0 || i == x_count() - 1; }
};

/// Validates the Grid contract; throws ConfigError with the offending field.
inline void validate(const Grid& grid) {
    if (grid.t_count < 2) throw ConfigError("grid: t_count must be >= 2, got " + std::to_string(grid.t_count));
    if (!(grid.dt > 0.0)) throw ConfigError("grid: dt must be positive");
    if (grid.x_count() < 3) throw ConfigError("grid: need at least 3 state nodes (one interior), got " + std::to_string(grid.x_count()));
    if (grid.a_nodes.empty()) throw ConfigError("grid: a_nodes must be nonempty");
    if (!(grid.dx > 0.0)) throw ConfigError("grid: dx must be positive");
    const double span = grid.x_nodes.back() - grid.x_nodes.front();
    for (int i = 0; i + 1 < grid.x_count(); ++i) {
        const double step = grid.x(i + 1) - grid.x(i);
        if (!(step > 0.0)) throw ConfigError("grid: x_nodes must be strictly increasing at index " + std::to_string(i));
        if (std::abs(step - grid.dx) > 1e-12 * std::max(1.0, span))
            throw ConfigError("grid: x_nodes must be uniformly spaced; deviation at index " + std::to_string(i));
    }
    for (int j = 0; j + 1 < grid.a_count(); ++j)
        if (!(grid.action(j) < grid.action(j + 1)))
            throw ConfigError("grid: a_nodes must be strictly increasing at index " + std::to_string(j));
}

/**
 * Builds a uniform grid with t_count time nodes on [0, T], x_count state
 * nodes on [x_lo, x_hi], and a_count actions on [a_lo, a_hi]. A single
 * action collapses to the midpoint of the action interval.
 */
inline Grid make_grid(int t_count, int x_count, int a_count,
                      double T, double x_lo, double x_hi,
                      double a_lo, double a_hi) {
    if (t_count < 2) throw ConfigError("make_grid: t_count must be >= 2");
    if (x_count < 3) throw ConfigError("make_grid: x_count must be >= 3");
    if (a_count < 1) throw ConfigError("make_grid: a_count must be >= 1");
    if (!(T > 0.0)) throw ConfigError("make_grid: horizon T must be positive");
    if (!(x_hi > x_lo)) throw ConfigError("make_grid: x_hi must exceed x_lo");
    if (a_hi < a_lo) throw ConfigError("make_grid: a_hi must be >= a_lo");

    Grid grid;
    grid.t_count = t_count;
    grid.dt = T / (t_count - 1);
    grid.dx = (x_hi - x_lo) / (x_count - 1);
    grid.x_nodes.resize(static_cast<size_t>(x_count));
    for (int i = 0; i < x_count; ++i)
        grid.x_nodes[static_cast<size_t>(i)] = x_lo + grid.dx * i;
    grid.x_nodes.back() = x_hi; // pin the endpoint against accumulation error
    if (a_count == 1) {
        grid.a_nodes = {0.5 * (a_lo + a_hi)};
    } else {
        grid.a_nodes.resize(static_cast<size_t>(a_count));
        const double da = (a_hi - a_lo) / (a_count - 1);
        for (int j = 0; j < a_count; ++j)
            grid.a_nodes[static_cast<size_t>(j)] = a_lo + da * j;
        grid.a_nodes.back() = a_hi;
    }
    validate(grid);
    return grid;
}

} // namespace mfglp
