#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/problem.hpp"

namespace mfglp {

/**
 * Discrete occupation flow m_{t_k}({x_i} x {a_j}): nonnegative mass of agents
 * alive during slice k = 0..t_count-2, sitting at node i and playing action j.
 * Indexed over all state nodes; feasible flows never carry boundary mass
 * (boundary arrivals exit instantly), so boundary rows stay zero.
 */
struct OccupationFlow {
    int slices = 0;
    int nx = 0;
    int na = 0;
    numvec values;

    OccupationFlow() = default;
    OccupationFlow(int slices_, int nx_, int na_)
        : slices(slices_), nx(nx_), na(na_),
          values(static_cast<size_t>(slices_) * nx_ * na_, 0.0) {}

    static OccupationFlow zeros(const Grid& grid) {
        return OccupationFlow(grid.slice_count(), grid.x_count(), grid.a_count());
    }

    size_t index(int k, int i, int j) const {
        return (static_cast<size_t>(k) * nx + i) * na + j;
    }
    double& at(int k, int i, int j) { return values[index(k, i, j)]; }
    double at(int k, int i, int j) const { return values[index(k, i, j)]; }

    double slice_mass(int k) const {
        double s = 0.0;
        const size_t base = static_cast<size_t>(k) * nx * na;
        for (size_t q = 0; q < static_cast<size_t>(nx) * na; ++q) s += values[base + q];
        return s;
    }
    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

/**
 * Discrete exit measure mu({t_k} x {x_i}): the joint law of (exit time, exit
 * state) over time nodes k = 0..t_count-1 and all state nodes. Total mass 1.
 */
struct ExitMeasure {
    int t_count = 0;
    int nx = 0;
    numvec values;

    ExitMeasure() = default;
    ExitMeasure(int t_count_, int nx_)
        : t_count(t_count_), nx(nx_), values(static_cast<size_t>(t_count_) * nx_, 0.0) {}

    static ExitMeasure zeros(const Grid& grid) {
        return ExitMeasure(grid.t_count, grid.x_count());
    }

    size_t index(int k, int i) const { return static_cast<size_t>(k) * nx + i; }
    double& at(int k, int i) { return values[index(k, i)]; }
    double at(int k, int i) const { return values[index(k, i)]; }

    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

/// Throws ShapeError unless the pair matches the grid.
inline void require_shapes(const OccupationFlow& m, const ExitMeasure& mu, const Grid& grid) {
    if (m.slices != grid.slice_count() || m.nx != grid.x_count() || m.na != grid.a_count())
        throw ShapeError("occupation flow shape does not match grid");
    if (mu.t_count != grid.t_count || mu.nx != grid.x_count())
        throw ShapeError("exit measure shape does not match grid");
}

/**
 * Validates the domain invariants of a measure pair: entrywise nonnegativity
 * (up to LP round-off -1e-10), per-slice subprobability mass <= 1 + 1e-9,
 * unit exit mass within 1e-9, and zero occupation mass on boundary nodes.
 */
inline void validate(const OccupationFlow& m, const ExitMeasure& mu, const Grid& grid) {
    require_shapes(m, mu, grid);
    for (double v : m.values)
        if (v < -1e-10) throw NumericError("occupation flow has a negative entry: " + std::to_string(v));
    for (double v : mu.values)
        if (v < -1e-10) throw NumericError("exit measure has a negative entry: " + std::to_string(v));
    for (int k = 0; k < m.slices; ++k) {
        const double s = m.slice_mass(k);
        if (s > 1.0 + 1e-9)
            throw NumericError("occupation slice " + std::to_string(k) + " exceeds unit mass: " + std::to_string(s));
    }
    const double total = mu.total();
    if (std::abs(total - 1.0) > 1e-9)
        throw NumericError("exit measure total mass is " + std::to_string(total) + ", expected 1");
    for (int k = 0; k < m.slices; ++k)
        for (int j = 0; j < m.na; ++j) {
            if (std::abs(m.at(k, 0, j)) > 1e-12 || std::abs(m.at(k, m.nx - 1, j)) > 1e-12)
                throw NumericError("occupation flow carries boundary mass at slice " + std::to_string(k));
        }
}

/**
 * Frozen mean-field moments: per slice k the aggregates consumed by drift,
 * diffusion and running reward (each in R^d), and the global exit aggregate
 * w_exit consumed by the exit reward.
 */
struct MomentVector {
    int d = 0;
    int slices = 0;
    numvec z_drift;     // slices * d, slice-major
    numvec z_diffusion; // slices * d
    numvec z_running;   // slices * d
    numvec w_exit;      // d

    static MomentVector zeros(int d, int slices) {
        MomentVector mv;
        mv.d = d;
        mv.slices = slices;
        mv.z_drift.assign(static_cast<size_t>(slices) * d, 0.0);
        mv.z_diffusion.assign(static_cast<size_t>(slices) * d, 0.0);
        mv.z_running.assign(static_cast<size_t>(slices) * d, 0.0);
        mv.w_exit.assign(static_cast<size_t>(d), 0.0);
        return mv;
    }

    std::span<const double> drift_at(int k) const {
        return {z_drift.data() + static_cast<size_t>(k) * d, static_cast<size_t>(d)};
    }
    std::span<const double> diffusion_at(int k) const {
        return {z_diffusion.data() + static_cast<size_t>(k) * d, static_cast<size_t>(d)};
    }
    std::span<const double> running_at(int k) const {
        return {z_running.data() + static_cast<size_t>(k) * d, static_cast<size_t>(d)};
    }
    std::span<const double> exit() const { return {w_exit.data(), static_cast<size_t>(d)}; }
};

/**
 * Computes the frozen moments of a measure pair:
 *   z_h[k] = sum_{i,j} h(t_k, x_i) * m[k,i,j]   for each running kernel h,
 *   w     = sum_{k,i} g_hat(t_k, x_i) * mu[k,i]  for the exit kernel.
 * Kernels do not see the action, so the inner action sum is taken first.
 */
inline MomentVector moment_of(const OccupationFlow& m, const ExitMeasure& mu,
                              const ProblemSpec& spec, const Grid& grid) {
    require_shapes(m, mu, grid);
    const int d = spec.moment_dim;
    MomentVector mv = MomentVector::zeros(d, grid.slice_count());
    if (d == 0) return mv;

    numvec buf(static_cast<size_t>(d));
    const std::span<double> out(buf);
    for (int k = 0; k < grid.slice_count(); ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < grid.x_count(); ++i) {
            double node_mass = 0.0;
            for (int j = 0; j < grid.a_count(); ++j) node_mass += m.at(k, i, j);
            if (node_mass == 0.0) continue;
            const double x = grid.x(i);
            spec.drift_kernel(t, x, out);
            for (int c = 0; c < d; ++c) mv.z_drift[static_cast<size_t>(k) * d + c] += buf[static_cast<size_t>(c)] * node_mass;
            spec.diffusion_kernel(t, x, out);
            for (int c = 0; c < d; ++c) mv.z_diffusion[static_cast<size_t>(k) * d + c] += buf[static_cast<size_t>(c)] * node_mass;
            spec.running_kernel(t, x, out);
            for (int c = 0; c < d; ++c) mv.z_running[static_cast<size_t>(k) * d + c] += buf[static_cast<size_t>(c)] * node_mass;
        }
    }
    for (int k = 0; k < grid.t_count; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < grid.x_count(); ++i) {
            const double w = mu.at(k, i);
            if (w == 0.0) continue;
            spec.exit_kernel(t, grid.x(i), out);
            for (int c = 0; c < d; ++c) mv.w_exit[static_cast<size_t>(c)] += buf[static_cast<size_t>(c)] * w;
        }
    }
    return mv;
}

/**
 * Disintegration of an occupation flow into per-node state mass and a control
 * kernel: probs[k,i,.] = m[k,i,.] / mass[k,i] on supported nodes. Zero-mass
 * rows receive the uniform kernel and are flagged `defaulted` rather than
 * erroring; LP solutions legitimately leave nodes unreached.
 */
struct ControlKernel {
    int slices = 0;
    int nx = 0;
    int na = 0;
    numvec probs;                   // (k,i,j), rows sum to 1
    numvec mass;                    // (k,i) state marginal
    std::vector<std::uint8_t> defaulted; // (k,i) flag for zero-mass rows

    size_t row(int k, int i) const { return static_cast<size_t>(k) * nx + i; }
    double prob(int k, int i, int j) const { return probs[row(k, i) * na + j]; }
    double state_mass(int k, int i) const { return mass[row(k, i)]; }
    bool is_defaulted(int k, int i) const { return defaulted[row(k, i)] != 0; }
};

inline ControlKernel disintegrate(const OccupationFlow& m) {
    ControlKernel ck;
    ck.slices = m.slices;
    ck.nx = m.nx;
    ck.na = m.na;
    ck.probs.assign(static_cast<size_t>(m.slices) * m.nx * m.na, 0.0);
    ck.mass.assign(static_cast<size_t>(m.slices) * m.nx, 0.0);
    ck.defaulted.assign(static_cast<size_t>(m.slices) * m.nx, 0);
    const double uniform = 1.0 / m.na;
    for (int k = 0; k < m.slices; ++k)
        for (int i = 0; i < m.nx; ++i) {
            double total = 0.0;
            for (int j = 0; j < m.na; ++j) total += m.at(k, i, j);
            const size_t r = ck.row(k, i);
            ck.mass[r] = total;
            if (total > 0.0) {
                for (int j = 0; j < m.na; ++j) ck.probs[r * m.na + j] = m.at(k, i, j) / total;
            } else {
                for (int j = 0; j < m.na; ++j) ck.probs[r * m.na + j] = uniform;
                ck.defaulted[r] = 1;
            }
        }
    return ck;
}

/// Reconstructs probs (x) mass; inverse of disintegrate on supported rows.
inline OccupationFlow recompose(const ControlKernel& ck) {
    OccupationFlow m(ck.slices, ck.nx, ck.na);
    for (int k = 0; k < ck.slices; ++k)
        for (int i = 0; i < ck.nx; ++i) {
            const size_t r = ck.row(k, i);
            if (ck.mass[r] == 0.0) continue;
            for (int j = 0; j < ck.na; ++j)
                m.at(k, i, j) = ck.probs[r * ck.na + j] * ck.mass[r];
        }
    return m;
}

/**
 * Per-time-node mass balance: remaining[k] is the occupation mass alive in
 * slice k (0 at the final node, where no slice exists) and exited[k] is the
 * cumulative exit mass through node k. For any constraint-feasible pair
 * remaining[k] + exited[k] = 1 at every k.
 */
struct MassProfile {
    numvec remaining; // t_count entries
    numvec exited;    // t_count entries, cumulative
};

inline MassProfile mass_profile(const OccupationFlow& m, const ExitMeasure& mu) {
    if (mu.t_count != m.slices + 1 || mu.nx != m.nx)
        throw ShapeError("mass_profile: occupation flow and exit measure shapes disagree");
    MassProfile profile;
    profile.remaining.assign(static_cast<size_t>(mu.t_count), 0.0);
    profile.exited.assign(static_cast<size_t>(mu.t_count), 0.0);
    double cum = 0.0;
    for (int k = 0; k < mu.t_count; ++k) {
        for (int i = 0; i < mu.nx; ++i) cum += mu.at(k, i);
        profile.exited[static_cast<size_t>(k)] = cum;
        profile.remaining[static_cast<size_t>(k)] = (k < m.slices) ? m.slice_mass(k) : 0.0;
    }
    return profile;
}

/// c = alpha*a + beta*b on matching shapes (used by the damped MFG iteration).
inline OccupationFlow combine(double alpha, const OccupationFlow& a, double beta, const OccupationFlow& b) {
    if (a.slices != b.slices || a.nx != b.nx || a.na != b.na)
        throw ShapeError("combine: occupation flow shapes disagree");
    OccupationFlow c(a.slices, a.nx, a.na);
    for (size_t q = 0; q < c.values.size(); ++q)
        c.values[q] = alpha * a.values[q] + beta * b.values[q];
    return c;
}

inline ExitMeasure combine(double alpha, const ExitMeasure& a, double beta, const ExitMeasure& b) {
    if (a.t_count != b.t_count || a.nx != b.nx)
        throw ShapeError("combine: exit measure shapes disagree");
    ExitMeasure c(a.t_count, a.nx);
    for (size_t q = 0; q < c.values.size(); ++q)
        c.values[q] = alpha * a.values[q] + beta * b.values[q];
    return c;
}

inline double l1_distance(const numvec& a, const numvec& b) {
    if (a.size() != b.size()) throw ShapeError("l1_distance: sizes disagree");
    double s = 0.0;
    for (size_t q = 0; q < a.size(); ++q) s += std::abs(a[q] - b[q]);
    return s;
}

inline double l1_distance(const OccupationFlow& a, const OccupationFlow& b) {
    if (a.slices != b.slices || a.nx != b.nx || a.na != b.na)
        throw ShapeError("l1_distance: occupation flow shapes disagree");
    return l1_distance(a.values, b.values);
}

inline double l1_distance(const ExitMeasure& a, const ExitMeasure& b) {
    if (a.t_count != b.t_count || a.nx != b.nx)
        throw ShapeError("l1_distance: exit measure shapes disagree");
    return l1_distance(a.values, b.values);
}

} // namespace mfglp
