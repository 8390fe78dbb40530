#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>

#include "mfglp/chain.hpp"
#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/measures.hpp"

namespace mfglp {

/// Pure Markovian policy: stop flag per (time node, state node) and an action
/// index per node used while continuing. Terminal and boundary rows always
/// stop regardless of the flags.
struct FeedbackPolicy {
    int t_count = 0;
    int nx = 0;
    std::vector<std::uint8_t> stop; // (k, i)
    std::vector<int> action;        // (k, i); -1 where no action applies

    size_t index(int k, int i) const { return static_cast<size_t>(k) * nx + i; }
    bool stops(int k, int i) const { return stop[index(k, i)] != 0; }
    int action_at(int k, int i) const { return action[index(k, i)]; }
};

/// Randomized Markovian policy: fraction theta of arriving mass stopped per
/// node, and a per-node action distribution for the continuing fraction.
struct MixedPolicy {
    int t_count = 0;
    int nx = 0;
    int na = 0;
    numvec theta;  // (k: 0..t_count-1, i)
    numvec kernel; // (k: 0..t_count-2, i, j), rows sum to 1

    size_t node(int k, int i) const { return static_cast<size_t>(k) * nx + i; }
    double stop_fraction(int k, int i) const { return theta[node(k, i)]; }
    double prob(int k, int i, int j) const { return kernel[node(k, i) * na + j]; }
};

inline MixedPolicy to_mixed(const FeedbackPolicy& fp, int na) {
    MixedPolicy mp;
    mp.t_count = fp.t_count;
    mp.nx = fp.nx;
    mp.na = na;
    mp.theta.assign(static_cast<size_t>(fp.t_count) * fp.nx, 0.0);
    mp.kernel.assign(static_cast<size_t>(fp.t_count - 1) * fp.nx * na, 0.0);
    for (int k = 0; k < fp.t_count; ++k)
        for (int i = 0; i < fp.nx; ++i) {
            mp.theta[mp.node(k, i)] = fp.stops(k, i) ? 1.0 : 0.0;
            if (k + 1 < fp.t_count) {
                const int j = fp.action_at(k, i);
                mp.kernel[mp.node(k, i) * na + (j >= 0 ? j : 0)] = 1.0;
            }
        }
    return mp;
}

/**
 * Reads the randomized policy a measure pair encodes: theta is the stopped
 * fraction mu / (mu + occupation mass) of the mass arriving at each node, and
 * the kernel is the disintegrated control. Nodes the pair never reaches get
 * theta = 1 (stop) and the uniform kernel; any completion is feasible and
 * stopping is the conservative choice.
 */
inline MixedPolicy policy_of_measures(const OccupationFlow& m, const ExitMeasure& mu) {
    if (mu.t_count != m.slices + 1 || mu.nx != m.nx)
        throw ShapeError("policy_of_measures: shapes disagree");
    const ControlKernel ck = disintegrate(m);
    MixedPolicy mp;
    mp.t_count = mu.t_count;
    mp.nx = mu.nx;
    mp.na = m.na;
    mp.theta.assign(static_cast<size_t>(mp.t_count) * mp.nx, 1.0);
    mp.kernel = ck.probs;
    for (int k = 0; k < m.slices; ++k)
        for (int i = 0; i < m.nx; ++i) {
            const double arriving = mu.at(k, i) + ck.state_mass(k, i);
            if (arriving > 0.0)
                mp.theta[mp.node(k, i)] = mu.at(k, i) / arriving;
        }
    return mp;
}

/**
 * Pushes the initial law through the chain under a randomized policy and
 * returns the induced measure pair (the discrete admissibility construction).
 * Mass arriving at a boundary node exits instantly; all surviving mass exits
 * at the final node. The result satisfies the occupation LP constraints
 * exactly (up to float round-off), for any theta and kernel.
 */
inline std::pair<OccupationFlow, ExitMeasure> push_forward(const MixedPolicy& policy,
                                                           const TransitionModel& trans,
                                                           const Grid& grid,
                                                           const numvec& m0) {
    if (policy.t_count != grid.t_count || policy.nx != grid.x_count() || policy.na != grid.a_count())
        throw ShapeError("push_forward: policy shape does not match grid");
    if (trans.slices != grid.slice_count() || trans.nx != grid.x_count() || trans.na != grid.a_count())
        throw ShapeError("push_forward: transition model shape does not match grid");
    if (static_cast<int>(m0.size()) != grid.x_count())
        throw ShapeError("push_forward: m0 size does not match grid");

    OccupationFlow m = OccupationFlow::zeros(grid);
    ExitMeasure mu = ExitMeasure::zeros(grid);
    numvec q = m0;
    numvec next(static_cast<size_t>(grid.x_count()));
    const int K = grid.slice_count();
    for (int k = 0; k <= K; ++k) {
        // Boundary arrivals exit instantly.
        mu.at(k, 0) += q[0];
        mu.at(k, grid.x_count() - 1) += q[static_cast<size_t>(grid.x_count() - 1)];
        q[0] = 0.0;
        q[static_cast<size_t>(grid.x_count() - 1)] = 0.0;
        if (k == K) {
            for (int i = 1; i + 1 < grid.x_count(); ++i) mu.at(k, i) += q[static_cast<size_t>(i)];
            break;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 1; i + 1 < grid.x_count(); ++i) {
            const double arriving = q[static_cast<size_t>(i)];
            if (arriving == 0.0) continue;
            const double stopped = policy.stop_fraction(k, i) * arriving;
            mu.at(k, i) += stopped;
            const double alive = arriving - stopped;
            if (alive == 0.0) continue;
            for (int j = 0; j < grid.a_count(); ++j) {
                const double mass = alive * policy.prob(k, i, j);
                if (mass == 0.0) continue;
                m.at(k, i, j) += mass;
                next[static_cast<size_t>(i - 1)] += mass * trans.down(k, i, j);
                next[static_cast<size_t>(i)] += mass * trans.stay(k, i, j);
                next[static_cast<size_t>(i + 1)] += mass * trans.up(k, i, j);
            }
        }
        q.swap(next);
    }
    return {std::move(m), std::move(mu)};
}

} // namespace mfglp
