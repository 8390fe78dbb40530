#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "mfglp/chain.hpp"
#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/problem.hpp"

namespace mfglp {

/**
 * Discrete HJB variational inequality solution on the chain: the value v per
 * (time node, state node), the contact set S = {v = g within tolerance}, and
 * the optimal action per node. Boundary and terminal nodes carry v = g by
 * construction (the chain absorbs there, pricing the same exit event as the
 * LP).
 */
struct ValueFunction {
    int t_count = 0;
    int nx = 0;
    numvec v;                          // (k, i)
    numvec obstacle;                   // g(t_k, x_i, w_exit), cached
    std::vector<std::uint8_t> contact; // (k, i)
    std::vector<int> argmax_action;    // (k, i); -1 on boundary/terminal rows
    double contact_tol = 1e-8;         // scaled by (1 + |v|) per node

    size_t index(int k, int i) const { return static_cast<size_t>(k) * nx + i; }
    double value(int k, int i) const { return v[index(k, i)]; }
    double obstacle_at(int k, int i) const { return obstacle[index(k, i)]; }
    bool in_contact(int k, int i) const { return contact[index(k, i)] != 0; }
    int action_at(int k, int i) const { return argmax_action[index(k, i)]; }
};

/**
 * Backward induction for the mixed stopping/control problem at frozen
 * moments:
 *
 *   v[K,i] = g(T, x_i)
 *   v[k,i] = max( g(t_k,x_i),
 *                 max_j [ f(t_k,x_i,z_running[k],a_j) dt + E_p v[k+1,.] ] )
 *
 * on interior nodes, v = g on the boundary. Action ties break to the lowest
 * index; exact obstacle ties stop. contact[k,i] marks v - g <= tol*(1+|v|).
 */
inline ValueFunction dp_solve(const ProblemSpec& spec, const Grid& grid,
                              const TransitionModel& trans, const MomentVector& moments,
                              double contact_tol = 1e-8) {
    if (trans.slices != grid.slice_count() || trans.nx != grid.x_count() || trans.na != grid.a_count())
        throw ShapeError("dp_solve: transition model shape does not match grid");
    if (moments.d != spec.moment_dim || moments.slices != grid.slice_count())
        throw ShapeError("dp_solve: moment vector shape does not match problem and grid");

    const int nx = grid.x_count();
    const int K = grid.slice_count();
    ValueFunction vf;
    vf.t_count = grid.t_count;
    vf.nx = nx;
    vf.contact_tol = contact_tol;
    vf.v.assign(static_cast<size_t>(grid.t_count) * nx, 0.0);
    vf.obstacle.assign(vf.v.size(), 0.0);
    vf.contact.assign(vf.v.size(), 0);
    vf.argmax_action.assign(vf.v.size(), -1);

    for (int k = 0; k <= K; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < nx; ++i)
            vf.obstacle[vf.index(k, i)] = spec.exit_reward(t, grid.x(i), moments.exit());
    }
    // Terminal and boundary rows.
    for (int i = 0; i < nx; ++i) {
        vf.v[vf.index(K, i)] = vf.obstacle[vf.index(K, i)];
        vf.contact[vf.index(K, i)] = 1;
    }
    for (int k = 0; k < K; ++k)
        for (int i : {0, nx - 1}) {
            vf.v[vf.index(k, i)] = vf.obstacle[vf.index(k, i)];
            vf.contact[vf.index(k, i)] = 1;
        }

    for (int k = K - 1; k >= 0; --k) {
        const double t = grid.time(k);
        for (int i = 1; i + 1 < nx; ++i) {
            const double x = grid.x(i);
            double best = -std::numeric_limits<double>::infinity();
            int best_j = 0;
            for (int j = 0; j < grid.a_count(); ++j) {
                const double cont =
                    spec.running_reward(t, x, moments.running_at(k), grid.action(j)) * grid.dt +
                    trans.down(k, i, j) * vf.v[vf.index(k + 1, i - 1)] +
                    trans.stay(k, i, j) * vf.v[vf.index(k + 1, i)] +
                    trans.up(k, i, j) * vf.v[vf.index(k + 1, i + 1)];
                if (cont > best) {
                    best = cont;
                    best_j = j;
                }
            }
            const double g = vf.obstacle[vf.index(k, i)];
            const double v = std::max(g, best);
            vf.v[vf.index(k, i)] = v;
            vf.argmax_action[vf.index(k, i)] = best_j;
            vf.contact[vf.index(k, i)] = (v - g <= contact_tol * (1.0 + std::abs(v))) ? 1 : 0;
        }
    }
    return vf;
}

/// V^S = sum_i v[0,i] * m0[i], the strong-formulation value.
inline double dp_value_at_zero(const ValueFunction& vf, const ProblemSpec& spec) {
    if (static_cast<int>(spec.m0.size()) != vf.nx)
        throw ShapeError("dp_value_at_zero: m0 size does not match the value function");
    double s = 0.0;
    for (int i = 0; i < vf.nx; ++i) s += vf.value(0, i) * spec.m0[static_cast<size_t>(i)];
    return s;
}

/// Optimal feedback: stop at the first contact node, otherwise play the
/// argmax action. Boundary and terminal rows stop by construction.
inline FeedbackPolicy feedback_policy(const ValueFunction& vf) {
    FeedbackPolicy fp;
    fp.t_count = vf.t_count;
    fp.nx = vf.nx;
    fp.stop.assign(static_cast<size_t>(vf.t_count) * vf.nx, 0);
    fp.action.assign(fp.stop.size(), -1);
    for (int k = 0; k < vf.t_count; ++k)
        for (int i = 0; i < vf.nx; ++i) {
            fp.stop[fp.index(k, i)] = vf.in_contact(k, i) ? 1 : 0;
            fp.action[fp.index(k, i)] = vf.action_at(k, i);
        }
    return fp;
}

} // namespace mfglp
