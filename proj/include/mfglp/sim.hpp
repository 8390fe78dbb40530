#pragma once

/**
 * N-player Monte Carlo simulator.
 *
 * Runs N independent agents under a fixed feedback policy through the
 * discrete dynamics, accumulates the empirical occupation and exit measures,
 * and scores each agent against the frozen mean field.  Agents never interact
 * directly: the policy and the transition model are precomputed from the
 * frozen flow, so the run measures how fast the empirical system approaches
 * its mean-field limit, nothing more.
 */

#include <cmath>
#include <cstdint>

#include "mfglp/chain.hpp"
#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/problem.hpp"
#include "mfglp/rng.hpp"

namespace mfglp {

/** Result of simulating a finite population under one policy. */
struct PopulationRun {
    std::int64_t n_agents = 0;
    std::uint64_t seed = 0;
    OccupationFlow empirical_m;  ///< (1/N) * #{agents alive at k in state i choosing j}
    ExitMeasure empirical_mu;    ///< (1/N) * #{agents exiting at (k, i)}
    double payoff_mean = 0;      ///< average realized reward across agents
    double payoff_se = 0;        ///< standard error of the mean (0 when N = 1)
};

namespace detail {

/// Inverse-CDF sample from a discrete distribution given a uniform draw.
inline int sample_index(const numvec& weights, double u) {
    double acc = 0.0;
    const int n = static_cast<int>(weights.size());
    for (int i = 0; i < n; ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // Guard against accumulated rounding: fall back to the last positive cell.
    for (int i = n - 1; i >= 0; --i)
        if (weights[i] > 0.0) return i;
    return n - 1;
}

}  // namespace detail

/**
 * Simulates `n_agents` independent trajectories.
 *
 * Each agent draws its own counter-based random stream from (seed, agent
 * index), so runs are bit-identical regardless of scheduling and adding
 * agents never perturbs earlier ones.  Per step the agent first exits if it
 * sits on the boundary or the terminal slice or its policy stops, otherwise
 * it plays the policy action, collects running reward, and moves by sampling
 * the chain (up, then down, then stay in cumulative order).
 *
 * `moments` carries the frozen mean-field interaction terms used to evaluate
 * rewards, matching the flow the transition model was assembled from.
 */
inline PopulationRun simulate_population(const ProblemSpec& spec, const Grid& grid,
                                         const TransitionModel& trans,
                                         const FeedbackPolicy& policy,
                                         const MomentVector& moments, std::int64_t n_agents,
                                         std::uint64_t seed) {
    if (n_agents < 1) throw ConfigError("simulate_population: n_agents must be >= 1");
    if (policy.t_count != grid.t_count || policy.nx != grid.x_count())
        throw ShapeError("simulate_population: policy shape does not match grid");
    if (trans.slices != grid.slice_count() || trans.nx != grid.x_count() ||
        trans.na != grid.a_count())
        throw ShapeError("simulate_population: transition model shape does not match grid");

    const int nx = grid.x_count();
    const int K = grid.slice_count();
    PopulationRun run;
    run.n_agents = n_agents;
    run.seed = seed;
    run.empirical_m = OccupationFlow::zeros(grid);
    run.empirical_mu = ExitMeasure::zeros(grid);

    double payoff_sum = 0.0, payoff_sq_sum = 0.0;
    for (std::int64_t agent = 0; agent < n_agents; ++agent) {
        CounterRng rng(seed, static_cast<std::uint64_t>(agent));
        int i = detail::sample_index(spec.m0, rng.next_unit());
        double payoff = 0.0;
        for (int k = 0;; ++k) {
            const double t = grid.time(k);
            const bool must_exit = grid.is_boundary(i) || k == K || policy.stops(k, i);
            if (must_exit) {
                run.empirical_mu.values[run.empirical_mu.index(k, i)] += 1.0;
                payoff += spec.exit_reward(t, grid.x(i), moments.exit());
                break;
            }
            const int j = policy.action_at(k, i);
            run.empirical_m.values[run.empirical_m.index(k, i, j)] += 1.0;
            payoff += spec.running_reward(t, grid.x(i), moments.running_at(k), grid.action(j)) *
                      grid.dt;
            const double u = rng.next_unit();
            const double pu = trans.up(k, i, j);
            const double pd = trans.down(k, i, j);
            if (u < pu)
                ++i;
            else if (u < pu + pd)
                --i;
        }
        payoff_sum += payoff;
        payoff_sq_sum += payoff * payoff;
    }

    const double inv_n = 1.0 / static_cast<double>(n_agents);
    for (double& v : run.empirical_m.values) v *= inv_n;
    for (double& v : run.empirical_mu.values) v *= inv_n;
    run.payoff_mean = payoff_sum * inv_n;
    if (n_agents > 1) {
        const double var =
            (payoff_sq_sum - payoff_sum * payoff_sum * inv_n) / static_cast<double>(n_agents - 1);
        run.payoff_se = std::sqrt(std::max(var, 0.0) * inv_n);
    }
    return run;
}

/**
 * L1 distance between the empirical tensors of a run and a mean-field pair,
 * normalized by the number of tensors compared (two: occupation and exit).
 * Two disjoint unit measures therefore sit at distance (2 + 0)/2 = 1 when the
 * exit tensors coincide and 2 when both tensors are disjoint.
 */
inline double chaos_distance(const PopulationRun& run, const OccupationFlow& m_star,
                             const ExitMeasure& mu_star) {
    return (l1_distance(run.empirical_m, m_star) + l1_distance(run.empirical_mu, mu_star)) / 2.0;
}

}  // namespace mfglp
