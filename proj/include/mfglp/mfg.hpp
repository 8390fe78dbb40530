#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfglp/chain.hpp"
#include "mfglp/core.hpp"
#include "mfglp/dp.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/lp.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/problem.hpp"
#include "mfglp/rng.hpp"

namespace mfglp {

/// A candidate population: exit measure and occupation flow.
struct MeasurePair {
    OccupationFlow m;
    ExitMeasure mu;
};

/// The always-feasible initialization: everyone stops at time 0. Feasible for
/// every frozen constraint set, whatever the coefficients do with moments.
inline MeasurePair stop_now_pair(const ProblemSpec& spec, const Grid& grid) {
    MeasurePair pair{OccupationFlow::zeros(grid), ExitMeasure::zeros(grid)};
    for (int i = 0; i < grid.x_count(); ++i)
        pair.mu.at(0, i) = spec.m0[static_cast<size_t>(i)];
    return pair;
}

struct BestResponse {
    MeasurePair pair;
    double value = 0.0;
    MomentVector moments; // the frozen field the response was computed against
    long lp_iterations = 0;
};

/**
 * One application of the best-response map: freeze the moments of the
 * candidate field, assemble its chain and LP, and solve. Returns one element
 * of the (possibly multi-valued) argmax; the simplex's deterministic pivot
 * rule fixes the selection.
 */
inline BestResponse best_response(const ProblemSpec& spec, const Grid& grid,
                                  const ExitMeasure& mu_bar, const OccupationFlow& m_bar,
                                  double lp_tol = 1e-9) {
    validate(m_bar, mu_bar, grid);
    BestResponse br;
    br.moments = moment_of(m_bar, mu_bar, spec, grid);
    const TransitionModel trans = assemble_transition(spec, grid, br.moments);
    const LinearProgram lp = build_occupation_lp(spec, grid, trans, br.moments);
    const LPSolution sol = solve_lp(lp, lp_tol);
    if (sol.status != LPStatus::optimal)
        throw NumericError(std::string("best_response: LP terminated with status ") + to_string(sol.status) +
                           (sol.warning.empty() ? "" : " (" + sol.warning + ")"));
    auto [m, mu] = extract_measures(lp, sol, grid);
    br.pair = MeasurePair{std::move(m), std::move(mu)};
    br.value = sol.value;
    br.lp_iterations = sol.iterations;
    return br;
}

/**
 * Equilibrium gap of a candidate: best-response value minus the candidate's
 * own value against the field it generates; zero exactly at fixed points of
 * the best-response map. The candidate must be feasible for its own frozen
 * constraint set (residual <= 1e-8) or a diagnostic error is raised.
 */
inline double exploitability(const ProblemSpec& spec, const Grid& grid,
                             const ExitMeasure& mu, const OccupationFlow& m,
                             double lp_tol = 1e-9) {
    validate(m, mu, grid);
    const MomentVector moments = moment_of(m, mu, spec, grid);
    const TransitionModel trans = assemble_transition(spec, grid, moments);
    const LinearProgram lp = build_occupation_lp(spec, grid, trans, moments);
    const double residual = constraint_residual(lp, m, mu);
    if (residual > 1e-8)
        throw NumericError("exploitability: candidate infeasible for its own constraint set, residual " +
                           std::to_string(residual));
    const LPSolution sol = solve_lp(lp, lp_tol);
    if (sol.status != LPStatus::optimal)
        throw NumericError(std::string("exploitability: LP terminated with status ") + to_string(sol.status));
    return sol.value - gamma_value(spec, grid, moments, m, mu);
}

struct TraceRow {
    int iter = 0;
    double exploitability = 0.0;
    double br_value = 0.0;
    double nash_value = 0.0; // candidate's own-field value at this iteration
    double distance = 0.0;   // distance moved by the damped step
    double lambda = 0.0;     // damping used for the step
};

struct EquilibriumResult {
    ExitMeasure mu_star;
    OccupationFlow m_star;
    double nash_value = 0.0;
    double exploitability = 0.0;
    bool converged = false;
    int iterations = 0; // damped steps performed
    std::vector<TraceRow> trace;
    std::string warning;
    // multi-start aggregates (singleton run: spread 0, one converged run)
    double nash_value_spread = 0.0;
    int runs_converged = 0;
};

struct MfgOptions {
    double damping = 0.5;  // in (0, 1]
    double tol = 1e-6;     // exploitability / distance termination
    int max_iter = 200;
    double lp_tol = 1e-9;
    int n_starts = 3;      // used by multi_start_select
    std::uint64_t seed = 42;
};

namespace detail {

// L1 distance between the stacked moment vectors of the two candidates plus
// L1 between their exit tensors: moments are what the coefficients consume,
// the exit tensor is what the exit reward consumes.
inline double iterate_distance(const ProblemSpec& spec, const Grid& grid,
                               const MeasurePair& a, const MomentVector& mom_a,
                               const MeasurePair& b) {
    const MomentVector mom_b = moment_of(b.m, b.mu, spec, grid);
    double dist = l1_distance(mom_a.z_drift, mom_b.z_drift) +
                  l1_distance(mom_a.z_diffusion, mom_b.z_diffusion) +
                  l1_distance(mom_a.z_running, mom_b.z_running) +
                  l1_distance(mom_a.w_exit, mom_b.w_exit);
    dist += l1_distance(a.mu.values, b.mu.values);
    return dist;
}

} // namespace detail

/**
 * Damped Picard iteration on the best-response map:
 *
 *   candidate_{n+1} = (1 - lambda) candidate_n + lambda BR(candidate_n),
 *
 * valid because each frozen constraint set is convex. Iteration n solves one
 * best-response LP and records the exploitability of candidate_n; the loop
 * stops when it falls below tol, when the step distance falls below tol, or
 * at max_iter, returning the best iterate seen. The step size is managed in
 * epochs: lambda starts at the configured damping and stays fixed while the
 * exploitability keeps beating the epoch's best by a lambda-scaled margin
 * (a healthy damped traverse contracts the gap at a rate proportional to
 * lambda, so the margin never cuts off slow-but-real progress). Once eight
 * consecutive iterations fail that bar the iterate has reached the limit
 * cycle this step size supports, whose radius scales with lambda: the loop
 * halves lambda, re-centers the candidate on the best iterate seen, and
 * opens a new epoch. Halving only on verified stagnation avoids starving
 * long traverses; re-centering keeps the new, smaller cycle anchored at the
 * best point the old epoch found. Damped averages can drift out of the
 * constraint set their own moments define when drift/diffusion read the
 * population; iterates whose residual exceeds 1e-8 are re-projected by
 * pushing their own stopping/control policy through their frozen chain (the
 * admissibility construction), which restores exact feasibility.
 */
inline EquilibriumResult fixed_point_solve(const ProblemSpec& spec, const Grid& grid,
                                           const MfgOptions& opts = {},
                                           std::optional<MeasurePair> init = std::nullopt) {
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw ConfigError("fixed_point_solve: damping must lie in (0, 1]");
    if (!(opts.tol > 0.0)) throw ConfigError("fixed_point_solve: tol must be positive");
    if (opts.max_iter < 1) throw ConfigError("fixed_point_solve: max_iter must be >= 1");
    validate(spec, grid);

    MeasurePair cand = init ? std::move(*init) : stop_now_pair(spec, grid);
    validate(cand.m, cand.mu, grid);

    EquilibriumResult result;
    double lambda = opts.damping;
    double best_e = std::numeric_limits<double>::infinity();
    double epoch_best = std::numeric_limits<double>::infinity();
    int stall = 0;
    bool fresh_epoch = false;  // skip the bar update right after a re-center

    for (int n = 0; n <= opts.max_iter; ++n) {
        MomentVector mom = moment_of(cand.m, cand.mu, spec, grid);
        TransitionModel trans = assemble_transition(spec, grid, mom);
        LinearProgram lp = build_occupation_lp(spec, grid, trans, mom);
        double residual = constraint_residual(lp, cand.m, cand.mu);
        if (residual > 1e-8) {
            for (int pass = 0; pass < 5 && residual > 1e-8; ++pass) {
                const MixedPolicy policy = policy_of_measures(cand.m, cand.mu);
                auto [m2, mu2] = push_forward(policy, trans, grid, spec.m0);
                cand = MeasurePair{std::move(m2), std::move(mu2)};
                mom = moment_of(cand.m, cand.mu, spec, grid);
                trans = assemble_transition(spec, grid, mom);
                lp = build_occupation_lp(spec, grid, trans, mom);
                residual = constraint_residual(lp, cand.m, cand.mu);
            }
            if (residual > 1e-8)
                throw NumericError("fixed_point_solve: re-projection left residual " + std::to_string(residual) +
                                   "; the moment coupling of drift/diffusion is too strong for this grid");
        }
        const LPSolution sol = solve_lp(lp, opts.lp_tol);
        if (sol.status != LPStatus::optimal)
            throw NumericError(std::string("fixed_point_solve: LP terminated with status ") + to_string(sol.status));
        auto [br_m, br_mu] = extract_measures(lp, sol, grid);
        const double cand_value = gamma_value(spec, grid, mom, cand.m, cand.mu);
        const double e = sol.value - cand_value;
        if (e < -1e-6)
            throw NumericError("fixed_point_solve: exploitability " + std::to_string(e) +
                               " below feasibility slack; solver breakdown");

        if (e < best_e) {
            best_e = e;
            result.mu_star = cand.mu;
            result.m_star = cand.m;
            result.nash_value = cand_value;
        }
        if (e <= opts.tol) {
            result.trace.push_back({n, e, sol.value, cand_value, 0.0, lambda});
            break;
        }
        if (n == opts.max_iter) {
            result.trace.push_back({n, e, sol.value, cand_value, 0.0, lambda});
            break;
        }

        if (fresh_epoch) {
            // This evaluation is the re-centered point itself; the epoch's
            // bar starts from the first genuine step after it.
            fresh_epoch = false;
        } else if (e < epoch_best * (1.0 - 0.125 * lambda)) {
            epoch_best = e;
            stall = 0;
        } else {
            ++stall;
        }

        if (stall >= 8) {
            stall = 0;
            lambda = std::max(0.5 * lambda, 1e-7);
            // A fresh bar for the new epoch: the first step away from the
            // re-centered point worsens the gap by O(lambda) before the
            // traverse recovers it, so progress must be measured against the
            // epoch's own history, not the pre-jump best.
            epoch_best = std::numeric_limits<double>::infinity();
            fresh_epoch = true;
            MeasurePair next{result.m_star, result.mu_star};
            const double dist = detail::iterate_distance(
                spec, grid, next, moment_of(next.m, next.mu, spec, grid), cand);
            result.trace.push_back({n, e, sol.value, cand_value, dist, lambda});
            cand = std::move(next);
            ++result.iterations;
            continue;
        }

        MeasurePair next{combine(1.0 - lambda, cand.m, lambda, br_m),
                         combine(1.0 - lambda, cand.mu, lambda, br_mu)};
        const double dist = detail::iterate_distance(spec, grid, next, moment_of(next.m, next.mu, spec, grid), cand);
        result.trace.push_back({n, e, sol.value, cand_value, dist, lambda});
        cand = std::move(next);
        ++result.iterations;
        if (dist <= opts.tol) break;
    }

    result.exploitability = best_e;
    result.converged = best_e <= opts.tol;
    result.runs_converged = result.converged ? 1 : 0;
    return result;
}

/// A randomized feasible initialization: an arbitrary stopping profile and
/// control kernel pushed through the chain frozen at zero moments.
inline MeasurePair random_start(const ProblemSpec& spec, const Grid& grid, CounterRng& rng) {
    MixedPolicy policy;
    policy.t_count = grid.t_count;
    policy.nx = grid.x_count();
    policy.na = grid.a_count();
    policy.theta.resize(static_cast<size_t>(grid.t_count) * grid.x_count());
    policy.kernel.resize(static_cast<size_t>(grid.slice_count()) * grid.x_count() * grid.a_count());
    for (double& th : policy.theta) th = rng.next_unit();
    for (int k = 0; k < grid.slice_count(); ++k)
        for (int i = 0; i < grid.x_count(); ++i) {
            double total = 0.0;
            const size_t base = policy.node(k, i) * grid.a_count();
            for (int j = 0; j < grid.a_count(); ++j) {
                policy.kernel[base + j] = rng.next_unit() + 1e-12;
                total += policy.kernel[base + j];
            }
            for (int j = 0; j < grid.a_count(); ++j) policy.kernel[base + j] /= total;
        }
    const MomentVector zero = MomentVector::zeros(spec.moment_dim, grid.slice_count());
    const TransitionModel trans = assemble_transition(spec, grid, zero);
    auto [m, mu] = push_forward(policy, trans, grid, spec.m0);
    return MeasurePair{std::move(m), std::move(mu)};
}

/**
 * Runs fixed_point_solve from n_starts initializations (the deterministic
 * stop-now start, then seeded random policies) and returns the converged run
 * with maximal Nash value, tagged with the spread max - min of Nash values
 * across converged runs. Zero converged runs raise an aggregate error.
 */
inline EquilibriumResult multi_start_select(const ProblemSpec& spec, const Grid& grid,
                                            const MfgOptions& opts = {}) {
    if (opts.n_starts < 1) throw ConfigError("multi_start_select: n_starts must be >= 1");
    std::vector<EquilibriumResult> runs;
    runs.reserve(static_cast<size_t>(opts.n_starts));
    for (int r = 0; r < opts.n_starts; ++r) {
        std::optional<MeasurePair> init;
        if (r > 0) {
            CounterRng rng(opts.seed, static_cast<std::uint64_t>(r));
            init = random_start(spec, grid, rng);
        }
        runs.push_back(fixed_point_solve(spec, grid, opts, std::move(init)));
    }
    int best = -1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int converged_count = 0;
    for (int r = 0; r < opts.n_starts; ++r) {
        if (!runs[static_cast<size_t>(r)].converged) continue;
        ++converged_count;
        const double nash = runs[static_cast<size_t>(r)].nash_value;
        lo = std::min(lo, nash);
        hi = std::max(hi, nash);
        if (best < 0 || nash > runs[static_cast<size_t>(best)].nash_value) best = r;
    }
    if (best < 0) {
        std::string msg = "multi_start_select: no run converged;";
        for (int r = 0; r < opts.n_starts; ++r)
            msg += " run " + std::to_string(r) + " exploitability " +
                   std::to_string(runs[static_cast<size_t>(r)].exploitability) + ",";
        msg.pop_back();
        throw NumericError(msg);
    }
    EquilibriumResult result = std::move(runs[static_cast<size_t>(best)]);
    result.nash_value_spread = hi - lo;
    result.runs_converged = converged_count;
    return result;
}

} // namespace mfglp
