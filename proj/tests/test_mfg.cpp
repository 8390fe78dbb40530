#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfglp/mfg.hpp"
#include "mfglp/registry.hpp"
#include "mfglp/rng.hpp"

using namespace mfglp;

namespace {

/// Population-coupled drift (b = a + 0.2 z, z = alive mass): the damped
/// average of two feasible iterates is not feasible for its own chain, so the
/// iteration has to re-project.
ProblemSpec drift_coupled_spec(const Grid& grid) {
    ProblemSpec spec;
    spec.name = "drift-coupled";
    spec.T = grid.horizon();
    spec.x_lo = grid.x_nodes.front();
    spec.x_hi = grid.x_nodes.back();
    spec.boundary_mode = BoundaryMode::attainable;
    spec.sigma_floor = 0.2;
    spec.moment_dim = 1;
    spec.drift_kernel = [](double, double, std::span<double> out) { out[0] = 1.0; };
    spec.diffusion_kernel = [](double, double, std::span<double> out) { out[0] = 0.0; };
    spec.running_kernel = [](double, double, std::span<double> out) { out[0] = 0.0; };
    spec.exit_kernel = [](double, double, std::span<double> out) { out[0] = 0.0; };
    spec.drift = [](double, double, std::span<const double> z, double a) {
        return a + 0.2 * z[0];
    };
    spec.diffusion = [](double, double, std::span<const double>, double) { return 0.2; };
    spec.running_reward = [](double, double x, std::span<const double>, double a) {
        const double u = x - 0.6;
        return 1.0 - 3.0 * u * u - 0.05 * a * a;
    };
    spec.exit_reward = [](double, double, std::span<const double>) { return 0.1; };
    spec.convex_actions = true;
    const int nx = grid.x_count();
    spec.m0.assign(static_cast<size_t>(nx), 0.0);
    for (int i = 1; i + 1 < nx; ++i) spec.m0[static_cast<size_t>(i)] = 1.0;
    for (double& w : spec.m0) w /= static_cast<double>(nx - 2);
    return spec;
}

}  // namespace

TEST_CASE("the stop-now candidate is feasible and optimal where stopping pays") {
    const Grid grid = registry_grid("stop-now", 10, 11, 1);
    const ProblemSpec spec = make_problem("stop-now", grid);
    const MeasurePair cand = stop_now_pair(spec, grid);
    validate(cand.m, cand.mu, grid);
    const double e = exploitability(spec, grid, cand.mu, cand.m);
    REQUIRE(e >= -1e-9);
    REQUIRE(e <= 1e-9);
}

TEST_CASE("a suboptimal vertex has strictly positive exploitability") {
    const Grid grid = registry_grid("never-stop", 8, 9, 1);
    const ProblemSpec spec = make_problem("never-stop", grid);
    const MeasurePair cand = stop_now_pair(spec, grid);  // scores 0, optimum is T
    const double e = exploitability(spec, grid, cand.mu, cand.m);
    REQUIRE(e > 0.5);
}

TEST_CASE("candidates that violate their own constraint set are diagnosed") {
    const Grid grid = registry_grid("martingale", 8, 11, 1);
    const ProblemSpec spec = make_problem("martingale", grid);
    MeasurePair cand{OccupationFlow::zeros(grid), ExitMeasure::zeros(grid)};
    cand.mu.at(0, 1) = 1.0;  // valid as a measure, inconsistent with m0
    REQUIRE_THROWS_MATCHES(
        exploitability(spec, grid, cand.mu, cand.m), NumericError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("infeasible")));
}

TEST_CASE("best response ignores the candidate when coefficients ignore moments") {
    const Grid grid = registry_grid("drift-control", 10, 11, 3);
    const ProblemSpec spec = make_problem("drift-control", grid);
    const MeasurePair a = stop_now_pair(spec, grid);
    CounterRng rng(7, 0);
    const MeasurePair b = random_start(spec, grid, rng);
    const BestResponse ra = best_response(spec, grid, a.mu, a.m);
    const BestResponse rb = best_response(spec, grid, b.mu, b.m);
    REQUIRE(ra.value == rb.value);
    REQUIRE(ra.pair.m.values == rb.pair.m.values);
    REQUIRE(ra.pair.mu.values == rb.pair.mu.values);
    REQUIRE(ra.value >= gamma_value(spec, grid, ra.moments, a.m, a.mu) - 1e-9);
    REQUIRE(rb.value >= gamma_value(spec, grid, rb.moments, b.m, b.mu) - 1e-9);
}

TEST_CASE("measure-independent problems converge after a single undamped step") {
    const Grid grid = registry_grid("drift-control", 10, 11, 3);
    const ProblemSpec spec = make_problem("drift-control", grid);
    MfgOptions opts;
    opts.damping = 1.0;
    opts.tol = 1e-9;
    const EquilibriumResult eq = fixed_point_solve(spec, grid, opts);
    REQUIRE(eq.converged);
    REQUIRE(eq.iterations == 1);
    REQUIRE(eq.exploitability <= 1e-9);
    // The equilibrium flow is just the optimal single-agent flow.
    const double e_again = exploitability(spec, grid, eq.mu_star, eq.m_star);
    REQUIRE(std::abs(e_again) <= 1e-9);
}

TEST_CASE("congestion game converges under damping with a coherent trace") {
    const Grid grid = registry_grid("congestion-mfg", 12, 12, 3);
    const ProblemSpec spec = make_problem("congestion-mfg", grid);
    MfgOptions opts;
    opts.damping = 0.5;
    opts.tol = 1e-6;
    opts.max_iter = 200;
    const EquilibriumResult eq = fixed_point_solve(spec, grid, opts);
    REQUIRE(eq.converged);
    REQUIRE(eq.exploitability <= 1e-6);
    REQUIRE_FALSE(eq.trace.empty());
    REQUIRE(eq.exploitability <= eq.trace.front().exploitability);
    for (size_t r = 0; r < eq.trace.size(); ++r) {
        const TraceRow& row = eq.trace[r];
        REQUIRE(row.iter == static_cast<int>(r));
        REQUIRE(row.exploitability == row.br_value - row.nash_value);
        REQUIRE(row.exploitability >= -1e-6);
        REQUIRE(row.lambda > 0.0);
        REQUIRE(row.lambda <= opts.damping);
    }
    // The selected equilibrium is feasible and at most tol exploitable when
    // re-scored from scratch.
    const double e = exploitability(spec, grid, eq.mu_star, eq.m_star);
    REQUIRE(e <= 1e-6 + 1e-9);
    REQUIRE(e >= -1e-9);
}

TEST_CASE("anti-monotone coupling pins the Nash value across starts") {
    const Grid grid = registry_grid("crowd-exit-mfg", 10, 10, 3);
    const ProblemSpec spec = make_problem("crowd-exit-mfg", grid);
    MfgOptions opts;
    opts.damping = 0.5;
    opts.tol = 1e-6;
    opts.max_iter = 200;
    opts.n_starts = 3;
    opts.seed = 42;
    const EquilibriumResult eq = multi_start_select(spec, grid, opts);
    REQUIRE(eq.runs_converged == 3);
    REQUIRE(eq.nash_value_spread <= 1e-5);
    REQUIRE(eq.exploitability <= 1e-6);
}

TEST_CASE("population-coupled drift is re-projected back to feasibility") {
    const Grid grid = make_grid(8, 9, 3, 0.5, 0.0, 1.0, -0.2, 0.2);
    const ProblemSpec spec = drift_coupled_spec(grid);
    MfgOptions opts;
    opts.damping = 0.5;
    opts.tol = 1e-6;
    opts.max_iter = 100;
    const EquilibriumResult eq = fixed_point_solve(spec, grid, opts);
    REQUIRE(eq.iterations >= 1);
    // Whatever the iteration did internally, the reported equilibrium must be
    // exactly feasible for its own frozen constraint set.
    const double e = exploitability(spec, grid, eq.mu_star, eq.m_star);
    REQUIRE(e >= -1e-9);
    if (eq.converged) REQUIRE(e <= opts.tol + 1e-9);
}

TEST_CASE("fixed-point runs are bit-reproducible") {
    const Grid grid = registry_grid("congestion-mfg", 10, 10, 3);
    const ProblemSpec spec = make_problem("congestion-mfg", grid);
    MfgOptions opts;
    opts.damping = 0.5;
    opts.tol = 1e-6;
    const EquilibriumResult r1 = fixed_point_solve(spec, grid, opts);
    const EquilibriumResult r2 = fixed_point_solve(spec, grid, opts);
    REQUIRE(r1.m_star.values == r2.m_star.values);
    REQUIRE(r1.mu_star.values == r2.mu_star.values);
    REQUIRE(r1.nash_value == r2.nash_value);
    REQUIRE(r1.exploitability == r2.exploitability);
    REQUIRE(r1.trace.size() == r2.trace.size());
}

TEST_CASE("iteration options are validated up front") {
    const Grid grid = registry_grid("congestion-mfg", 8, 8, 3);
    const ProblemSpec spec = make_problem("congestion-mfg", grid);
    MfgOptions opts;
    opts.damping = 0.0;
    REQUIRE_THROWS_AS(fixed_point_solve(spec, grid, opts), ConfigError);
    opts.damping = 1.5;
    REQUIRE_THROWS_AS(fixed_point_solve(spec, grid, opts), ConfigError);
    opts.damping = 0.5;
    opts.tol = 0.0;
    REQUIRE_THROWS_AS(fixed_point_solve(spec, grid, opts), ConfigError);
    opts.tol = 1e-6;
    opts.max_iter = 0;
    REQUIRE_THROWS_AS(fixed_point_solve(spec, grid, opts), ConfigError);
    opts.max_iter = 200;
    opts.n_starts = 0;
    REQUIRE_THROWS_AS(multi_start_select(spec, grid, opts), ConfigError);
}

TEST_CASE("multi-start reports an aggregate error when nothing converges") {
    const Grid grid = registry_grid("congestion-mfg", 8, 8, 3);
    const ProblemSpec spec = make_problem("congestion-mfg", grid);
    MfgOptions opts;
    opts.tol = 1e-15;  // unreachable
    opts.max_iter = 1;
    opts.n_starts = 2;
    REQUIRE_THROWS_MATCHES(
        multi_start_select(spec, grid, opts), NumericError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("no run converged")));
}
