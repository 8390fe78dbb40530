#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfglp/dp.hpp"
#include "mfglp/lp.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/registry.hpp"

using namespace mfglp;

namespace {

struct Solved {
    Grid grid;
    ProblemSpec spec;
    MomentVector moments;
    TransitionModel trans;
    ValueFunction vf;
};

Solved dp(const std::string& name, int t, int x, int a) {
    const Grid grid = registry_grid(name, t, x, a);
    Solved s{grid, make_problem(name, grid),
             MomentVector::zeros(0, grid.slice_count()), {}, {}};
    s.moments = MomentVector::zeros(s.spec.moment_dim, grid.slice_count());
    s.trans = assemble_transition(s.spec, s.grid, s.moments);
    s.vf = dp_solve(s.spec, s.grid, s.trans, s.moments);
    return s;
}

}  // namespace

TEST_CASE("pure running reward with worthless exit accumulates remaining time") {
    Solved s = dp("never-stop", 6, 7, 1);
    const int K = s.grid.slice_count();
    for (int k = 0; k <= K; ++k)
        for (int i = 1; i + 1 < s.grid.x_count(); ++i)
            REQUIRE_THAT(s.vf.value(k, i),
                         Catch::Matchers::WithinAbs((K - k) * s.grid.dt, 1e-12));
    REQUIRE_THAT(dp_value_at_zero(s.vf, s.spec),
                 Catch::Matchers::WithinAbs(s.grid.horizon(), 1e-12));
    // Stopping is never profitable strictly inside the horizon.
    for (int k = 0; k < K; ++k)
        for (int i = 1; i + 1 < s.grid.x_count(); ++i)
            REQUIRE_FALSE(s.vf.in_contact(k, i));
}

TEST_CASE("driftless chain prices the identity reward exactly") {
    Solved s = dp("martingale", 9, 13, 1);
    for (int k = 0; k < s.grid.t_count; ++k)
        for (int i = 0; i < s.grid.x_count(); ++i) {
            REQUIRE_THAT(s.vf.value(k, i),
                         Catch::Matchers::WithinAbs(s.grid.x(i), 1e-10));
            REQUIRE(s.vf.in_contact(k, i));  // indifference counts as contact
        }
    double expected = 0.0;
    for (int i = 0; i < s.grid.x_count(); ++i)
        expected += s.grid.x(i) * s.spec.m0[static_cast<size_t>(i)];
    REQUIRE_THAT(dp_value_at_zero(s.vf, s.spec),
                 Catch::Matchers::WithinAbs(expected, 1e-10));
}

TEST_CASE("value dominates the obstacle and matches it on exit rows") {
    Solved s = dp("american-put-like", 10, 13, 1);
    const int K = s.grid.slice_count();
    for (int k = 0; k < s.grid.t_count; ++k)
        for (int i = 0; i < s.grid.x_count(); ++i)
            REQUIRE(s.vf.value(k, i) >= s.vf.obstacle_at(k, i) - 1e-12);
    for (int i = 0; i < s.grid.x_count(); ++i)
        REQUIRE(s.vf.value(K, i) == s.vf.obstacle_at(K, i));
    for (int k = 0; k < K; ++k)
        for (int i : {0, s.grid.x_count() - 1})
            REQUIRE(s.vf.value(k, i) == s.vf.obstacle_at(k, i));
}

TEST_CASE("value is monotone in both reward coefficients") {
    const Grid grid = registry_grid("american-put-like", 10, 13, 1);
    const ProblemSpec base = make_problem("american-put-like", grid);
    const MomentVector mv = MomentVector::zeros(base.moment_dim, grid.slice_count());
    const TransitionModel trans = assemble_transition(base, grid, mv);
    const ValueFunction v0 = dp_solve(base, grid, trans, mv);

    ProblemSpec lifted_g = base;
    lifted_g.exit_reward = [&base](double t, double x, std::span<const double> w) {
        return base.exit_reward(t, x, w) + 0.1;
    };
    const ValueFunction vg = dp_solve(lifted_g, grid, trans, mv);

    ProblemSpec lifted_f = base;
    lifted_f.running_reward = [&base](double t, double x, std::span<const double> z, double a) {
        return base.running_reward(t, x, z, a) + 0.2;
    };
    const ValueFunction vfup = dp_solve(lifted_f, grid, trans, mv);

    for (size_t q = 0; q < v0.v.size(); ++q) {
        REQUIRE(vg.v[q] >= v0.v[q] - 1e-12);
        REQUIRE(vfup.v[q] >= v0.v[q] - 1e-12);
    }
}

TEST_CASE("strong and weak formulations agree on registry problems") {
    for (const auto& [name, t, x, a] :
         {std::tuple{std::string("american-put-like"), 10, 13, 1},
          std::tuple{std::string("drift-control"), 10, 11, 3},
          std::tuple{std::string("stop-now"), 8, 9, 1}}) {
        Solved s = dp(name, t, x, a);
        const LinearProgram lp = build_occupation_lp(s.spec, s.grid, s.trans, s.moments);
        const LPSolution sol = solve_lp(lp);
        REQUIRE(sol.status == LPStatus::optimal);
        const double v_dp = dp_value_at_zero(s.vf, s.spec);
        INFO("problem " << name);
        REQUIRE(std::abs(sol.value - v_dp) <= 1e-6 * (1.0 + std::abs(v_dp)));
    }
}

TEST_CASE("action ties break deterministically to the lowest index") {
    // Make every action interchangeable: coefficients ignore the control.
    const Grid grid = make_grid(6, 9, 3, 0.5, 0.0, 1.0, -1.0, 1.0);
    ProblemSpec spec;
    spec.name = "tie";
    spec.T = 0.5;
    spec.x_lo = 0.0;
    spec.x_hi = 1.0;
    spec.boundary_mode = BoundaryMode::attainable;
    spec.sigma_floor = 0.25;
    spec.drift = [](double, double, std::span<const double>, double) { return 0.1; };
    spec.diffusion = [](double, double, std::span<const double>, double) { return 0.25; };
    spec.running_reward = [](double, double x, std::span<const double>, double) { return x; };
    spec.exit_reward = [](double, double, std::span<const double>) { return 0.0; };
    spec.m0 = {0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    const MomentVector mv = MomentVector::zeros(0, grid.slice_count());
    const TransitionModel trans = assemble_transition(spec, grid, mv);
    const ValueFunction vf = dp_solve(spec, grid, trans, mv);
    for (int k = 0; k < grid.slice_count(); ++k)
        for (int i = 1; i + 1 < grid.x_count(); ++i)
            REQUIRE(vf.action_at(k, i) == 0);
}

TEST_CASE("two identical solves produce bit-identical value functions") {
    Solved a = dp("drift-control", 9, 11, 3);
    Solved b = dp("drift-control", 9, 11, 3);
    REQUIRE(a.vf.v == b.vf.v);
    REQUIRE(a.vf.contact == b.vf.contact);
    REQUIRE(a.vf.argmax_action == b.vf.argmax_action);
}

TEST_CASE("greedy feedback policy recovers the dynamic-programming value") {
    Solved s = dp("american-put-like", 10, 13, 1);
    const FeedbackPolicy fp = feedback_policy(s.vf);
    auto [m, mu] = push_forward(to_mixed(fp, s.grid.a_count()), s.trans, s.grid, s.spec.m0);
    const double scored = gamma_value(s.spec, s.grid, s.moments, m, mu);
    const double v_dp = dp_value_at_zero(s.vf, s.spec);
    // Stopping at tolerance-level contact nodes can shed at most about
    // contact_tol per decision, far inside the equivalence budget.
    REQUIRE_THAT(scored, Catch::Matchers::WithinAbs(v_dp, 1e-6 * (1.0 + std::abs(v_dp))));
}
