#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfglp/registry.hpp"
#include "mfglp/verify.hpp"

using namespace mfglp;

namespace {

struct Instance {
    Grid grid;
    ProblemSpec spec;
    MomentVector moments;
    TransitionModel trans;
    LinearProgram lp;
    LPSolution sol;
    OccupationFlow m = OccupationFlow{};
    ExitMeasure mu = ExitMeasure{};
};

Instance solve_registry(const std::string& name, int t, int x, int a) {
    const Grid grid = registry_grid(name, t, x, a);
    Instance s{grid, make_problem(name, grid), MomentVector::zeros(1, grid.slice_count()),
               {}, {}, {}};
    s.moments = MomentVector::zeros(s.spec.moment_dim, grid.slice_count());
    s.trans = assemble_transition(s.spec, s.grid, s.moments);
    s.lp = build_occupation_lp(s.spec, s.grid, s.trans, s.moments);
    s.sol = solve_lp(s.lp);
    auto [m, mu] = extract_measures(s.lp, s.sol, s.grid);
    s.m = std::move(m);
    s.mu = std::move(mu);
    return s;
}

}  // namespace

TEST_CASE("constraint check accepts exact measures and localizes a planted violation") {
    Instance s = solve_registry("american-put-like", 10, 13, 1);

    CertificationReport clean = check_constraint_residual(s.lp, s.m, s.mu);
    REQUIRE(clean.pass);
    REQUIRE(clean.residual <= 1e-8);

    OccupationFlow bad = s.m;
    bad.at(3, 5, 0) += 1e-3;
    CertificationReport dirty = check_constraint_residual(s.lp, bad, s.mu);
    REQUIRE_FALSE(dirty.pass);
    REQUIRE_THAT(dirty.residual, Catch::Matchers::WithinRel(1e-3, 1e-6));
}

TEST_CASE("hand-built stop-at-zero measures balance exactly") {
    Instance s = solve_registry("stop-now", 8, 9, 1);
    OccupationFlow m = OccupationFlow::zeros(s.grid);
    ExitMeasure mu = ExitMeasure::zeros(s.grid);
    for (int i = 0; i < s.grid.x_count(); ++i)
        mu.at(0, i) = s.spec.m0[static_cast<size_t>(i)];
    CertificationReport rep = check_constraint_residual(s.lp, m, mu);
    REQUIRE(rep.pass);
    REQUIRE(rep.residual == 0.0);
}

TEST_CASE("value equivalence holds on closed-form problems") {
    for (const auto& name : {std::string("stop-now"), std::string("never-stop")}) {
        const Grid grid = registry_grid(name, 8, 9, 1);
        const ProblemSpec spec = make_problem(name, grid);
        const MomentVector mv = MomentVector::zeros(spec.moment_dim, grid.slice_count());
        const CertificationReport rep = check_value_equivalence(spec, grid, mv);
        INFO("problem " << name);
        REQUIRE(rep.pass);
        REQUIRE(rep.residual <= 1e-9);
    }
}

TEST_CASE("value equivalence survives a spatial refinement ladder") {
    // Same continuum problem at dx = 0.1, 0.05, 0.025 with dt fixed: the two
    // formulations must agree at every resolution, not merely in the limit.
    for (int x_count : {11, 21, 41}) {
        const Grid grid = make_grid(21, x_count, 1, 0.5, 0.0, 1.0, 0.0, 0.0);
        ProblemSpec spec;
        spec.name = "ladder";
        spec.T = 0.5;
        spec.x_lo = 0.0;
        spec.x_hi = 1.0;
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.15;
        spec.moment_dim = 0;
        spec.drift = [](double, double, std::span<const double>, double) { return 0.0; };
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.15; };
        spec.running_reward = [](double, double x, std::span<const double>, double) {
            return x * (1.0 - x);
        };
        spec.exit_reward = [](double, double, std::span<const double>) { return 0.2; };
        const int nx = grid.x_count();
        spec.m0.assign(static_cast<size_t>(nx), 0.0);
        for (int i = 1; i + 1 < nx; ++i) spec.m0[static_cast<size_t>(i)] = 1.0;
        for (double& w : spec.m0) w /= static_cast<double>(nx - 2);

        const MomentVector mv = MomentVector::zeros(0, grid.slice_count());
        const CertificationReport rep = check_value_equivalence(spec, grid, mv);
        INFO("x_count " << x_count);
        REQUIRE(rep.pass);
    }
}

TEST_CASE("mixed-solution residuals vanish on solved instances") {
    SECTION("free boundary instance") {
        Instance s = solve_registry("american-put-like", 10, 13, 1);
        const ValueFunction vf = dp_solve(s.spec, s.grid, s.trans, s.moments);
        const MixedSolutionReports reps =
            check_mixed_solution(s.spec, s.grid, s.trans, s.moments, vf, s.m, s.mu);
        REQUIRE(reps.all_pass());
    }
    SECTION("contact everywhere: occupation mass near zero") {
        Instance s = solve_registry("stop-now", 8, 9, 1);
        const ValueFunction vf = dp_solve(s.spec, s.grid, s.trans, s.moments);
        const MixedSolutionReports reps =
            check_mixed_solution(s.spec, s.grid, s.trans, s.moments, vf, s.m, s.mu);
        REQUIRE(reps.all_pass());
    }
    SECTION("contact nowhere: value is harmonic along the flow") {
        Instance s = solve_registry("never-stop", 8, 9, 1);
        const ValueFunction vf = dp_solve(s.spec, s.grid, s.trans, s.moments);
        const MixedSolutionReports reps =
            check_mixed_solution(s.spec, s.grid, s.trans, s.moments, vf, s.m, s.mu);
        REQUIRE(reps.all_pass());
        REQUIRE(reps.exit_support.residual == 0.0);
    }
}

TEST_CASE("exit mass parked on a continuation node is flagged") {
    Instance s = solve_registry("never-stop", 8, 9, 1);
    const ValueFunction vf = dp_solve(s.spec, s.grid, s.trans, s.moments);
    OccupationFlow m = OccupationFlow::zeros(s.grid);
    ExitMeasure mu = ExitMeasure::zeros(s.grid);
    mu.at(0, 4) = 1.0;  // strict continuation node for this problem
    const MixedSolutionReports reps =
        check_mixed_solution(s.spec, s.grid, s.trans, s.moments, vf, m, mu);
    REQUIRE_FALSE(reps.exit_support.pass);
    REQUIRE(reps.exit_support.residual >= 1.0 - 1e-12);
}

TEST_CASE("a coarse contact tolerance is surfaced as a warning note") {
    Instance s = solve_registry("american-put-like", 8, 9, 1);
    const ValueFunction vf = dp_solve(s.spec, s.grid, s.trans, s.moments, 1e-4);
    const MixedSolutionReports reps =
        check_mixed_solution(s.spec, s.grid, s.trans, s.moments, vf, s.m, s.mu, 1e-6);
    REQUIRE(reps.stopping_region.note.find("contact tolerance") != std::string::npos);
}

TEST_CASE("purification is exact on LP vertices over convex action sets") {
    SECTION("single action") {
        Instance s = solve_registry("american-put-like", 10, 13, 1);
        const CertificationReport rep = check_strict_control(
            s.spec, s.grid, s.trans, s.moments, s.m, s.mu, s.sol.value);
        REQUIRE(rep.pass);
        REQUIRE(rep.note.empty());
    }
    SECTION("three actions, strictly concave running cost") {
        Instance s = solve_registry("drift-control", 10, 11, 3);
        const CertificationReport rep = check_strict_control(
            s.spec, s.grid, s.trans, s.moments, s.m, s.mu, s.sol.value);
        REQUIRE(rep.pass);
    }
}

TEST_CASE("purification is skipped when the action set is not declared convex") {
    Instance s = solve_registry("drift-control", 8, 9, 3);
    ProblemSpec spec = s.spec;
    spec.convex_actions = false;
    const CertificationReport rep =
        check_strict_control(spec, s.grid, s.trans, s.moments, s.m, s.mu, s.sol.value);
    REQUIRE(rep.pass);
    REQUIRE(rep.note.find("skipped") != std::string::npos);
}

TEST_CASE("a genuinely mixed control loses value under purification") {
    // Two drifts, indistinguishable running reward: purification must pick the
    // lowest-index action and forfeit the upward drift that the mixed control
    // uses half the time.
    const Grid grid = make_grid(8, 11, 2, 0.7, 0.0, 1.0, -0.4, 0.4);
    ProblemSpec spec;
    spec.name = "mixed";
    spec.T = 0.7;
    spec.x_lo = 0.0;
    spec.x_hi = 1.0;
    spec.boundary_mode = BoundaryMode::attainable;
    spec.sigma_floor = 0.15;
    spec.moment_dim = 0;
    spec.convex_actions = true;
    spec.drift = [](double, double, std::span<const double>, double a) { return a; };
    spec.diffusion = [](double, double, std::span<const double>, double) { return 0.15; };
    spec.running_reward = [](double, double, std::span<const double>, double) { return 0.0; };
    spec.exit_reward = [](double, double x, std::span<const double>) { return x; };
    spec.m0.assign(11, 0.0);
    spec.m0[5] = 1.0;
    const MomentVector mv = MomentVector::zeros(0, grid.slice_count());
    const TransitionModel trans = assemble_transition(spec, grid, mv);

    MixedPolicy pol;
    pol.t_count = grid.t_count;
    pol.nx = grid.x_count();
    pol.na = 2;
    pol.theta.assign(static_cast<size_t>(grid.t_count) * grid.x_count(), 0.0);
    pol.kernel.assign(static_cast<size_t>(grid.slice_count()) * grid.x_count() * 2, 0.5);
    auto [m, mu] = push_forward(pol, trans, grid, spec.m0);
    const double relaxed = gamma_value(spec, grid, mv, m, mu);

    const CertificationReport rep =
        check_strict_control(spec, grid, trans, mv, m, mu, relaxed);
    REQUIRE_FALSE(rep.pass);
    REQUIRE(rep.note.find("mixed") != std::string::npos);
    REQUIRE(rep.residual > 0.01);
}

TEST_CASE("the certification battery is complete and reproducible") {
    Instance s = solve_registry("drift-control", 10, 11, 3);
    const auto reports = certify_single(s.spec, s.grid, s.moments, s.m, s.mu, s.sol.value);
    REQUIRE(reports.size() == 6);
    REQUIRE(reports[0].name == "constraint_residual");
    REQUIRE(reports[1].name == "value_equivalence");
    REQUIRE(reports[2].name == "mixed_stopping_region");
    REQUIRE(reports[3].name == "mixed_continuation_region");
    REQUIRE(reports[4].name == "mixed_exit_support");
    REQUIRE(reports[5].name == "strict_control");
    for (const auto& r : reports) {
        INFO(r.name << " residual " << r.residual << " tol " << r.tol << " " << r.note);
        REQUIRE(r.pass);
    }
    const auto again = certify_single(s.spec, s.grid, s.moments, s.m, s.mu, s.sol.value);
    for (size_t q = 0; q < reports.size(); ++q) {
        REQUIRE(reports[q].residual == again[q].residual);
        REQUIRE(reports[q].pass == again[q].pass);
    }
}
