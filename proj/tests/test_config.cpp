#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mfglp/config.hpp"
#include "mfglp/io.hpp"
#include "mfglp/mfg.hpp"
#include "mfglp/registry.hpp"

using namespace mfglp;

TEST_CASE("an empty document yields the documented defaults") {
    const RunConfig cfg = parse_config("");
    REQUIRE(cfg == RunConfig{});
    REQUIRE(cfg.problem == "stop-now");
    REQUIRE(cfg.damping == 0.5);
    REQUIRE(cfg.tol == 1e-6);
    REQUIRE(cfg.max_iter == 200);
    REQUIRE(cfg.n_starts == 3);
    REQUIRE(cfg.seed == 42);
    REQUIRE(cfg.n_agents == 1000);
    REQUIRE(cfg.t_count == 0);  // 0 = use the problem's recommendation
    REQUIRE(cfg.format == OutputFormat::csv);
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
    const RunConfig cfg = parse_config(
        "# solver settings\n"
        "\n"
        "problem = congestion-mfg   # built-in\n"
        "  damping=0.25\n"
        "tol   =   1e-8\n"
        "format = json\n"
        "seed = 7\n");
    REQUIRE(cfg.problem == "congestion-mfg");
    REQUIRE(cfg.damping == 0.25);
    REQUIRE(cfg.tol == 1e-8);
    REQUIRE(cfg.format == OutputFormat::json);
    REQUIRE(cfg.seed == 7);
}

TEST_CASE("malformed documents fail fast naming the offender") {
    using Catch::Matchers::ContainsSubstring;
    using Catch::Matchers::MessageMatches;
    REQUIRE_THROWS_MATCHES(parse_config("damping = 0\n"), ConfigError,
                           MessageMatches(ContainsSubstring("damping")));
    REQUIRE_THROWS_MATCHES(parse_config("wibble = 3\n"), ConfigError,
                           MessageMatches(ContainsSubstring("wibble")));
    REQUIRE_THROWS_MATCHES(parse_config("tol = 1e-6oops\n"), ConfigError,
                           MessageMatches(ContainsSubstring("trailing")));
    REQUIRE_THROWS_MATCHES(parse_config("just a line\n"), ConfigError,
                           MessageMatches(ContainsSubstring("line 1")));
    REQUIRE_THROWS_MATCHES(parse_config("format = xml\n"), ConfigError,
                           MessageMatches(ContainsSubstring("format")));
    REQUIRE_THROWS_MATCHES(parse_config("max_iter = 0\n"), ConfigError,
                           MessageMatches(ContainsSubstring("max_iter")));
}

TEST_CASE("serialize and parse round-trip every field") {
    RunConfig cfg;
    cfg.problem = "crowd-exit-mfg";
    cfg.t_count = 25;
    cfg.x_count = 40;
    cfg.a_count = 5;
    cfg.damping = 0.0078125;
    cfg.tol = 3.5e-11;
    cfg.max_iter = 1234;
    cfg.n_starts = 9;
    cfg.seed = 9007199254740993ull;
    cfg.n_agents = 100000;
    cfg.out_dir = "runs/exp01";
    cfg.format = OutputFormat::json;
    REQUIRE(parse_config(serialize_config(cfg)) == cfg);
    REQUIRE(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("tabulated problems round-trip through their file format") {
    const Grid grid = registry_grid("drift-control", 8, 9, 3);
    const ProblemSpec spec = make_problem("drift-control", grid);
    const TabulatedProblem tp = tabulate(spec, grid);

    std::ostringstream out;
    write_problem_file(out, tp);
    std::istringstream in(out.str());
    const TabulatedProblem back = read_problem_file(in);
    REQUIRE(back == tp);

    const Grid g2 = grid_of(back);
    REQUIRE(g2.t_count == grid.t_count);
    REQUIRE(g2.x_count() == grid.x_count());
    REQUIRE(g2.a_count() == grid.a_count());
    REQUIRE(g2.dt == grid.dt);
    REQUIRE(g2.dx == grid.dx);

    // Nearest-node lookup is exact at the nodes, so the tabulated spec
    // reproduces the original solve bit for bit.
    const ProblemSpec spec2 = to_spec(back);
    const MomentVector mv = MomentVector::zeros(spec.moment_dim, grid.slice_count());
    const TransitionModel tr1 = assemble_transition(spec, grid, mv);
    const TransitionModel tr2 = assemble_transition(spec2, g2, mv);
    REQUIRE(tr1.p_up == tr2.p_up);
    REQUIRE(tr1.p_down == tr2.p_down);
    const LPSolution s1 = solve_lp(build_occupation_lp(spec, grid, tr1, mv));
    const LPSolution s2 = solve_lp(build_occupation_lp(spec2, g2, tr2, mv));
    REQUIRE(s1.value == s2.value);
}

TEST_CASE("affine moment coupling reproduces a built-in mean-field game") {
    const Grid grid = registry_grid("congestion-mfg", 10, 10, 3);
    const ProblemSpec spec = make_problem("congestion-mfg", grid);
    TabulatedProblem tp = tabulate(spec, grid);
    // The congestion reward is affine in the alive-mass moment with constant
    // slope -0.5; tabulate() bakes the zero-moment baseline, the coupling
    // vector restores the interaction.
    tp.couple_running = {-0.5};
    const ProblemSpec spec2 = to_spec(tp);

    const MeasurePair cand = stop_now_pair(spec, grid);
    const BestResponse b1 = best_response(spec, grid, cand.mu, cand.m);
    const BestResponse b2 = best_response(spec2, grid, cand.mu, cand.m);
    REQUIRE_THAT(b2.value, Catch::Matchers::WithinAbs(b1.value, 1e-9));

    MfgOptions opts;
    opts.damping = 0.5;
    opts.tol = 1e-6;
    const EquilibriumResult e1 = fixed_point_solve(spec, grid, opts);
    const EquilibriumResult e2 = fixed_point_solve(spec2, grid, opts);
    REQUIRE(e1.converged);
    REQUIRE(e2.converged);
    // Both runs approximate the same unique Nash value to within their own
    // exploitability tolerance.
    REQUIRE_THAT(e2.nash_value, Catch::Matchers::WithinAbs(e1.nash_value, 5e-6));
}

TEST_CASE("problem files reject corruption with located errors") {
    using Catch::Matchers::ContainsSubstring;
    using Catch::Matchers::MessageMatches;
    const Grid grid = registry_grid("stop-now", 4, 5, 1);
    const TabulatedProblem tp = tabulate(make_problem("stop-now", grid), grid);
    std::ostringstream out;
    write_problem_file(out, tp);
    const std::string text = out.str();

    SECTION("wrong magic") {
        std::istringstream in("mfglp-problem-v2\n" + text.substr(text.find('\n') + 1));
        REQUIRE_THROWS_MATCHES(read_problem_file(in), ConfigError,
                               MessageMatches(ContainsSubstring("mfglp-problem-v1")));
    }
    SECTION("truncated body") {
        std::istringstream in(text.substr(0, text.size() / 2));
        REQUIRE_THROWS_AS(read_problem_file(in), ConfigError);
    }
    SECTION("non-numeric entry") {
        std::string bad = text;
        bad.replace(bad.find("m0\n") + 3, 1, "Q");
        std::istringstream in(bad);
        REQUIRE_THROWS_MATCHES(read_problem_file(in), ConfigError,
                               MessageMatches(ContainsSubstring("expected a number")));
    }
}

TEST_CASE("text file helpers write and read back verbatim") {
    const std::string path = "config_roundtrip.tmp";
    const std::string body = "alpha\nbeta gamma\n# delta\n";
    write_text_file(path, body);
    REQUIRE(read_text_file(path) == body);
    std::remove(path.c_str());
    REQUIRE_THROWS_AS(read_text_file(path), ConfigError);
}
