#pragma once

/**
 * Command-line surface: resolves a RunConfig from a config file plus flags,
 * loads the problem (registry name or tabulated-coefficient file), runs the
 * requested pipeline, and writes artifacts into the output directory.
 *
 * Exit codes: 0 on success (and, for `verify`, only when every check passes),
 * 2 for usage and configuration errors, 1 for solver failures.  Failures
 * print a machine-readable JSON document on stderr.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfglp/chain.hpp"
#include "mfglp/config.hpp"
#include "mfglp/core.hpp"
#include "mfglp/dp.hpp"
#include "mfglp/io.hpp"
#include "mfglp/lp.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/mfg.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/registry.hpp"
#include "mfglp/sim.hpp"
#include "mfglp/verify.hpp"

namespace mfglp {

namespace cli_detail {

/// Raw flag values shared by all subcommands; applied over the config file.
struct Flags {
    std::string config_path;
    std::string problem;
    std::string out;
    std::string grid;
    std::string format;
    double damping = 0;
    double tol = 0;
    int max_iter = 0;
    int n_starts = 0;
    long long seed = 0;
    long long n_agents = 0;
};

inline void add_common_options(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config_path, "configuration file (key = value lines)");
    sub->add_option("--problem", f.problem, "registry problem name or problem file path");
    sub->add_option("--out", f.out, "output directory for artifacts");
    sub->add_option("--grid", f.grid, "grid resolution as t,x,a (0 keeps the recommendation)");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--damping", f.damping, "fixed-point damping in (0, 1]");
    sub->add_option("--tol", f.tol, "convergence tolerance");
    sub->add_option("--max-iter", f.max_iter, "iteration cap for the fixed point");
    sub->add_option("--n-starts", f.n_starts, "number of fixed-point initializations");
    sub->add_option("--n-agents", f.n_agents, "population size for simulate");
    sub->add_option("--format", f.format, "tensor output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

/// Folds the config file and any explicitly set flags into a RunConfig.
inline RunConfig resolve_config(const CLI::App* sub, const Flags& f) {
    RunConfig cfg;
    if (sub->count("--config") > 0) cfg = parse_config(read_text_file(f.config_path));
    if (sub->count("--problem") > 0) cfg.problem = f.problem;
    if (sub->count("--out") > 0) cfg.out_dir = f.out;
    if (sub->count("--seed") > 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
    if (sub->count("--damping") > 0) cfg.damping = f.damping;
    if (sub->count("--tol") > 0) cfg.tol = f.tol;
    if (sub->count("--max-iter") > 0) cfg.max_iter = f.max_iter;
    if (sub->count("--n-starts") > 0) cfg.n_starts = f.n_starts;
    if (sub->count("--n-agents") > 0) cfg.n_agents = f.n_agents;
    if (sub->count("--format") > 0)
        cfg.format = (f.format == "json") ? OutputFormat::json : OutputFormat::csv;
    if (sub->count("--grid") > 0) {
        int t = 0, x = 0, a = 0;
        if (std::sscanf(f.grid.c_str(), "%d,%d,%d", &t, &x, &a) != 3)
            throw ConfigError("--grid: expected t,x,a integers, got '" + f.grid + "'");
        cfg.t_count = t;
        cfg.x_count = x;
        cfg.a_count = a;
    }
    validate(cfg);
    return cfg;
}

struct LoadedProblem {
    ProblemSpec spec;
    Grid grid;
    bool is_mfg = false;
};

/// Registry names win; anything else must be a tabulated problem file.
inline LoadedProblem load_problem(const RunConfig& cfg) {
    for (const auto& info : registry_info()) {
        if (info.name == cfg.problem) {
            LoadedProblem lp;
            lp.grid = registry_grid(cfg.problem, cfg.t_count, cfg.x_count, cfg.a_count);
            lp.spec = make_problem(cfg.problem, lp.grid);
            lp.is_mfg = info.is_mfg;
            return lp;
        }
    }
    if (!std::filesystem::exists(cfg.problem))
        throw ConfigError("problem '" + cfg.problem +
                          "' is not a registry name and no such file exists");
    if (cfg.t_count != 0 || cfg.x_count != 0 || cfg.a_count != 0)
        throw ConfigError("--grid cannot override a problem file; its tables fix the grid");
    std::ifstream in(cfg.problem);
    TabulatedProblem tp = read_problem_file(in);
    LoadedProblem lp;
    lp.grid = grid_of(tp);
    lp.spec = to_spec(tp);
    validate(lp.spec, lp.grid);
    // A tabulated problem is a mean-field game exactly when some coupling
    // weight is nonzero; a zero coupling makes moments irrelevant.
    for (const numvec* w : {&tp.couple_drift, &tp.couple_diffusion, &tp.couple_running,
                            &tp.couple_exit})
        for (double v : *w)
            if (v != 0.0) lp.is_mfg = true;
    return lp;
}

inline std::string tensor_path(const RunConfig& cfg, const std::string& stem) {
    return cfg.out_dir + "/" + stem + (cfg.format == OutputFormat::csv ? ".csv" : ".json");
}

inline void write_tensor(const RunConfig& cfg, const std::string& stem, const OccupationFlow& m) {
    std::ostringstream buf;
    if (cfg.format == OutputFormat::csv)
        write_csv(buf, m);
    else
        buf << to_json(m).dump(2) << '\n';
    write_text_file(tensor_path(cfg, stem), buf.str());
}

inline void write_tensor(const RunConfig& cfg, const std::string& stem, const ExitMeasure& mu) {
    std::ostringstream buf;
    if (cfg.format == OutputFormat::csv)
        write_csv(buf, mu);
    else
        buf << to_json(mu).dump(2) << '\n';
    write_text_file(tensor_path(cfg, stem), buf.str());
}

inline void prepare_out(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/config.txt", serialize_config(cfg));
}

// --- subcommand bodies ------------------------------------------------------

inline int cmd_solve_single(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);
    MomentVector moments = MomentVector::zeros(p.spec.moment_dim, p.grid.slice_count());
    TransitionModel trans = assemble_transition(p.spec, p.grid, moments);
    LinearProgram lp = build_occupation_lp(p.spec, p.grid, trans, moments);
    LPSolution sol = solve_lp(lp);
    if (sol.status != LPStatus::optimal)
        throw NumericError(std::string("solve-single: LP terminated with status ") +
                           to_string(sol.status));
    auto [m, mu] = extract_measures(lp, sol, p.grid);
    write_tensor(cfg, "m", m);
    write_tensor(cfg, "mu", mu);
    nlohmann::json doc{{"problem", p.spec.name},
                       {"value", sol.value},
                       {"lp_status", to_string(sol.status)},
                       {"lp_iterations", sol.iterations}};
    write_text_file(cfg.out_dir + "/solution.json", doc.dump(2) + "\n");
    std::printf("value %s\n", detail::fmt17(sol.value).c_str());
    return 0;
}

inline int cmd_solve_mfg(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);
    MfgOptions opts;
    opts.damping = cfg.damping;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    opts.n_starts = cfg.n_starts;
    opts.seed = cfg.seed;
    EquilibriumResult eq = multi_start_select(p.spec, p.grid, opts);
    write_tensor(cfg, "m_star", eq.m_star);
    write_tensor(cfg, "mu_star", eq.mu_star);
    std::ostringstream trace;
    write_trace_csv(trace, eq.trace);
    write_text_file(cfg.out_dir + "/trace.csv", trace.str());
    nlohmann::json doc{{"problem", p.spec.name},
                       {"nash_value", eq.nash_value},
                       {"exploitability", eq.exploitability},
                       {"converged", eq.converged},
                       {"iterations", eq.iterations},
                       {"nash_value_spread", eq.nash_value_spread},
                       {"runs_converged", eq.runs_converged}};
    if (!eq.warning.empty()) doc["warning"] = eq.warning;
    write_text_file(cfg.out_dir + "/equilibrium.json", doc.dump(2) + "\n");
    std::printf("nash_value %s exploitability %s converged %d\n",
                detail::fmt17(eq.nash_value).c_str(), detail::fmt17(eq.exploitability).c_str(),
                eq.converged ? 1 : 0);
    return 0;
}

inline int cmd_dp(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);
    MomentVector moments = MomentVector::zeros(p.spec.moment_dim, p.grid.slice_count());
    TransitionModel trans = assemble_transition(p.spec, p.grid, moments);
    ValueFunction vf = dp_solve(p.spec, p.grid, trans, moments);
    std::ostringstream buf;
    write_csv(buf, vf);
    write_text_file(cfg.out_dir + "/value.csv", buf.str());
    const double v0 = dp_value_at_zero(vf, p.spec);
    nlohmann::json doc{{"problem", p.spec.name}, {"value", v0}};
    write_text_file(cfg.out_dir + "/dp.json", doc.dump(2) + "\n");
    std::printf("dp_value %s\n", detail::fmt17(v0).c_str());
    return 0;
}

inline int cmd_verify(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);
    MomentVector moments = MomentVector::zeros(p.spec.moment_dim, p.grid.slice_count());
    TransitionModel trans = assemble_transition(p.spec, p.grid, moments);
    LinearProgram lp = build_occupation_lp(p.spec, p.grid, trans, moments);
    LPSolution sol = solve_lp(lp);
    if (sol.status != LPStatus::optimal)
        throw NumericError(std::string("verify: LP terminated with status ") +
                           to_string(sol.status));
    auto [m, mu] = extract_measures(lp, sol, p.grid);
    std::vector<CertificationReport> reports =
        certify_single(p.spec, p.grid, moments, m, mu, sol.value);
    write_text_file(cfg.out_dir + "/certification.json", to_json(reports).dump(2) + "\n");
    bool all = true;
    for (const auto& r : reports) {
        std::printf("check %s %s residual %s tol %s\n", r.name.c_str(),
                    r.pass ? "pass" : "fail", detail::fmt17(r.residual).c_str(),
                    detail::fmt17(r.tol).c_str());
        all = all && r.pass;
    }
    return all ? 0 : 1;
}

inline int cmd_simulate(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);

    // Mean-field problems are simulated at their computed equilibrium flow;
    // measure-independent problems at the zero-moment freeze.
    MomentVector moments = MomentVector::zeros(p.spec.moment_dim, p.grid.slice_count());
    OccupationFlow m_ref;
    ExitMeasure mu_ref;
    if (p.is_mfg) {
        MfgOptions opts;
        opts.damping = cfg.damping;
        opts.tol = cfg.tol;
        opts.max_iter = cfg.max_iter;
        opts.seed = cfg.seed;
        EquilibriumResult eq = fixed_point_solve(p.spec, p.grid, opts);
        moments = moment_of(eq.m_star, eq.mu_star, p.spec, p.grid);
        m_ref = std::move(eq.m_star);
        mu_ref = std::move(eq.mu_star);
    }
    TransitionModel trans = assemble_transition(p.spec, p.grid, moments);
    ValueFunction vf = dp_solve(p.spec, p.grid, trans, moments);
    FeedbackPolicy policy = feedback_policy(vf);
    // The mean-field reference is the law of one agent under this policy.
    auto [m_star, mu_star] = push_forward(to_mixed(policy, p.grid.a_count()), trans, p.grid,
                                          p.spec.m0);
    if (!p.is_mfg) {
        m_ref = std::move(m_star);
        mu_ref = std::move(mu_star);
    }

    PopulationRun run =
        simulate_population(p.spec, p.grid, trans, policy, moments, cfg.n_agents, cfg.seed);
    write_tensor(cfg, "empirical_m", run.empirical_m);
    write_tensor(cfg, "empirical_mu", run.empirical_mu);
    const double dist = chaos_distance(run, m_ref, mu_ref);
    nlohmann::json doc = to_json(run);
    doc["problem"] = p.spec.name;
    doc["chaos_distance"] = dist;
    doc["dp_value"] = dp_value_at_zero(vf, p.spec);
    write_text_file(cfg.out_dir + "/simulation.json", doc.dump(2) + "\n");
    std::printf("payoff_mean %s payoff_se %s chaos_distance %s\n",
                detail::fmt17(run.payoff_mean).c_str(), detail::fmt17(run.payoff_se).c_str(),
                detail::fmt17(dist).c_str());
    return 0;
}

inline int cmd_export_lp(const RunConfig& cfg) {
    LoadedProblem p = load_problem(cfg);
    prepare_out(cfg);
    MomentVector moments = MomentVector::zeros(p.spec.moment_dim, p.grid.slice_count());
    TransitionModel trans = assemble_transition(p.spec, p.grid, moments);
    LinearProgram lp = build_occupation_lp(p.spec, p.grid, trans, moments);
    std::ostringstream buf;
    write_lp(lp, buf);
    const std::string path = cfg.out_dir + "/problem.lp";
    write_text_file(path, buf.str());
    std::printf("wrote %s (%d rows, %d columns)\n", path.c_str(), lp.A.rows, lp.A.cols);
    return 0;
}

}  // namespace cli_detail

/**
 * Entry point used by the binary and the tests: argv without the program
 * name.  Never throws; failures become exit codes plus JSON on stderr.
 */
inline int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Occupation-measure LP solver for mixed stopping/control problems "
                 "and their mean-field games"};
    app.require_subcommand(1);
    cli_detail::Flags flags;
    CLI::App* solve_single = app.add_subcommand(
        "solve-single", "solve one frozen problem by linear programming");
    CLI::App* solve_mfg =
        app.add_subcommand("solve-mfg", "compute a mean-field equilibrium by damped iteration");
    CLI::App* dp = app.add_subcommand("dp", "solve the dynamic-programming equations");
    CLI::App* verify =
        app.add_subcommand("verify", "solve and certify; exit 0 only if every check passes");
    CLI::App* simulate =
        app.add_subcommand("simulate", "run an N-agent population under the optimal policy");
    CLI::App* export_lp =
        app.add_subcommand("export-lp", "write the assembled linear program to a file");
    for (CLI::App* sub : {solve_single, solve_mfg, dp, verify, simulate, export_lp})
        cli_detail::add_common_options(sub, flags);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::printf("%s", app.help().c_str());
        return 0;
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", error_json("usage", e.what()).c_str());
        std::fprintf(stderr, "%s", app.help().c_str());
        return 2;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const RunConfig cfg = cli_detail::resolve_config(sub, flags);
        if (sub == solve_single) return cli_detail::cmd_solve_single(cfg);
        if (sub == solve_mfg) return cli_detail::cmd_solve_mfg(cfg);
        if (sub == dp) return cli_detail::cmd_dp(cfg);
        if (sub == verify) return cli_detail::cmd_verify(cfg);
        if (sub == simulate) return cli_detail::cmd_simulate(cfg);
        if (sub == export_lp) return cli_detail::cmd_export_lp(cfg);
        std::fprintf(stderr, "%s\n", error_json("usage", "no subcommand").c_str());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", error_json("config", e.what()).c_str());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "%s\n", error_json("shape", e.what()).c_str());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "%s\n", error_json("numeric", e.what()).c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", error_json("internal", e.what()).c_str());
        return 1;
    }
}

}  // namespace mfglp
