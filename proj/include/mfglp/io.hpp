#pragma once

/**
 * Serialization: CSV writers for tensors and traces, JSON reports, and the
 * tabulated-coefficient problem file that lets users supply custom problems
 * without recompiling.
 *
 * All real numbers are printed with %.17g so emitted files are bit-exact
 * reproductions of the in-memory doubles and identical across reruns.
 */

#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfglp/core.hpp"
#include "mfglp/dp.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/lp.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/mfg.hpp"
#include "mfglp/problem.hpp"
#include "mfglp/sim.hpp"
#include "mfglp/verify.hpp"

namespace mfglp {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& out, const OccupationFlow& m) {
    out << "k,i,j,value\n";
    for (int k = 0; k < m.slices; ++k)
        for (int i = 0; i < m.nx; ++i)
            for (int j = 0; j < m.na; ++j)
                out << k << ',' << i << ',' << j << ',' << detail::fmt17(m.at(k, i, j)) << '\n';
}

inline void write_csv(std::ostream& out, const ExitMeasure& mu) {
    out << "k,i,value\n";
    for (int k = 0; k < mu.t_count; ++k)
        for (int i = 0; i < mu.nx; ++i)
            out << k << ',' << i << ',' << detail::fmt17(mu.at(k, i)) << '\n';
}

inline void write_csv(std::ostream& out, const ValueFunction& vf) {
    out << "k,i,value,obstacle,contact,action\n";
    for (int k = 0; k < vf.t_count; ++k)
        for (int i = 0; i < vf.nx; ++i)
            out << k << ',' << i << ',' << detail::fmt17(vf.value(k, i)) << ','
                << detail::fmt17(vf.obstacle_at(k, i)) << ',' << (vf.in_contact(k, i) ? 1 : 0)
                << ',' << vf.action_at(k, i) << '\n';
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iter,exploitability,br_value,nash_value,distance,lambda\n";
    for (const TraceRow& r : trace)
        out << r.iter << ',' << detail::fmt17(r.exploitability) << ','
            << detail::fmt17(r.br_value) << ',' << detail::fmt17(r.nash_value) << ','
            << detail::fmt17(r.distance) << ',' << detail::fmt17(r.lambda) << '\n';
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CertificationReport& r) {
    nlohmann::json j{{"name", r.name}, {"residual", r.residual}, {"tol", r.tol}, {"pass", r.pass}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline nlohmann::json to_json(const std::vector<CertificationReport>& reports) {
    bool overall = true;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : reports) {
        checks.push_back(to_json(r));
        overall = overall && r.pass;
    }
    return nlohmann::json{{"checks", checks}, {"pass", overall}};
}

inline nlohmann::json to_json(const OccupationFlow& m) {
    return nlohmann::json{
        {"slices", m.slices}, {"nx", m.nx}, {"na", m.na}, {"values", m.values}};
}

inline nlohmann::json to_json(const ExitMeasure& mu) {
    return nlohmann::json{{"t_count", mu.t_count}, {"nx", mu.nx}, {"values", mu.values}};
}

inline nlohmann::json to_json(const PopulationRun& run) {
    return nlohmann::json{{"n_agents", run.n_agents},
                          {"seed", run.seed},
                          {"payoff_mean", run.payoff_mean},
                          {"payoff_se", run.payoff_se}};
}

/** Machine-readable error document printed to stderr on solver failures. */
inline std::string error_json(const std::string& kind, const std::string& message) {
    return nlohmann::json{{"error", kind}, {"message", message}}.dump();
}

// ---------------------------------------------------------------------------
// Tabulated-coefficient problem files
// ---------------------------------------------------------------------------

/**
 * A problem given by coefficient tables sampled on its own grid, plus affine
 * moment couplings: each coefficient evaluates as table[nearest node] +
 * couple . z, where z is the corresponding moment block.  The solver only
 * queries coefficients at grid nodes, so nearest-node lookup is exact.
 *
 * File layout (whitespace-separated, '#' comments allowed between sections):
 *
 *   mfglp-problem-v1
 *   name <token>
 *   dims <d> <t_count> <x_count> <a_count>
 *   domain <T> <x_lo> <x_hi> <a_lo> <a_hi>
 *   boundary <attainable|unattainable> <sigma_floor> <convex 0|1>
 *   m0 <x_count values>
 *   drift <t_count*x_count*a_count values>       # k-major, then i, then j
 *   diffusion <same shape>
 *   running <same shape>
 *   exit <t_count*x_count values>
 *   kernel_drift <t_count*x_count*d values>
 *   kernel_diffusion <same shape>
 *   kernel_running <same shape>
 *   kernel_exit <same shape>
 *   couple_drift <d values>
 *   couple_diffusion <d values>
 *   couple_running <d values>
 *   couple_exit <d values>
 *   end
 */
struct TabulatedProblem {
    std::string name = "tabulated";
    int d = 1;
    int t_count = 0, x_count = 0, a_count = 0;
    double T = 1, x_lo = 0, x_hi = 1, a_lo = 0, a_hi = 0;
    BoundaryMode boundary = BoundaryMode::attainable;
    double sigma_floor = 0;
    bool convex = false;
    numvec m0;
    numvec drift, diffusion, running;  // t_count * x_count * a_count
    numvec exit;                       // t_count * x_count
    numvec kernel_drift, kernel_diffusion, kernel_running, kernel_exit;  // t*x*d
    numvec couple_drift, couple_diffusion, couple_running, couple_exit;  // d

    size_t txa(int k, int i, int j) const {
        return (static_cast<size_t>(k) * x_count + i) * a_count + j;
    }
    size_t tx(int k, int i) const { return static_cast<size_t>(k) * x_count + i; }

    bool operator==(const TabulatedProblem&) const = default;
};

inline void write_problem_file(std::ostream& out, const TabulatedProblem& tp) {
    auto block = [&](const char* key, const numvec& v, int per_line) {
        out << key;
        for (size_t q = 0; q < v.size(); ++q)
            out << (q % per_line == 0 ? "\n" : " ") << detail::fmt17(v[q]);
        out << '\n';
    };
    out << "mfglp-problem-v1\n";
    out << "name " << tp.name << '\n';
    out << "dims " << tp.d << ' ' << tp.t_count << ' ' << tp.x_count << ' ' << tp.a_count << '\n';
    out << "domain " << detail::fmt17(tp.T) << ' ' << detail::fmt17(tp.x_lo) << ' '
        << detail::fmt17(tp.x_hi) << ' ' << detail::fmt17(tp.a_lo) << ' '
        << detail::fmt17(tp.a_hi) << '\n';
    out << "boundary " << (tp.boundary == BoundaryMode::attainable ? "attainable" : "unattainable")
        << ' ' << detail::fmt17(tp.sigma_floor) << ' ' << (tp.convex ? 1 : 0) << '\n';
    block("m0", tp.m0, 8);
    block("drift", tp.drift, 8);
    block("diffusion", tp.diffusion, 8);
    block("running", tp.running, 8);
    block("exit", tp.exit, 8);
    block("kernel_drift", tp.kernel_drift, 8);
    block("kernel_diffusion", tp.kernel_diffusion, 8);
    block("kernel_running", tp.kernel_running, 8);
    block("kernel_exit", tp.kernel_exit, 8);
    block("couple_drift", tp.couple_drift, 8);
    block("couple_diffusion", tp.couple_diffusion, 8);
    block("couple_running", tp.couple_running, 8);
    block("couple_exit", tp.couple_exit, 8);
    out << "end\n";
}

namespace detail {

/// Token stream over a problem file; '#' comments run to end of line.
class TokenReader {
  public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string tok;
        while (in_ >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in_, rest);
                continue;
            }
            return tok;
        }
        throw ConfigError(std::string("problem file ended while reading ") + what);
    }

    double real(const char* what) {
        const std::string tok = next(what);
        try {
            size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(std::string("problem file: expected a number for ") + what +
                              ", got '" + tok + "'");
        }
    }

    long long integer(const char* what) {
        const std::string tok = next(what);
        try {
            size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(std::string("problem file: expected an integer for ") + what +
                              ", got '" + tok + "'");
        }
    }

    void expect(const char* keyword) {
        const std::string tok = next(keyword);
        if (tok != keyword)
            throw ConfigError(std::string("problem file: expected '") + keyword + "', got '" +
                              tok + "'");
    }

    numvec block(const char* keyword, size_t count) {
        expect(keyword);
        numvec v(count);
        for (size_t q = 0; q < count; ++q) v[q] = real(keyword);
        return v;
    }

  private:
    std::istream& in_;
};

}  // namespace detail

inline TabulatedProblem read_problem_file(std::istream& in) {
    detail::TokenReader r(in);
    r.expect("mfglp-problem-v1");
    TabulatedProblem tp;
    r.expect("name");
    tp.name = r.next("name");
    r.expect("dims");
    tp.d = static_cast<int>(r.integer("d"));
    tp.t_count = static_cast<int>(r.integer("t_count"));
    tp.x_count = static_cast<int>(r.integer("x_count"));
    tp.a_count = static_cast<int>(r.integer("a_count"));
    if (tp.d < 1 || tp.d > kMaxMomentDim)
        throw ConfigError("problem file: d must lie in [1, " + std::to_string(kMaxMomentDim) +
                          "]");
    if (tp.t_count < 2 || tp.x_count < 3 || tp.a_count < 1)
        throw ConfigError("problem file: grid sizes must satisfy t_count >= 2, x_count >= 3, "
                          "a_count >= 1");
    r.expect("domain");
    tp.T = r.real("T");
    tp.x_lo = r.real("x_lo");
    tp.x_hi = r.real("x_hi");
    tp.a_lo = r.real("a_lo");
    tp.a_hi = r.real("a_hi");
    r.expect("boundary");
    const std::string mode = r.next("boundary mode");
    if (mode == "attainable")
        tp.boundary = BoundaryMode::attainable;
    else if (mode == "unattainable")
        tp.boundary = BoundaryMode::unattainable;
    else
        throw ConfigError("problem file: boundary must be attainable or unattainable, got '" +
                          mode + "'");
    tp.sigma_floor = r.real("sigma_floor");
    tp.convex = r.integer("convex") != 0;

    const size_t ntxa = static_cast<size_t>(tp.t_count) * tp.x_count * tp.a_count;
    const size_t ntx = static_cast<size_t>(tp.t_count) * tp.x_count;
    tp.m0 = r.block("m0", static_cast<size_t>(tp.x_count));
    tp.drift = r.block("drift", ntxa);
    tp.diffusion = r.block("diffusion", ntxa);
    tp.running = r.block("running", ntxa);
    tp.exit = r.block("exit", ntx);
    tp.kernel_drift = r.block("kernel_drift", ntx * tp.d);
    tp.kernel_diffusion = r.block("kernel_diffusion", ntx * tp.d);
    tp.kernel_running = r.block("kernel_running", ntx * tp.d);
    tp.kernel_exit = r.block("kernel_exit", ntx * tp.d);
    tp.couple_drift = r.block("couple_drift", static_cast<size_t>(tp.d));
    tp.couple_diffusion = r.block("couple_diffusion", static_cast<size_t>(tp.d));
    tp.couple_running = r.block("couple_running", static_cast<size_t>(tp.d));
    tp.couple_exit = r.block("couple_exit", static_cast<size_t>(tp.d));
    r.expect("end");
    return tp;
}

/** The grid a tabulated problem was sampled on (and must be solved on). */
inline Grid grid_of(const TabulatedProblem& tp) {
    return make_grid(tp.t_count, tp.x_count, tp.a_count, tp.T, tp.x_lo, tp.x_hi, tp.a_lo,
                     tp.a_hi);
}

/**
 * Converts tables to a ProblemSpec whose evaluators do nearest-node lookup
 * plus the affine moment coupling.  The returned ProblemSpec shares the
 * tables through a shared_ptr, so it stays valid after the TabulatedProblem
 * goes out of scope.
 */
inline ProblemSpec to_spec(const TabulatedProblem& tp) {
    auto tab = std::make_shared<const TabulatedProblem>(tp);
    const Grid grid = grid_of(tp);
    const double dt = grid.dt, dx = grid.dx;
    const double x_lo = tp.x_lo;
    const int tmax = tp.t_count - 1, imax = tp.x_count - 1, jmax = tp.a_count - 1;
    const double da = tp.a_count > 1 ? (tp.a_hi - tp.a_lo) / (tp.a_count - 1) : 1.0;
    const double a_lo = tp.a_count > 1 ? tp.a_lo : grid.action(0);

    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    auto kof = [=](double t) {
        return clampi(static_cast<int>(t / dt + 0.5), tmax);
    };
    auto iof = [=](double x) {
        return clampi(static_cast<int>((x - x_lo) / dx + 0.5), imax);
    };
    auto jof = [=](double a) {
        return clampi(static_cast<int>((a - a_lo) / da + 0.5), jmax);
    };
    auto dot = [](const numvec& w, std::span<const double> z) {
        double s = 0;
        for (size_t q = 0; q < w.size() && q < z.size(); ++q) s += w[q] * z[q];
        return s;
    };
    ProblemSpec spec;
    spec.name = tp.name;
    spec.T = tp.T;
    spec.x_lo = tp.x_lo;
    spec.x_hi = tp.x_hi;
    spec.boundary_mode = tp.boundary;
    spec.moment_dim = tp.d;
    spec.sigma_floor = tp.sigma_floor;
    spec.convex_actions = tp.convex;
    spec.m0 = tp.m0;

    spec.drift = [=](double t, double x, std::span<const double> z, double a) {
        return tab->drift[tab->txa(kof(t), iof(x), jof(a))] + dot(tab->couple_drift, z);
    };
    spec.diffusion = [=](double t, double x, std::span<const double> z, double a) {
        return tab->diffusion[tab->txa(kof(t), iof(x), jof(a))] + dot(tab->couple_diffusion, z);
    };
    spec.running_reward = [=](double t, double x, std::span<const double> z, double a) {
        return tab->running[tab->txa(kof(t), iof(x), jof(a))] + dot(tab->couple_running, z);
    };
    spec.exit_reward = [=](double t, double x, std::span<const double> w) {
        return tab->exit[tab->tx(kof(t), iof(x))] + dot(tab->couple_exit, w);
    };
    auto kernel_of = [=](const numvec TabulatedProblem::*field) {
        return [=](double t, double x, std::span<double> out) {
            const size_t base = tab->tx(kof(t), iof(x)) * static_cast<size_t>(tab->d);
            const numvec& table = (*tab).*field;
            for (int q = 0; q < tab->d; ++q) out[q] = table[base + q];
        };
    };
    spec.drift_kernel = kernel_of(&TabulatedProblem::kernel_drift);
    spec.diffusion_kernel = kernel_of(&TabulatedProblem::kernel_diffusion);
    spec.running_kernel = kernel_of(&TabulatedProblem::kernel_running);
    spec.exit_kernel = kernel_of(&TabulatedProblem::kernel_exit);
    return spec;
}

/** Samples an existing spec into tables on its grid (zero-moment baseline). */
inline TabulatedProblem tabulate(const ProblemSpec& spec, const Grid& grid) {
    TabulatedProblem tp;
    tp.name = spec.name.empty() ? "tabulated" : spec.name;
    tp.d = spec.moment_dim;
    tp.t_count = grid.t_count;
    tp.x_count = grid.x_count();
    tp.a_count = grid.a_count();
    tp.T = spec.T;
    tp.x_lo = spec.x_lo;
    tp.x_hi = spec.x_hi;
    tp.a_lo = grid.a_nodes.front();
    tp.a_hi = grid.a_nodes.back();
    tp.boundary = spec.boundary_mode;
    tp.sigma_floor = spec.sigma_floor;
    tp.convex = spec.convex_actions;
    tp.m0 = spec.m0;

    const size_t ntxa = static_cast<size_t>(tp.t_count) * tp.x_count * tp.a_count;
    const size_t ntx = static_cast<size_t>(tp.t_count) * tp.x_count;
    tp.drift.resize(ntxa);
    tp.diffusion.resize(ntxa);
    tp.running.resize(ntxa);
    tp.exit.resize(ntx);
    tp.kernel_drift.resize(ntx * tp.d);
    tp.kernel_diffusion.resize(ntx * tp.d);
    tp.kernel_running.resize(ntx * tp.d);
    tp.kernel_exit.resize(ntx * tp.d);
    tp.couple_drift.assign(static_cast<size_t>(tp.d), 0.0);
    tp.couple_diffusion.assign(static_cast<size_t>(tp.d), 0.0);
    tp.couple_running.assign(static_cast<size_t>(tp.d), 0.0);
    tp.couple_exit.assign(static_cast<size_t>(tp.d), 0.0);

    const numvec zeros(static_cast<size_t>(tp.d), 0.0);
    std::span<const double> z(zeros.data(), zeros.size());
    for (int k = 0; k < tp.t_count; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < tp.x_count; ++i) {
            const double x = grid.x(i);
            for (int j = 0; j < tp.a_count; ++j) {
                const double a = grid.action(j);
                tp.drift[tp.txa(k, i, j)] = spec.drift(t, x, z, a);
                tp.diffusion[tp.txa(k, i, j)] = spec.diffusion(t, x, z, a);
                tp.running[tp.txa(k, i, j)] = spec.running_reward(t, x, z, a);
            }
            tp.exit[tp.tx(k, i)] = spec.exit_reward(t, x, z);
            numvec buf(static_cast<size_t>(tp.d));
            std::span<double> out(buf.data(), buf.size());
            const size_t base = tp.tx(k, i) * static_cast<size_t>(tp.d);
            spec.drift_kernel(t, x, out);
            for (int q = 0; q < tp.d; ++q) tp.kernel_drift[base + q] = buf[q];
            spec.diffusion_kernel(t, x, out);
            for (int q = 0; q < tp.d; ++q) tp.kernel_diffusion[base + q] = buf[q];
            spec.running_kernel(t, x, out);
            for (int q = 0; q < tp.d; ++q) tp.kernel_running[base + q] = buf[q];
            spec.exit_kernel(t, x, out);
            for (int q = 0; q < tp.d; ++q) tp.kernel_exit[base + q] = buf[q];
        }
    }
    return tp;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace mfglp
