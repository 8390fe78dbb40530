#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfglp/chain.hpp"
#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/problem.hpp"
#include "mfglp/simplex.hpp"

namespace mfglp {

/// Maps an LP variable back to its measure slot.
struct VarRef {
    enum class Kind { occupation, exit };
    Kind kind = Kind::occupation;
    int k = 0;
    int i = 0;
    int j = 0; // action; unused for exit slots
};

/**
 * The discretized occupation-measure program: maximize objective subject to
 * the sparse equality system A v = rhs and v >= 0. index_map sends each
 * variable to its (k,i,j) occupation slot or (k,i) exit slot; var_names hold
 * the canonical m_k_i_j / mu_k_i labels used by the text export.
 */
struct LinearProgram {
    std::string name;
    SparseMatrix A;
    numvec rhs;
    numvec objective;
    std::vector<VarRef> index_map;       // empty for generic (hand-built) programs
    std::vector<std::string> var_names;  // parallel to columns
    std::vector<std::string> row_names;  // parallel to rows
};

struct LPSolution {
    LPStatus status = LPStatus::optimal;
    double value = 0.0;
    numvec primal;
    numvec dual;
    long iterations = 0;
    std::string warning;
};

/**
 * Builds the flow-balance form of the occupation LP at frozen moments. One
 * balance row per (time node k, state node i):
 *
 *   k = 0:       sum_j m[0,i,j] + mu[0,i] = m0[i]        (m-term interior only)
 *   k = 1..K:    sum_j m[k,i,j] + mu[k,i]
 *                  - sum_{i' interior, j} m[k-1,i',j] p(i' -> i) = 0
 *                (m-term only for interior i and k < K)
 *
 * Occupation variables exist for interior nodes and slices 0..K-1; exit
 * variables for every node and k = 0..K. Objective:
 *   sum m[k,i,j] * running_reward(t_k, x_i, z_running[k], a_j) * dt
 * + sum mu[k,i] * exit_reward(t_k, x_i, w_exit).
 */
inline LinearProgram build_occupation_lp(const ProblemSpec& spec, const Grid& grid,
                                         const TransitionModel& trans, const MomentVector& moments) {
    if (trans.slices != grid.slice_count() || trans.nx != grid.x_count() || trans.na != grid.a_count())
        throw ShapeError("build_occupation_lp: transition model shape does not match grid");
    if (moments.d != spec.moment_dim || moments.slices != grid.slice_count())
        throw ShapeError("build_occupation_lp: moment vector shape does not match problem and grid");
    if (static_cast<int>(spec.m0.size()) != grid.x_count())
        throw ShapeError("build_occupation_lp: m0 size does not match grid");

    const int nx = grid.x_count();
    const int na = grid.a_count();
    const int K = grid.slice_count();
    const auto row_of = [nx](int k, int i) { return k * nx + i; };

    LinearProgram lp;
    lp.name = spec.name.empty() ? "occupation" : spec.name;
    lp.A.rows = grid.t_count * nx;
    lp.rhs.assign(static_cast<size_t>(lp.A.rows), 0.0);
    for (int i = 0; i < nx; ++i) lp.rhs[static_cast<size_t>(row_of(0, i))] = spec.m0[static_cast<size_t>(i)];
    lp.row_names.reserve(static_cast<size_t>(lp.A.rows));
    for (int k = 0; k < grid.t_count; ++k)
        for (int i = 0; i < nx; ++i)
            lp.row_names.push_back("bal_" + std::to_string(k) + "_" + std::to_string(i));

    std::vector<int> rows;
    numvec vals;
    char label[64];
    // Occupation columns.
    for (int k = 0; k < K; ++k) {
        const double t = grid.time(k);
        for (int i = 1; i + 1 < nx; ++i) {
            const double x = grid.x(i);
            for (int j = 0; j < na; ++j) {
                rows.clear();
                vals.clear();
                rows.push_back(row_of(k, i));
                vals.push_back(1.0);
                const double pd = trans.down(k, i, j);
                const double ps = trans.stay(k, i, j);
                const double pu = trans.up(k, i, j);
                if (pd != 0.0) { rows.push_back(row_of(k + 1, i - 1)); vals.push_back(-pd); }
                if (ps != 0.0) { rows.push_back(row_of(k + 1, i)); vals.push_back(-ps); }
                if (pu != 0.0) { rows.push_back(row_of(k + 1, i + 1)); vals.push_back(-pu); }
                lp.A.add_column(rows, vals);
                lp.objective.push_back(spec.running_reward(t, x, moments.running_at(k), grid.action(j)) * grid.dt);
                lp.index_map.push_back({VarRef::Kind::occupation, k, i, j});
                std::snprintf(label, sizeof label, "m_%d_%d_%d", k, i, j);
                lp.var_names.emplace_back(label);
            }
        }
    }
    // Exit columns.
    for (int k = 0; k <= K; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < nx; ++i) {
            rows.assign(1, row_of(k, i));
            vals.assign(1, 1.0);
            lp.A.add_column(rows, vals);
            lp.objective.push_back(spec.exit_reward(t, grid.x(i), moments.exit()));
            lp.index_map.push_back({VarRef::Kind::exit, k, i, 0});
            std::snprintf(label, sizeof label, "mu_%d_%d", k, i);
            lp.var_names.emplace_back(label);
        }
    }
    return lp;
}

/// Solves the LP with the deterministic revised simplex. Enforces the
/// LPSolution contract (residual <= 1e-8, primal >= -1e-10) on optimal exits.
inline LPSolution solve_lp(const LinearProgram& lp, double tol = 1e-9, long max_iters = -1) {
    if (static_cast<int>(lp.objective.size()) != lp.A.cols || static_cast<int>(lp.rhs.size()) != lp.A.rows)
        throw ShapeError("solve_lp: inconsistent program shapes");
    SimplexOptions opts;
    opts.tol = tol;
    opts.max_iters = max_iters;
    SimplexResult raw = solve_simplex(lp.A, lp.rhs, lp.objective, opts);
    LPSolution sol;
    sol.status = raw.status;
    sol.value = raw.value;
    sol.primal = std::move(raw.x);
    sol.dual = std::move(raw.y);
    sol.iterations = raw.iterations;
    sol.warning = std::move(raw.warning);
    if (sol.status == LPStatus::optimal) {
        for (double v : sol.primal)
            if (v < -1e-10)
                throw NumericError("solve_lp: optimal primal has entry " + std::to_string(v) + " below -1e-10");
        const double res = residual_inf(lp.A, sol.primal, lp.rhs);
        if (res > 1e-8)
            throw NumericError("solve_lp: optimal residual " + std::to_string(res) + " exceeds 1e-8");
    }
    return sol;
}

/// Rebuilds the measure pair from an optimal solution via the index map.
inline std::pair<OccupationFlow, ExitMeasure> extract_measures(const LinearProgram& lp,
                                                               const LPSolution& sol,
                                                               const Grid& grid) {
    if (sol.status != LPStatus::optimal)
        throw StateError(std::string("extract_measures: solution status is ") + to_string(sol.status));
    if (lp.index_map.size() != sol.primal.size())
        throw ShapeError("extract_measures: index map does not cover the primal vector");
    OccupationFlow m = OccupationFlow::zeros(grid);
    ExitMeasure mu = ExitMeasure::zeros(grid);
    for (size_t q = 0; q < lp.index_map.size(); ++q) {
        double v = sol.primal[q];
        if (v < 0.0) v = 0.0; // round-off clip; magnitude checked by solve_lp
        const VarRef& ref = lp.index_map[q];
        if (ref.kind == VarRef::Kind::occupation)
            m.at(ref.k, ref.i, ref.j) = v;
        else
            mu.at(ref.k, ref.i) = v;
    }
    validate(m, mu, grid);
    return {std::move(m), std::move(mu)};
}

/// The objective Gamma at frozen moments, evaluated directly on a measure
/// pair: sum m*running_reward*dt + sum mu*exit_reward.
inline double gamma_value(const ProblemSpec& spec, const Grid& grid, const MomentVector& moments,
                          const OccupationFlow& m, const ExitMeasure& mu) {
    require_shapes(m, mu, grid);
    double total = 0.0;
    for (int k = 0; k < grid.slice_count(); ++k) {
        const double t = grid.time(k);
        for (int i = 1; i + 1 < grid.x_count(); ++i) {
            const double x = grid.x(i);
            for (int j = 0; j < grid.a_count(); ++j) {
                const double mass = m.at(k, i, j);
                if (mass == 0.0) continue;
                total += mass * spec.running_reward(t, x, moments.running_at(k), grid.action(j)) * grid.dt;
            }
        }
    }
    for (int k = 0; k < grid.t_count; ++k) {
        const double t = grid.time(k);
        for (int i = 0; i < grid.x_count(); ++i) {
            const double mass = mu.at(k, i);
            if (mass == 0.0) continue;
            total += mass * spec.exit_reward(t, grid.x(i), moments.exit());
        }
    }
    return total;
}

/// ||A v - rhs||_inf of a measure pair inserted through the index map.
inline double constraint_residual(const LinearProgram& lp, const OccupationFlow& m, const ExitMeasure& mu) {
    if (lp.index_map.size() != static_cast<size_t>(lp.A.cols))
        throw ShapeError("constraint_residual: program has no complete index map");
    numvec v(static_cast<size_t>(lp.A.cols), 0.0);
    for (size_t q = 0; q < lp.index_map.size(); ++q) {
        const VarRef& ref = lp.index_map[q];
        v[q] = ref.kind == VarRef::Kind::occupation ? m.at(ref.k, ref.i, ref.j) : mu.at(ref.k, ref.i);
    }
    return residual_inf(lp.A, v, lp.rhs);
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/**
 * Writes the program in a fixed-column MPS-style text layout (NAME, OBJSENSE
 * MAX, ROWS, COLUMNS, RHS, ENDATA) with the canonical variable names; field
 * widths grow with the longest name so the columns stay aligned. All values
 * are emitted with 17 significant digits and round-trip exactly.
 */
inline void write_lp(const LinearProgram& lp, std::ostream& out) {
    if (lp.var_names.size() != static_cast<size_t>(lp.A.cols) ||
        lp.row_names.size() != static_cast<size_t>(lp.A.rows))
        throw ShapeError("write_lp: program must carry variable and row names");
    size_t width = 8;
    for (const auto& s : lp.var_names) width = std::max(width, s.size());
    for (const auto& s : lp.row_names) width = std::max(width, s.size());
    width += 2;
    const auto pad = [width](const std::string& s) {
        std::string p = s;
        p.resize(std::max(width, s.size()), ' ');
        return p;
    };

    out << "NAME          " << (lp.name.empty() ? "lp" : lp.name) << "\n";
    out << "OBJSENSE\n    MAX\n";
    out << "ROWS\n";
    out << " N  " << pad("obj") << "\n";
    for (const auto& r : lp.row_names) out << " E  " << pad(r) << "\n";
    out << "COLUMNS\n";
    for (int j = 0; j < lp.A.cols; ++j) {
        std::vector<std::pair<std::string, double>> entries;
        if (lp.objective[static_cast<size_t>(j)] != 0.0)
            entries.emplace_back("obj", lp.objective[static_cast<size_t>(j)]);
        for (int q = lp.A.col_ptr[static_cast<size_t>(j)]; q < lp.A.col_ptr[static_cast<size_t>(j) + 1]; ++q)
            entries.emplace_back(lp.row_names[static_cast<size_t>(lp.A.row_idx[static_cast<size_t>(q)])],
                                 lp.A.vals[static_cast<size_t>(q)]);
        for (size_t q = 0; q < entries.size(); q += 2) {
            out << "    " << pad(lp.var_names[static_cast<size_t>(j)]);
            out << pad(entries[q].first) << detail::fmt17(entries[q].second);
            if (q + 1 < entries.size())
                out << "   " << pad(entries[q + 1].first) << detail::fmt17(entries[q + 1].second);
            out << "\n";
        }
    }
    out << "RHS\n";
    for (int r = 0; r < lp.A.rows; ++r) {
        if (lp.rhs[static_cast<size_t>(r)] == 0.0) continue;
        out << "    " << pad("rhs") << pad(lp.row_names[static_cast<size_t>(r)])
            << detail::fmt17(lp.rhs[static_cast<size_t>(r)]) << "\n";
    }
    out << "ENDATA\n";
}

/// Reads a program written by write_lp. Variables appear in first-use order;
/// the index map is not reconstructed (names are). Default bounds v >= 0.
inline LinearProgram read_lp(std::istream& in) {
    LinearProgram lp;
    std::map<std::string, int> row_index;
    std::map<std::string, int> col_index;
    // Per-column accumulation so scattered COLUMNS lines merge.
    std::vector<std::vector<std::pair<int, double>>> cols;
    numvec obj;
    std::vector<std::string> col_names;

    std::string line;
    std::string section;
    bool saw_objsense_max = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] != ' ' && line[0] != '\t') {
            std::string head;
            ls >> head;
            if (head == "NAME") {
                ls >> lp.name;
                section.clear();
            } else if (head == "ENDATA") {
                break;
            } else {
                section = head;
            }
            continue;
        }
        if (section == "OBJSENSE") {
            std::string sense;
            ls >> sense;
            if (sense == "MAX" || sense == "MAXIMIZE") saw_objsense_max = true;
            else throw ConfigError("read_lp: only maximization programs are supported");
        } else if (section == "ROWS") {
            std::string type, rname;
            ls >> type >> rname;
            if (type == "N") continue; // objective row, always named obj here
            if (type != "E") throw ConfigError("read_lp: unsupported row type '" + type + "'");
            row_index.emplace(rname, static_cast<int>(lp.row_names.size()));
            lp.row_names.push_back(rname);
        } else if (section == "COLUMNS") {
            std::string cname;
            ls >> cname;
            auto it = col_index.find(cname);
            if (it == col_index.end()) {
                it = col_index.emplace(cname, static_cast<int>(col_names.size())).first;
                col_names.push_back(cname);
                cols.emplace_back();
                obj.push_back(0.0);
            }
            std::string rname;
            double value = 0.0;
            while (ls >> rname >> value) {
                if (rname == "obj") {
                    obj[static_cast<size_t>(it->second)] = value;
                } else {
                    auto rit = row_index.find(rname);
                    if (rit == row_index.end()) throw ConfigError("read_lp: unknown row '" + rname + "'");
                    cols[static_cast<size_t>(it->second)].emplace_back(rit->second, value);
                }
            }
        } else if (section == "RHS") {
            std::string setname, rname;
            double value = 0.0;
            ls >> setname;
            if (lp.rhs.size() != lp.row_names.size()) lp.rhs.assign(lp.row_names.size(), 0.0);
            while (ls >> rname >> value) {
                auto rit = row_index.find(rname);
                if (rit == row_index.end()) throw ConfigError("read_lp: unknown rhs row '" + rname + "'");
                lp.rhs[static_cast<size_t>(rit->second)] = value;
            }
        } else if (section == "BOUNDS" || section == "RANGES") {
            throw ConfigError("read_lp: BOUNDS/RANGES sections are not produced by this writer");
        }
    }
    if (!saw_objsense_max) throw ConfigError("read_lp: missing OBJSENSE MAX");
    if (lp.rhs.size() != lp.row_names.size()) lp.rhs.assign(lp.row_names.size(), 0.0);

    lp.A.rows = static_cast<int>(lp.row_names.size());
    for (size_t j = 0; j < cols.size(); ++j) {
        std::vector<int> rows;
        numvec vals;
        rows.reserve(cols[j].size());
        vals.reserve(cols[j].size());
        for (const auto& [r, v] : cols[j]) {
            rows.push_back(r);
            vals.push_back(v);
        }
        lp.A.add_column(rows, vals);
    }
    lp.objective = std::move(obj);
    lp.var_names = std::move(col_names);
    return lp;
}

} // namespace mfglp
