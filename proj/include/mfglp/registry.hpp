#pragma once

/**
 * Built-in problem registry.
 *
 * A small set of parameterized families covering the solver surface: trivial
 * calibration problems with known closed-form values, a free-boundary
 * stopping problem, a pure drift-control problem with a convex control set,
 * and two mean-field games whose couplings follow the multiplicative
 * anti-monotone structure (f = f1*f2(z) + f3, g = g1*g2(w) + g3 with f2, g2
 * non-increasing) under which the Nash value is unique.
 *
 * Each problem fixes its own continuum domain (horizon, state interval,
 * action interval) and a recommended grid; callers choose grid resolutions.
 */

#include <cmath>
#include <string>
#include <vector>

#include "mfglp/core.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/problem.hpp"

namespace mfglp {

/** Static description of a registry problem and its recommended resolution. */
struct ProblemInfo {
    std::string name;
    std::string summary;
    bool is_mfg = false;
    double T = 1.0;
    double x_lo = 0.0, x_hi = 1.0;
    double a_lo = 0.0, a_hi = 0.0;
    int t_count = 30, x_count = 30, a_count = 1;
};

inline const std::vector<ProblemInfo>& registry_info() {
    static const std::vector<ProblemInfo> table = {
        {"stop-now", "g = 1, f = 0: stopping immediately is optimal, value 1", false, 1.0, 0.0,
         1.0, -1.0, 1.0, 30, 30, 1},
        {"never-stop", "f = 1, g = 0, frozen dynamics: waiting until T is optimal, value T", false,
         1.0, 0.0, 1.0, -1.0, 1.0, 30, 30, 1},
        {"martingale", "b = 0, f = 0, g = x: every policy scores the initial mean", false, 1.0,
         0.0, 2.0, -1.0, 1.0, 30, 30, 1},
        {"american-put-like", "discounted (strike - x)+ obstacle over driftless noise", false, 1.0,
         0.0, 2.0, -1.0, 1.0, 30, 30, 1},
        {"drift-control", "steer toward a reward ridge under quadratic action cost", false, 1.0,
         0.0, 1.0, -0.5, 0.5, 30, 30, 3},
        {"congestion-mfg", "alive reward decays with the living crowd (anti-monotone f2)", true,
         1.0, 0.0, 1.0, -0.3, 0.3, 30, 30, 3},
        {"crowd-exit-mfg", "discounted exit reward decays with exited mass (bank-run flavor)",
         true, 1.0, 0.0, 1.0, -0.1, 0.1, 30, 30, 3},
    };
    return table;
}

inline std::vector<std::string> registry_problems() {
    std::vector<std::string> names;
    for (const auto& p : registry_info()) names.push_back(p.name);
    return names;
}

inline const ProblemInfo& info_for(const std::string& name) {
    for (const auto& p : registry_info())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : registry_info()) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown registry problem '" + name + "' (known: " + known + ")");
}

/**
 * Grid for a registry problem at the requested resolution; zero counts select
 * the problem's recommended defaults.
 */
inline Grid registry_grid(const std::string& name, int t_count = 0, int x_count = 0,
                          int a_count = 0) {
    const ProblemInfo& p = info_for(name);
    return make_grid(t_count > 0 ? t_count : p.t_count, x_count > 0 ? x_count : p.x_count,
                     a_count > 0 ? a_count : p.a_count, p.T, p.x_lo, p.x_hi, p.a_lo, p.a_hi);
}

namespace detail {

/// Quadratic bump initial distribution: zero on the boundary, unit total mass.
inline numvec bump_m0(const Grid& grid, double center, double width) {
    const int nx = grid.x_count();
    numvec m0(static_cast<size_t>(nx), 0.0);
    double total = 0.0;
    for (int i = 1; i + 1 < nx; ++i) {
        const double u = (grid.x(i) - center) / width;
        m0[i] = std::max(0.0, 1.0 - u * u);
        total += m0[i];
    }
    if (total <= 0.0) throw ConfigError("bump_m0: support does not meet the interior grid");
    for (double& v : m0) v /= total;
    return m0;
}

inline KernelFn zero_kernel() {
    return [](double, double, std::span<double> out) {
        for (double& v : out) v = 0.0;
    };
}

inline KernelFn constant_kernel(double c) {
    return [c](double, double, std::span<double> out) {
        for (double& v : out) v = c;
    };
}

}  // namespace detail

/**
 * Instantiates a registry problem on a grid built by registry_grid (or any
 * grid with the same continuum domain).
 */
inline ProblemSpec make_problem(const std::string& name, const Grid& grid) {
    const ProblemInfo& p = info_for(name);
    ProblemSpec spec;
    spec.name = p.name;
    spec.T = p.T;
    spec.x_lo = p.x_lo;
    spec.x_hi = p.x_hi;
    spec.moment_dim = 1;
    spec.drift_kernel = detail::zero_kernel();
    spec.diffusion_kernel = detail::zero_kernel();
    spec.running_kernel = detail::zero_kernel();
    spec.exit_kernel = detail::zero_kernel();
    spec.convex_actions = false;

    auto zero2 = [](double, double, std::span<const double>, double) { return 0.0; };

    if (name == "stop-now") {
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.15;
        spec.drift = zero2;
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.15; };
        spec.running_reward = zero2;
        spec.exit_reward = [](double, double, std::span<const double>) { return 1.0; };
        spec.m0 = detail::bump_m0(grid, 0.5, 0.35);
        spec.convex_actions = true;
    } else if (name == "never-stop") {
        spec.boundary_mode = BoundaryMode::unattainable;
        spec.sigma_floor = 0.0;
        spec.drift = zero2;
        spec.diffusion = zero2;
        spec.running_reward = [](double, double, std::span<const double>, double) { return 1.0; };
        spec.exit_reward = [](double, double, std::span<const double>) { return 0.0; };
        spec.m0 = detail::bump_m0(grid, 0.5, 0.35);
        spec.convex_actions = true;
    } else if (name == "martingale") {
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.3;
        spec.drift = zero2;
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.3; };
        spec.running_reward = zero2;
        spec.exit_reward = [](double, double x, std::span<const double>) { return x; };
        spec.m0 = detail::bump_m0(grid, 1.0, 0.6);
        spec.convex_actions = true;
    } else if (name == "american-put-like") {
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.3;
        spec.drift = zero2;
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.3; };
        spec.running_reward = zero2;
        spec.exit_reward = [](double t, double x, std::span<const double>) {
            return std::exp(-0.05 * t) * std::max(1.0 - x, 0.0);
        };
        spec.m0 = detail::bump_m0(grid, 1.1, 0.5);
        spec.convex_actions = true;
    } else if (name == "drift-control") {
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.1;
        spec.drift = [](double, double, std::span<const double>, double a) { return a; };
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.1; };
        spec.running_reward = [](double, double x, std::span<const double>, double a) {
            const double u = x - 0.65;
            return 1.0 - 2.0 * u * u - 0.1 * a * a;
        };
        spec.exit_reward = [](double, double, std::span<const double>) { return 0.0; };
        spec.m0 = detail::bump_m0(grid, 0.4, 0.3);
        spec.convex_actions = true;
    } else if (name == "congestion-mfg") {
        // f = f2(z) + f3(x, a) with f1 = 1, z = alive mass, f2 non-increasing.
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.12;
        spec.drift = [](double, double, std::span<const double>, double a) { return a; };
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.12; };
        spec.running_kernel = detail::constant_kernel(1.0);
        spec.running_reward = [](double, double x, std::span<const double> z, double a) {
            const double alive = z.empty() ? 0.0 : z[0];
            const double u = x - 0.7;
            return (0.9 - 0.5 * alive) - 0.4 * u * u - 0.15 * a * a;
        };
        spec.exit_reward = [](double t, double, std::span<const double>) {
            return 0.5 * std::exp(-2.0 * t);
        };
        spec.m0 = detail::bump_m0(grid, 0.5, 0.3);
        spec.convex_actions = true;
    } else if (name == "crowd-exit-mfg") {
        // g = g1(t) g2(w) + g3(x) with g1 = exp(-t), w the discounted exited
        // mass, g2 non-increasing: late leavers recover less once the crowd
        // has run.
        spec.boundary_mode = BoundaryMode::attainable;
        spec.sigma_floor = 0.12;
        spec.drift = [](double, double, std::span<const double>, double a) { return a; };
        spec.diffusion = [](double, double, std::span<const double>, double) { return 0.12; };
        spec.exit_kernel = [](double t, double, std::span<double> out) {
            out[0] = std::exp(-t);
        };
        spec.running_reward = [](double, double, std::span<const double>, double a) {
            return 0.05 - 0.1 * a * a;
        };
        spec.exit_reward = [](double t, double x, std::span<const double> w) {
            const double exited = w.empty() ? 0.0 : w[0];
            return std::exp(-t) * (1.0 - 0.7 * exited) + 0.2 * x;
        };
        spec.m0 = detail::bump_m0(grid, 0.5, 0.3);
        spec.convex_actions = true;
    } else {
        throw ConfigError("make_problem: no construction for '" + name + "'");
    }

    validate(spec, grid);
    return spec;
}

}  // namespace mfglp
