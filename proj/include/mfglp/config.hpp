#pragma once

/**
 * Run configuration: a small key = value document shared by the CLI flags and
 * config files.  Unknown keys and out-of-range values fail fast with the key
 * named, and serialize/parse round-trips exactly.
 */

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>

#include "mfglp/core.hpp"

namespace mfglp {

enum class OutputFormat { csv, json };

inline std::string to_string(OutputFormat f) {
    return f == OutputFormat::csv ? "csv" : "json";
}

struct RunConfig {
    std::string problem = "stop-now";  ///< registry name or path to a problem file
    int t_count = 0;                   ///< 0 selects the problem's recommended count
    int x_count = 0;
    int a_count = 0;
    double damping = 0.5;
    double tol = 1e-6;
    int max_iter = 200;
    int n_starts = 3;
    std::uint64_t seed = 42;
    std::int64_t n_agents = 1000;  ///< simulate only
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::csv;

    bool operator==(const RunConfig&) const = default;
};

/** Throws ConfigError naming the violated constraint, if any. */
inline void validate(const RunConfig& cfg) {
    if (cfg.t_count != 0 && cfg.t_count < 2)
        throw ConfigError("t_count: must be >= 2 (got " + std::to_string(cfg.t_count) + ")");
    if (cfg.x_count != 0 && cfg.x_count < 3)
        throw ConfigError("x_count: must be >= 3 (got " + std::to_string(cfg.x_count) + ")");
    if (cfg.a_count != 0 && cfg.a_count < 1)
        throw ConfigError("a_count: must be >= 1 (got " + std::to_string(cfg.a_count) + ")");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
        throw ConfigError("damping: must lie in (0, 1] (got " + std::to_string(cfg.damping) + ")");
    if (!(cfg.tol > 0.0))
        throw ConfigError("tol: must be > 0 (got " + std::to_string(cfg.tol) + ")");
    if (cfg.max_iter < 1)
        throw ConfigError("max_iter: must be >= 1 (got " + std::to_string(cfg.max_iter) + ")");
    if (cfg.n_starts < 1)
        throw ConfigError("n_starts: must be >= 1 (got " + std::to_string(cfg.n_starts) + ")");
    if (cfg.n_agents < 1)
        throw ConfigError("n_agents: must be >= 1 (got " + std::to_string(cfg.n_agents) + ")");
    if (cfg.problem.empty()) throw ConfigError("problem: must not be empty");
}

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_real(const std::string& key, const std::string& text) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a real number, got '" + text + "'");
    }
    if (used != text.size())
        throw ConfigError(key + ": trailing characters in '" + text + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& text) {
    size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    if (used != text.size())
        throw ConfigError(key + ": trailing characters in '" + text + "'");
    return v;
}

inline std::string real_repr(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/** Applies one key = value assignment to a config. */
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "problem")
        cfg.problem = value;
    else if (key == "t_count")
        cfg.t_count = static_cast<int>(detail::parse_int(key, value));
    else if (key == "x_count")
        cfg.x_count = static_cast<int>(detail::parse_int(key, value));
    else if (key == "a_count")
        cfg.a_count = static_cast<int>(detail::parse_int(key, value));
    else if (key == "damping")
        cfg.damping = detail::parse_real(key, value);
    else if (key == "tol")
        cfg.tol = detail::parse_real(key, value);
    else if (key == "max_iter")
        cfg.max_iter = static_cast<int>(detail::parse_int(key, value));
    else if (key == "n_starts")
        cfg.n_starts = static_cast<int>(detail::parse_int(key, value));
    else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
    else if (key == "n_agents")
        cfg.n_agents = detail::parse_int(key, value);
    else if (key == "out_dir")
        cfg.out_dir = value;
    else if (key == "format") {
        if (value == "csv")
            cfg.format = OutputFormat::csv;
        else if (value == "json")
            cfg.format = OutputFormat::json;
        else
            throw ConfigError("format: must be 'csv' or 'json' (got '" + value + "')");
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

/**
 * Parses a key = value document ('#' starts a comment, blank lines ignored).
 * Missing keys keep their documented defaults; the result is validated.
 */
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" +
                              line + "'");
        apply_config_key(cfg, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    }
    validate(cfg);
    return cfg;
}

/** Canonical text form; parse_config(serialize_config(c)) == c. */
inline std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    out += "problem = " + cfg.problem + "\n";
    out += "t_count = " + std::to_string(cfg.t_count) + "\n";
    out += "x_count = " + std::to_string(cfg.x_count) + "\n";
    out += "a_count = " + std::to_string(cfg.a_count) + "\n";
    out += "damping = " + detail::real_repr(cfg.damping) + "\n";
    out += "tol = " + detail::real_repr(cfg.tol) + "\n";
    out += "max_iter = " + std::to_string(cfg.max_iter) + "\n";
    out += "n_starts = " + std::to_string(cfg.n_starts) + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    out += "n_agents = " + std::to_string(cfg.n_agents) + "\n";
    out += "out_dir = " + cfg.out_dir + "\n";
    out += "format = " + to_string(cfg.format) + "\n";
    return out;
}

}  // namespace mfglp
