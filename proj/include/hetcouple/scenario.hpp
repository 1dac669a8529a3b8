#pragma once
/**
 * @file scenario.hpp
 * @brief Run configuration: flat key = value files, the two built-in presets
 * and the builders turning a configuration into domains and coupled problems.
 */

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetcouple/schwarz.hpp"

namespace hetcouple {

/// Malformed configuration or command-line input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "': not a number: '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(d)) throw ConfigError("'" + key + "': not a number: '" + v + "'");
    return d;
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("'" + key + "': not an integer: '" + v + "'");
    return static_cast<int>(d);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

/// Shortest text that reads back to the same double.
inline std::string canonical(double d) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
}

}  // namespace detail

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "preset", "scenario", "L", "H", "channel_len", "expansion_len", "l", "kappa", "m", "x_star", "forcing",
        "forcing_value", "gamma1", "gamma2", "L0", "lambda", "tol", "max_iter", "hx", "hz", "nx", "nz", "L1",
        "sweep", "sweep_values", "out", "jobs"};
    return keys;
}

/// Complete key set of a preset; every configuration starts from one of these.
inline KeyValues preset_values(const std::string& name) {
    if (name == "rect1")
        return {{"preset", "rect1"}, {"scenario", "rect"}, {"L", "20"}, {"H", "0.5"}, {"channel_len", "0"},
                {"expansion_len", "0"}, {"l", "0"}, {"kappa", "0.001"}, {"m", "1"}, {"x_star", "19"},
                {"forcing", "gaussian_sine"}, {"forcing_value", "1"}, {"gamma1", "0"}, {"gamma2", "0"},
                {"L0", "16"}, {"lambda", "opt"}, {"tol", "1e-8"}, {"max_iter", "50"}, {"hx", "0.05"},
                {"hz", "0.05"}, {"L1", "17"}, {"sweep", "interface"},
                {"sweep_values", "8,10,12,14,16,17,18,18.5,19"}, {"out", "out"}, {"jobs", "0"}};
    if (name == "funnel2")
        return {{"preset", "funnel2"}, {"scenario", "funnel"}, {"L", "3"}, {"H", "0.05"}, {"channel_len", "2"},
                {"expansion_len", "1"}, {"l", "3"}, {"kappa", "0.001"}, {"m", "1"}, {"x_star", "0"},
                {"forcing", "constant"}, {"forcing_value", "1"}, {"gamma1", "0"}, {"gamma2", "0"},
                {"L0", "1.5"}, {"lambda", "opt"}, {"tol", "1e-8"}, {"max_iter", "50"}, {"hx", "0.005"},
                {"hz", "0.005"}, {"L1", "2"}, {"sweep", "interface"}, {"sweep_values", "0.5,1,1.5,1.9"},
                {"out", "out"}, {"jobs", "0"}};
    throw ConfigError("unknown preset '" + name + "' (expected rect1 or funnel2)");
}

/// Reads `key = value` lines; '#' starts a comment.
inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!known_keys().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_key_values(in);
}

enum class Scenario { Rect, Funnel };
enum class ForcingKind { GaussianSine, Constant };
enum class SweepKind { None, Interface, Epsilon, Lambda };

struct RunConfig {
    std::string preset;
    Scenario scenario = Scenario::Rect;
    double L = 20, H = 0.5;                                   // rect
    double channel_len = 0, expansion_len = 0, l = 0;         // funnel (H is the channel height)
    double kappa = 0.001;
    double m = 1, x_star = 19;
    ForcingKind forcing = ForcingKind::GaussianSine;
    double forcing_value = 1;
    double gamma1 = 0, gamma2 = 0;
    double L0 = 16;
    std::optional<double> lambda;  ///< empty means lambda_opt
    double tol = 1e-8;
    int max_iter = 50;
    double hx = 0.05, hz = 0.05;
    double L1 = 17;
    SweepKind sweep = SweepKind::Interface;
    std::vector<double> sweep_values;
    std::string out = "out";
    int jobs = 0;  ///< 0: hardware concurrency

    KeyValues entries;                    ///< resolved key set (canonical text)
    std::vector<std::string> defaults_used;  ///< keys taken from the preset

    /// Length used for eps = H / L.
    double length() const { return scenario == Scenario::Rect ? L : channel_len; }
    int nz() const { return static_cast<int>(std::lround(H / hz)); }
};

/// Resolves a configuration: preset values overlaid by `file` and then by `overrides`.
inline RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides = {}) {
    std::string preset = "rect1";
    if (auto it = overrides.find("preset"); it != overrides.end()) preset = it->second;
    else if (auto jt = file.find("preset"); jt != file.end()) preset = jt->second;
    KeyValues kv = preset_values(preset);
    std::set<std::string> explicit_keys;
    for (const auto* src : {&file, &overrides})
        for (const auto& [k, v] : *src) {
            if (!known_keys().count(k)) throw ConfigError("unknown key '" + k + "'");
            kv[k] = v;
            explicit_keys.insert(k);
        }

    using detail::parse_double;
    RunConfig c;
    c.preset = preset;
    const auto num = [&](const char* k) { return parse_double(k, kv.at(k)); };
    const std::string sc = kv.at("scenario");
    if (sc == "rect" || sc == "custom") c.scenario = Scenario::Rect;
    else if (sc == "funnel") c.scenario = Scenario::Funnel;
    else throw ConfigError("scenario must be rect, funnel or custom");
    c.L = num("L");
    c.H = num("H");
    c.channel_len = num("channel_len");
    c.expansion_len = num("expansion_len");
    c.l = num("l");
    c.kappa = num("kappa");
    c.m = num("m");
    c.x_star = num("x_star");
    const std::string fk = kv.at("forcing");
    if (fk == "gaussian_sine") c.forcing = ForcingKind::GaussianSine;
    else if (fk == "constant") c.forcing = ForcingKind::Constant;
    else throw ConfigError("forcing must be gaussian_sine or constant");
    c.forcing_value = num("forcing_value");
    c.gamma1 = num("gamma1");
    c.gamma2 = num("gamma2");
    c.L0 = num("L0");
    if (kv.at("lambda") != "opt") {
        c.lambda = num("lambda");
        if (!(*c.lambda > 0)) throw ConfigError("lambda must be positive or 'opt'");
    }
    c.tol = num("tol");
    if (!(c.tol > 0)) throw ConfigError("tol must be positive");
    c.max_iter = detail::parse_int("max_iter", kv.at("max_iter"));
    if (c.max_iter < 1) throw ConfigError("max_iter must be at least 1");
    c.hx = num("hx");
    c.hz = num("hz");
    // cell counts take precedence over spacings
    const double len = c.scenario == Scenario::Rect ? c.L : c.channel_len + c.expansion_len;
    if (kv.count("nx")) c.hx = len / detail::parse_int("nx", kv.at("nx"));
    if (kv.count("nz")) c.hz = c.H / detail::parse_int("nz", kv.at("nz"));
    if (!(c.hx > 0) || !(c.hz > 0)) throw ConfigError("grid spacings must be positive");
    c.L1 = num("L1");
    const std::string sw = kv.at("sweep");
    if (sw == "none") c.sweep = SweepKind::None;
    else if (sw == "interface") c.sweep = SweepKind::Interface;
    else if (sw == "epsilon") c.sweep = SweepKind::Epsilon;
    else if (sw == "lambda") c.sweep = SweepKind::Lambda;
    else throw ConfigError("sweep must be none, interface, epsilon or lambda");
    c.sweep_values = detail::parse_list("sweep_values", kv.at("sweep_values"));
    c.out = kv.at("out");
    c.jobs = detail::parse_int("jobs", kv.at("jobs"));
    if (c.jobs < 0) throw ConfigError("jobs must be non-negative");

    // canonical entries: numbers re-printed so equivalent spellings hash equally
    for (const auto& [k, v] : kv) {
        bool numeric = true;
        try {
            detail::parse_double(k, v);
        } catch (const ConfigError&) {
            numeric = false;
        }
        if (k == "sweep_values") {
            std::string joined;
            for (double x : c.sweep_values) joined += (joined.empty() ? "" : ",") + detail::canonical(x);
            c.entries[k] = joined;
        } else {
            c.entries[k] = numeric ? detail::canonical(detail::parse_double(k, v)) : v;
        }
        if (!explicit_keys.count(k)) c.defaults_used.push_back(k);
    }
    return c;
}

/// FNV-1a over the resolved entries, excluding the output location and worker count.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [k, v] : c.entries) {
        if (k == "out" || k == "jobs") continue;
        for (char ch : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// builders

/// Full domain for channel height H; the vertical cell count is kept from the configuration.
inline Domain2D build_domain(const RunConfig& c, double H) {
    const double hz = c.hz * H / c.H;
    if (c.scenario == Scenario::Rect) {
        const int nx = detail::exact_multiple(c.L, c.hx);
        const int nz = detail::exact_multiple(H, hz);
        return build_rectangle(c.L, H, nx, nz);
    }
    return build_funnel(c.channel_len, H, c.expansion_len, c.l, c.hx, hz);
}

inline Domain2D build_domain(const RunConfig& c) { return build_domain(c, c.H); }

inline ScalarFunction2D build_forcing(const RunConfig& c, double H) {
    if (c.forcing == ForcingKind::Constant) {
        const double v = c.forcing_value;
        return [v](double, double) { return v; };
    }
    const double m = c.m, xs = c.x_star;
    const double k = 2.0 * M_PI / H;
    return [m, xs, k](double x, double z) { return m * std::exp(-(x - xs) * (x - xs)) * std::sin(k * z); };
}

/// Coupled problem split at L0 for channel height H; lambda resolved to lambda_opt when unset.
inline CouplingConfig build_coupling(const RunConfig& c, double L0, double H) {
    CouplingConfig cc;
    cc.split = split_at_interface(build_domain(c, H), L0);
    cc.kappa = c.kappa;
    cc.lambda = c.lambda ? *c.lambda : lambda_opt(c.kappa, H, L0).value;
    cc.forcing = build_forcing(c, H);
    const double g1 = c.gamma1, g2 = c.gamma2;
    cc.gamma1 = [g1](double) { return g1; };
    cc.gamma2 = [g2](double) { return g2; };
    cc.tol = c.tol;
    cc.max_iter = c.max_iter;
    return cc;
}

inline CouplingConfig build_coupling(const RunConfig& c) { return build_coupling(c, c.L0, c.H); }

}  // namespace hetcouple
