#pragma once

// Run configuration: a flat "key = value" text file ('#' comments) and the
// inline potential language
//   cos:<n>:<amp> + sin:<n>:<amp> + ...   (amp cos(2 pi n x), amp sin(2 pi n x))

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/estimates.hpp"
#include "hillkdv/fourier.hpp"
#include "hillkdv/kdv.hpp"

namespace hillkdv {

inline constexpr const char* version_string = "hillkdv 1.0.0";

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(d)) throw ConfigError(key + ": not a number: '" + v + "'");
    return d;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": not a nonnegative integer: '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// Parses the inline potential language. Terms are separated by '+'; an empty
/// string or "0" is the zero potential.
inline TrigPotential parse_potential_spec(const std::string& spec) {
    TrigPotential p;
    const std::string s = detail::trim(spec);
    if (s.empty() || s == "0" || s == "zero") return p;
    for (const auto& term : detail::split(s, '+')) {
        const auto parts = detail::split(term, ':');
        if (parts.size() != 3 || (parts[0] != "cos" && parts[0] != "sin"))
            throw ConfigError("potential term '" + term + "': expected cos:<n>:<amp> or sin:<n>:<amp>");
        const auto n = detail::parse_u64("potential mode", parts[1]);
        if (n == 0 || n > 4096) throw ConfigError("potential term '" + term + "': mode must be in 1..4096");
        const double amp = detail::parse_double("potential amplitude", parts[2]);
        if (p.modes() < n) p.resize(n);
        // a cos = (a/2)(e + e^-1), a sin = (-i a/2) e + c.c.
        p[n] += parts[0] == "cos" ? cplx(0.5 * amp, 0.0) : cplx(0.0, -0.5 * amp);
    }
    return p;
}

/// Ordered key/value pairs as read, for verbatim echo into outputs.
struct ConfigEntries {
    std::vector<std::pair<std::string, std::string>> items;

    void set(const std::string& k, const std::string& v) {
        for (auto& [key, val] : items)
            if (key == k) {
                val = v;
                return;
            }
        items.emplace_back(k, v);
    }
    void erase(const std::string& k) {
        std::erase_if(items, [&k](const auto& kv) { return kv.first == k; });
    }
    const std::string* find(const std::string& k) const {
        for (const auto& [key, val] : items)
            if (key == k) return &val;
        return nullptr;
    }
};

inline ConfigEntries parse_config_text(std::istream& is) {
    ConfigEntries c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string k = detail::trim(t.substr(0, eq));
        if (k.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        c.set(k, detail::trim(t.substr(eq + 1)));
    }
    return c;
}

inline ConfigEntries load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config_text(f);
}

struct RunConfig {
    std::string command;
    TrigPotential potential;
    std::string potential_source;  ///< inline spec or file path
    std::size_t n_max = 16;
    double tol = 1e-6;             ///< identity tolerance (relative)
    std::string out_dir = ".";
    FlowConfig flow;
    bool cascade = false;
    std::size_t cascade_mode = 16;
    std::size_t cascade_cutoff = 2;
    double cascade_amplitude = 1.0;
    Battery battery;
    unsigned checks = check_all;
    unsigned threads = 0;
    std::size_t profile_points = 201;  ///< samples per gap in v profiles
    std::string riccati_from = "psi";  ///< the potential is psi, p or q
    bool flow_bounds = false;          ///< verify: also evolve and check along the trajectory
    ConfigEntries entries;             ///< effective key/value pairs
};

inline unsigned parse_checks(const std::string& v) {
    static const std::map<std::string, unsigned> names{
        {"identity", check_identity}, {"hamiltonian", check_hamiltonian}, {"hminus1", check_hminus1_action},
        {"prior", check_prior},       {"riccati", check_riccati_chain},             {"q0", check_q0},
        {"geometry", check_geometry}, {"all", check_all}};
    unsigned m = 0;
    for (const auto& name : detail::split(v, ',')) {
        const auto it = names.find(name);
        if (it == names.end()) throw ConfigError("checks: unknown check '" + name + "'");
        m |= it->second;
    }
    return m;
}

/// Builds a RunConfig from key/value entries. Unknown keys and out-of-range
/// values are configuration errors.
inline RunConfig make_run_config(const ConfigEntries& e) {
    using namespace detail;
    RunConfig rc;
    rc.entries = e;
    bool have_inline = false, have_file = false;
    for (const auto& [k, v] : e.items) {
        if (k == "potential") {
            rc.potential = parse_potential_spec(v);
            rc.potential_source = v;
            have_inline = true;
        } else if (k == "potential_file") {
            std::ifstream f(v);
            if (!f) throw ConfigError("cannot open potential file '" + v + "'");
            rc.potential = read_potential(f);
            rc.potential_source = v;
            have_file = true;
        } else if (k == "n_max") {
            rc.n_max = parse_u64(k, v);
        } else if (k == "tol") {
            rc.tol = parse_double(k, v);
        } else if (k == "out") {
            rc.out_dir = v;
        } else if (k == "modes") {
            rc.flow.modes = parse_u64(k, v);
        } else if (k == "dt") {
            rc.flow.dt = parse_double(k, v);
        } else if (k == "t_end") {
            rc.flow.t_end = parse_double(k, v);
        } else if (k == "record_every") {
            rc.flow.record_every = parse_u64(k, v);
        } else if (k == "dealias") {
            rc.flow.dealias = parse_bool(k, v);
        } else if (k == "projections") {
            rc.flow.projections.clear();
            for (const auto& s : split(v, ',')) rc.flow.projections.push_back(parse_u64(k, s));
        } else if (k == "action_gaps") {
            rc.flow.action_gaps = parse_u64(k, v);
        } else if (k == "cascade") {
            rc.cascade = parse_bool(k, v);
        } else if (k == "cascade_mode") {
            rc.cascade_mode = parse_u64(k, v);
        } else if (k == "cascade_cutoff") {
            rc.cascade_cutoff = parse_u64(k, v);
        } else if (k == "cascade_amplitude") {
            rc.cascade_amplitude = parse_double(k, v);
        } else if (k == "seed") {
            rc.battery.seed = parse_u64(k, v);
        } else if (k == "count") {
            rc.battery.count = parse_u64(k, v);
        } else if (k == "battery_modes") {
            rc.battery.modes = parse_u64(k, v);
        } else if (k == "decay_law") {
            if (v == "power") rc.battery.law = DecayLaw::power;
            else if (v == "exp") rc.battery.law = DecayLaw::exponential;
            else throw ConfigError("decay_law: expected 'power' or 'exp'");
        } else if (k == "decay") {
            rc.battery.decay = parse_double(k, v);
        } else if (k == "norm_min") {
            rc.battery.norm_min = parse_double(k, v);
        } else if (k == "norm_max") {
            rc.battery.norm_max = parse_double(k, v);
        } else if (k == "checks") {
            rc.checks = parse_checks(v);
        } else if (k == "threads") {
            rc.threads = static_cast<unsigned>(parse_u64(k, v));
        } else if (k == "riccati_from") {
            if (v != "psi" && v != "p" && v != "q") throw ConfigError("riccati_from: expected psi, p or q");
            rc.riccati_from = v;
        } else if (k == "flow_bounds") {
            rc.flow_bounds = parse_bool(k, v);
        } else if (k == "profile_points") {
            rc.profile_points = parse_u64(k, v);
        } else {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }
    if (have_inline && have_file) throw ConfigError("give either 'potential' or 'potential_file', not both");
    if (rc.n_max < 1 || rc.n_max > 256) throw ConfigError("n_max must be in 1..256");
    if (!(rc.tol > 0.0)) throw ConfigError("tol must be positive");
    if (rc.battery.modes < 1) throw ConfigError("battery_modes must be positive");
    if (!(rc.battery.norm_min >= 0.0) || !(rc.battery.norm_max >= rc.battery.norm_min))
        throw ConfigError("need 0 <= norm_min <= norm_max");
    if (rc.profile_points < 3) throw ConfigError("profile_points must be >= 3");
    return rc;
}

}  // namespace hillkdv
