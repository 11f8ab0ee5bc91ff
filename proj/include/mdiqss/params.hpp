#pragma once

// Simulation parameters: ownership, validation, config-file ingestion, and
// the fiber-channel transmittance model.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mdiqss/detail/format.hpp"

namespace mdiqss::params {

/// Error raised by configuration parsing/validation. `line` is 1-based; 0
/// means the error is not tied to a specific config line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + std::move(msg)
                                      : std::move(msg)),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// All tunable model parameters. Immutable-by-convention after construction;
/// safe to share across concurrent evaluations.
struct SimParams {
    double p_d = 1e-7;      ///< dark/background count probability per detector per gate
    double e_q = 0.015;     ///< memory polarization error probability
    double e_b = 0.0;       ///< probability the memory holds-and-emits a noise photon
    double e_d = 0.015;     ///< measurement-module misalignment error probability
    double eta_D = 0.93;    ///< heralding trigger-detector efficiency
    double eta_d = 0.93;    ///< measurement-module detector efficiency
    double f_ec = 1.16;     ///< error-correction inefficiency (>= 1)
    double T_QM = 0.98;     ///< memory survival probability per loop round trip
    double alpha = 0.2;     ///< fiber loss coefficient, dB/km
    int N = 40;             ///< maximum number of storage time slots
    int K = 8;              ///< number of phase post-selection regions
    double mu = 0.005;      ///< signal-state mean photon number
    double omega = 0.0005;  ///< decoy-state mean photon number (third intensity is vacuum)
    double L_km = 0.0;      ///< per-arm user-to-measurement-node fiber length, km

    friend bool operator==(const SimParams&, const SimParams&) = default;
};

namespace detail {

inline void check_range(bool ok, const std::string& what, int line) {
    if (!ok) throw ConfigError("out-of-range value for '" + what + "'", line);
}

} // namespace detail

/// Validates every SimParams invariant. `line` (optional) attributes the
/// failure to a config line for error reporting.
inline void validate(const SimParams& p, int line = 0) {
    using detail::check_range;
    auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
    check_range(prob(p.p_d), "p_d", line);
    check_range(prob(p.e_q), "e_q", line);
    check_range(prob(p.e_b), "e_b", line);
    check_range(prob(p.e_d), "e_d", line);
    check_range(prob(p.eta_D), "eta_D", line);
    check_range(prob(p.eta_d), "eta_d", line);
    check_range(prob(p.T_QM), "T_QM", line);
    check_range(p.f_ec >= 1.0, "f_ec", line);
    check_range(p.alpha >= 0.0, "alpha", line);
    check_range(p.N >= 1, "N", line);
    check_range(p.K >= 1, "K", line);
    check_range(p.mu >= 0.0, "mu", line);
    check_range(p.omega >= 0.0 && p.omega < p.mu, "omega", line);
    check_range(p.L_km >= 0.0, "L_km", line);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view v, int line) {
    std::string tmp(v);
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(tmp, &pos);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse '" + tmp + "' as a number", line);
    }
    if (pos != tmp.size()) throw ConfigError("trailing characters after number '" + tmp + "'", line);
    if (!std::isfinite(x)) throw ConfigError("non-finite value '" + tmp + "'", line);
    return x;
}

inline int parse_int(std::string_view v, int line) {
    std::string tmp(v);
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(tmp, &pos);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse '" + tmp + "' as an integer", line);
    }
    if (pos != tmp.size()) throw ConfigError("cannot parse '" + tmp + "' as an integer", line);
    return static_cast<int>(x);
}

} // namespace detail

/// Range-checks a single just-assigned field (called during parsing so the
/// offending line number is known). Cross-field rules (omega < mu) are
/// deferred to the final validate().
inline void validate_partial(const SimParams& p, const std::string& key, int line) {
    auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
    using detail::check_range;
    if (key == "p_d") check_range(prob(p.p_d), key, line);
    else if (key == "e_q") check_range(prob(p.e_q), key, line);
    else if (key == "e_b") check_range(prob(p.e_b), key, line);
    else if (key == "e_d") check_range(prob(p.e_d), key, line);
    else if (key == "eta_D") check_range(prob(p.eta_D), key, line);
    else if (key == "eta_d") check_range(prob(p.eta_d), key, line);
    else if (key == "T_QM") check_range(prob(p.T_QM), key, line);
    else if (key == "f_ec") check_range(p.f_ec >= 1.0, key, line);
    else if (key == "alpha") check_range(p.alpha >= 0.0, key, line);
    else if (key == "N") check_range(p.N >= 1, key, line);
    else if (key == "K") check_range(p.K >= 1, key, line);
    else if (key == "mu") check_range(p.mu >= 0.0, key, line);
    else if (key == "omega") check_range(p.omega >= 0.0, key, line);
    else if (key == "L_km") check_range(p.L_km >= 0.0, key, line);
}

/// Parses the flat `key = value` config format from a stream. Lines whose
/// first non-blank character is `#` are comments. Keys are exactly the
/// SimParams field names; absent keys keep their defaults; unknown or
/// duplicate keys are errors reported with their line number.
inline SimParams parse_config(std::istream& in) {
    SimParams p;
    std::string linebuf;
    int lineno = 0;
    unsigned seen = 0; // bitmask of assigned fields
    auto mark = [&](int bit, int line) {
        if (seen & (1u << bit)) throw ConfigError("duplicate key", line);
        seen |= (1u << bit);
    };
    while (std::getline(in, linebuf)) {
        ++lineno;
        std::string_view line = detail::trim(linebuf);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected 'key = value'", lineno);
        std::string key(detail::trim(line.substr(0, eq)));
        std::string_view val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", lineno);
        if (val.empty()) throw ConfigError("missing value for '" + key + "'", lineno);

        if (key == "p_d") { mark(0, lineno); p.p_d = detail::parse_double(val, lineno); }
        else if (key == "e_q") { mark(1, lineno); p.e_q = detail::parse_double(val, lineno); }
        else if (key == "e_b") { mark(2, lineno); p.e_b = detail::parse_double(val, lineno); }
        else if (key == "e_d") { mark(3, lineno); p.e_d = detail::parse_double(val, lineno); }
        else if (key == "eta_D") { mark(4, lineno); p.eta_D = detail::parse_double(val, lineno); }
        else if (key == "eta_d") { mark(5, lineno); p.eta_d = detail::parse_double(val, lineno); }
        else if (key == "f_ec") { mark(6, lineno); p.f_ec = detail::parse_double(val, lineno); }
        else if (key == "T_QM") { mark(7, lineno); p.T_QM = detail::parse_double(val, lineno); }
        else if (key == "alpha") { mark(8, lineno); p.alpha = detail::parse_double(val, lineno); }
        else if (key == "N") { mark(9, lineno); p.N = detail::parse_int(val, lineno); }
        else if (key == "K") { mark(10, lineno); p.K = detail::parse_int(val, lineno); }
        else if (key == "mu") { mark(11, lineno); p.mu = detail::parse_double(val, lineno); }
        else if (key == "omega") { mark(12, lineno); p.omega = detail::parse_double(val, lineno); }
        else if (key == "L_km") { mark(13, lineno); p.L_km = detail::parse_double(val, lineno); }
        else throw ConfigError("unknown key '" + key + "'", lineno);

        // validate the field that was just set so range errors carry the line
        validate_partial(p, key, lineno);
    }
    validate(p);
    return p;
}

/// Loads and validates a config file.  See parse_config for the format.
inline SimParams load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Canonical config writer; parse_config(write_config(p)) round-trips to an
/// identical SimParams (floats serialized with shortest round-trip form).
inline void write_config(const SimParams& p, std::ostream& out) {
    using mdiqss::detail::format_double;
    using mdiqss::detail::format_int;
    out << "p_d = " << format_double(p.p_d) << '\n'
        << "e_q = " << format_double(p.e_q) << '\n'
        << "e_b = " << format_double(p.e_b) << '\n'
        << "e_d = " << format_double(p.e_d) << '\n'
        << "eta_D = " << format_double(p.eta_D) << '\n'
        << "eta_d = " << format_double(p.eta_d) << '\n'
        << "f_ec = " << format_double(p.f_ec) << '\n'
        << "T_QM = " << format_double(p.T_QM) << '\n'
        << "alpha = " << format_double(p.alpha) << '\n'
        << "N = " << format_int(p.N) << '\n'
        << "K = " << format_int(p.K) << '\n'
        << "mu = " << format_double(p.mu) << '\n'
        << "omega = " << format_double(p.omega) << '\n'
        << "L_km = " << format_double(p.L_km) << '\n';
}

/// Fiber transmittance T_c = 10^(-alpha * L / 10).
inline double channel_transmittance(double alpha_db_per_km, double L_km) {
    if (alpha_db_per_km < 0.0 || L_km < 0.0)
        throw std::invalid_argument("channel_transmittance: negative argument");
    return std::pow(10.0, -alpha_db_per_km * L_km / 10.0);
}

/// User-to-user separation in the symmetric triangle geometry: sqrt(3) * L.
inline double user_separation(double L_km) {
    if (L_km < 0.0) throw std::invalid_argument("user_separation: negative length");
    return std::sqrt(3.0) * L_km;
}

} // namespace mdiqss::params
