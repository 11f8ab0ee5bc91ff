#pragma once

// Two-intensity (vacuum + decoy) estimation of the single-photon yield lower
// bound, bit-error upper bound, and single-photon gain.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "mdiqss/ghz.hpp"
#include "mdiqss/params.hpp"
#include "mdiqss/sources.hpp"
#include "mdiqss/sync.hpp"

namespace mdiqss::decoy {

/// Raised when the decoy system is degenerate (signal and decoy intensities
/// coincide, so the linear system for the single-photon yield has no
/// solution).
class EstimationImpossible : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Gain and error rate of one intensity triple.
struct GainEntry {
    double Q_X;
    double E_X;
};

/// Gains for every intensity triple referenced by the estimator. Keys are
/// three-letter labels over {m: signal, w: decoy, o: vacuum}, e.g. "mwo".
struct GainTable {
    std::map<std::string, GainEntry> entries;

    const GainEntry& at(const std::string& label) const {
        auto it = entries.find(label);
        if (it == entries.end())
            throw std::out_of_range("gain table has no entry " + label);
        return it->second;
    }
};

/// All intensity-triple labels the estimator needs: the signal triple, the
/// eight decoy/vacuum combinations, and the six signal/vacuum mixtures.
inline const std::array<std::string, 15>& gain_table_labels() {
    static const std::array<std::string, 15> labels = {
        "mmm", "www", "wwo", "wow", "oww", "woo", "owo", "oow",
        "ooo", "mmo", "mom", "omm", "moo", "omo", "oom"};
    return labels;
}

/// Evaluates the analytic gain/QBER model for every required intensity
/// triple at the per-arm efficiency implied by the synchronization
/// probability `Ps3` and the memory fidelity `F`.
inline GainTable build_gain_table(const params::SimParams& p, double Ps3,
                                  double F) {
    const double eta = sync::per_arm_efficiency(p.eta_d, Ps3);
    auto level = [&](char c) {
        switch (c) {
            case 'm': return p.mu;
            case 'w': return p.omega;
            default: return 0.0;
        }
    };
    GainTable t;
    for (const std::string& label : gain_table_labels()) {
        const ghz::IntensityTriple triple{level(label[0]), level(label[1]),
                                          level(label[2])};
        const ghz::GainResult g =
            ghz::gain_and_qber(triple, eta, p.p_d, p.K, p.e_d, F);
        t.entries[label] = GainEntry{g.Q_X, g.E_X};
    }
    return t;
}

/// A clamped bound together with its raw (pre-clamp) value; `valid` records
/// whether the raw value already lay inside the admissible range.
struct BoundResult {
    double value;
    double raw;
    bool valid;
};

namespace detail {

/// Inclusion-exclusion combination that isolates the >=1-photon-per-arm part
/// of the gains at one intensity level x in {m, w}:
/// Q_xxx - Px0*(two-arm terms) + Px0^2*(one-arm terms) - Px0^3*Q_ooo,
/// with `weight` selecting Q (or E*Q for the error-weighted variant).
template <class Weight>
double vacuum_subtracted(const GainTable& t, char x, double Px0,
                         Weight&& weight) {
    const std::string s(1, x);
    auto w = [&](const std::string& label) { return weight(t.at(label)); };
    return w(s + s + s) - Px0 * (w(s + s + "o") + w(s + "o" + s) + w("o" + s + s)) +
           Px0 * Px0 * (w(s + "oo") + w("o" + s + "o") + w("oo" + s)) -
           Px0 * Px0 * Px0 * w("ooo");
}

} // namespace detail

/// Lower bound on the yield of the single-photon-per-arm component, from the
/// signal/decoy/vacuum gain combinations with thermal photon-number
/// coefficients. The raw estimate is clamped to [0, 1].
inline BoundResult yield_lower_bound(const GainTable& t, double mu,
                                     double omega) {
    const double Pm0 = sources::thermal_pmf(mu, 0);
    const double Pm1 = sources::thermal_pmf(mu, 1);
    const double Pm2 = sources::thermal_pmf(mu, 2);
    const double Pw0 = sources::thermal_pmf(omega, 0);
    const double Pw1 = sources::thermal_pmf(omega, 1);
    const double Pw2 = sources::thermal_pmf(omega, 2);
    const double den = Pm1 * Pm1 * Pw1 * Pw1 * (Pm2 * Pw1 - Pw2 * Pm1);
    if (mu == omega || den == 0.0)
        throw EstimationImpossible(
            "single-photon yield estimation impossible: signal and decoy "
            "intensities are degenerate");
    auto gain = [](const GainEntry& e) { return e.Q_X; };
    const double g_w = detail::vacuum_subtracted(t, 'w', Pw0, gain);
    const double g_m = detail::vacuum_subtracted(t, 'm', Pm0, gain);
    const double raw = (Pm1 * Pm1 * Pm2 * g_w - Pw1 * Pw1 * Pw2 * g_m) / den;
    const double value = std::clamp(raw, 0.0, 1.0);
    return BoundResult{value, raw, raw == value};
}

/// Upper bound on the single-photon bit error rate given the yield lower
/// bound. The raw estimate is clamped to [0, 0.5]. A nonpositive yield is a
/// no-key signal: the bound saturates at 0.5 and is flagged invalid.
inline BoundResult error_upper_bound(const GainTable& t, double Y111_XL,
                                     double omega) {
    if (Y111_XL <= 0.0)
        return BoundResult{0.5, std::numeric_limits<double>::quiet_NaN(),
                           false};
    const double Pw0 = sources::thermal_pmf(omega, 0);
    const double Pw1 = sources::thermal_pmf(omega, 1);
    auto err_gain = [](const GainEntry& e) { return e.E_X * e.Q_X; };
    const double num = detail::vacuum_subtracted(t, 'w', Pw0, err_gain);
    const double raw = num / (Pw1 * Pw1 * Pw1 * Y111_XL);
    const double value = std::clamp(raw, 0.0, 0.5);
    return BoundResult{value, raw, raw == value};
}

/// Convention for converting the single-photon yield bound into a gain
/// bound; exactly one of these reproduces the published reference rates,
/// and that one is the default (see README).
enum class Q111Convention {
    Literal,        ///< coefficient mu / (1 + mu^2), as printed
    TripleThermal,  ///< [mu / (1+mu)^2]^3: three thermal single-photon emissions
};

inline constexpr Q111Convention default_q111_convention =
    Q111Convention::Literal;

/// Single-photon gain lower bound under the chosen coefficient convention.
inline double single_photon_gain(double Y111_XL, double mu,
                                 Q111Convention convention) {
    if (Y111_XL < 0.0 || Y111_XL > 1.0)
        throw std::domain_error("single_photon_gain: yield must be in [0,1]");
    switch (convention) {
        case Q111Convention::Literal:
            return mu / (1.0 + mu * mu) * Y111_XL;
        default: {
            const double p1 = sources::thermal_pmf(mu, 1);
            return p1 * p1 * p1 * Y111_XL;
        }
    }
}

/// Bundle of the decoy-state single-photon estimates used by the key rate.
struct SinglePhotonEstimates {
    double Y111_XL;    ///< clamped yield lower bound
    double e111_BXU;   ///< clamped diagonal-basis error upper bound
    double e111_BZU;   ///< rectilinear-basis error bound (equal to e111_BXU)
    double Q111_XL;    ///< gain lower bound under the active convention
    double Y111_raw;   ///< pre-clamp yield estimate (diagnostics)
    double e111_raw;   ///< pre-clamp error estimate (diagnostics)
    bool yield_valid;  ///< raw yield lay in [0, 1]
    bool error_valid;  ///< raw error lay in [0, 0.5]
};

inline SinglePhotonEstimates estimate_single_photon(
    const GainTable& t, double mu, double omega,
    Q111Convention convention = default_q111_convention) {
    const BoundResult y = yield_lower_bound(t, mu, omega);
    const BoundResult e = error_upper_bound(t, y.value, omega);
    SinglePhotonEstimates est{};
    est.Y111_XL = y.value;
    est.e111_BXU = e.value;
    est.e111_BZU = e.value;
    est.Q111_XL = single_photon_gain(y.value, mu, convention);
    est.Y111_raw = y.raw;
    est.e111_raw = e.raw;
    est.yield_valid = y.valid;
    est.error_valid = e.valid;
    return est;
}

} // namespace mdiqss::decoy
