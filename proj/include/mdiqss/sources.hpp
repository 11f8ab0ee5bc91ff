#pragma once

// Photon-number statistics of the thermal down-conversion source and the
// heralding statistics of its trigger detector.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mdiqss::sources {

/// Thermal photon-number pmf: P(n) = mu^n / (1+mu)^(n+1).
inline double thermal_pmf(double mu, int n) {
    if (mu < 0.0 || n < 0) throw std::invalid_argument("thermal_pmf: bad arguments");
    if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
    // geometric form: (1-r) r^n with r = mu/(1+mu); stable for any mu, n
    double r = mu / (1.0 + mu);
    return std::pow(r, n) / (1.0 + mu);
}

/// Probability the trigger detector clicks on a k-photon pulse with
/// per-photon efficiency eta_D: 1 - (1-eta_D)^k (equals the binomial sum
/// over >= 1 detected photons).
inline double herald_click_prob(int k, double eta_D) {
    if (k < 0 || eta_D < 0.0 || eta_D > 1.0)
        throw std::invalid_argument("herald_click_prob: bad arguments");
    if (k == 0) return 0.0;
    return 1.0 - std::pow(1.0 - eta_D, k);
}

/// Per-slot herald probability P_h(1) = sum_k P(k) * click(k), summed with
/// adaptive truncation (residual tail bound < 1e-15 of the accumulated sum).
inline double herald_prob_per_slot(double mu, double eta_D) {
    if (mu < 0.0) throw std::invalid_argument("herald_prob_per_slot: mu < 0");
    if (mu == 0.0 || eta_D == 0.0) return 0.0;
    double r = mu / (1.0 + mu);
    double pmf = r / (1.0 + mu); // P(1)
    double acc = 0.0;
    for (int k = 1; k < 100000; ++k) {
        acc += pmf * herald_click_prob(k, eta_D);
        // remaining tail is bounded by the geometric remainder sum_{k'>k} P(k')
        double tail = pmf * r / (1.0 - r);
        if (tail < 1e-15 * acc && k >= 3) break;
        pmf *= r;
    }
    return acc;
}

/// Probability of at least one herald within j slots: 1 - (1-P_h1)^j, with
/// the j = 0 extension defined as 0.
inline double herald_prob_within(int j, double P_h1) {
    if (j < 0 || P_h1 < 0.0 || P_h1 > 1.0)
        throw std::invalid_argument("herald_prob_within: bad arguments");
    if (j == 0) return 0.0;
    return 1.0 - std::pow(1.0 - P_h1, j);
}

/// Thermal source with a precomputed, adaptively truncated pmf table.
/// Invariant: pmf values are nonnegative and sum to >= 1 - 1e-12.
struct ThermalSource {
    double mu = 0.0;
    int k_max = 0;               ///< last tabulated photon number
    std::vector<double> pmf;     ///< pmf[n] = P(n), n = 0..k_max
};

/// Builds a ThermalSource whose truncated pmf misses < 1e-15 of total mass.
inline ThermalSource make_thermal_source(double mu) {
    if (mu < 0.0) throw std::invalid_argument("make_thermal_source: mu < 0");
    ThermalSource src;
    src.mu = mu;
    if (mu == 0.0) {
        src.k_max = 0;
        src.pmf = {1.0};
        return src;
    }
    double r = mu / (1.0 + mu);
    double pmf = 1.0 / (1.0 + mu); // P(0)
    double acc = 0.0;
    for (int n = 0; n < 100000; ++n) {
        src.pmf.push_back(pmf);
        acc += pmf;
        double tail = pmf * r / (1.0 - r);
        if (tail < 1e-15 && n >= 2) break;
        pmf *= r;
    }
    src.k_max = static_cast<int>(src.pmf.size()) - 1;
    return src;
}

} // namespace mdiqss::sources
