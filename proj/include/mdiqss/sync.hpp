#pragma once

// Memory-assisted multi-source synchronization model: survival of stored
// heralded pulses through the channel and the storage loop, first/repeat
// herald delivery probabilities per slot, and the M-party synchronization
// success probability. Also the memory output-state fidelity.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mdiqss/params.hpp"
#include "mdiqss/sources.hpp"

namespace mdiqss::sync {

/// Per-slot herald probability used by the run-length factors of the
/// synchronization model when reproducing the published synchronization
/// curves (which are normalized per heralded arm, see keyrate::baseline_sync).
/// Calibrated once against the published reference value of the three-photon
/// synchronization probability at 200 km (T_QM = 0.98, N = 40, default
/// source parameters) and frozen.
inline constexpr double effective_herald_prob = 0.557284388424;

/// Parameters of the synchronization model for one storage window.
struct SyncModel {
    double P_h1;   ///< per-slot herald probability (run-length factors)
    double T_c;    ///< channel transmittance
    double T_QM;   ///< storage-loop survival per round trip
    int N;         ///< storage window length in slots
    double mu;     ///< source mean photon number
    double eta_D;  ///< trigger detector efficiency
};

/// Memory noise channel acting on a stored polarization qubit.
struct MemoryChannel {
    double e_q;  ///< memory error probability
    double e_b;  ///< noise-photon admixture probability
};

/// Builds the model at distance `L_km` from simulation parameters. The
/// default herald probability is the calibrated effective value; pass
/// sources::herald_prob_per_slot(p.mu, p.eta_D) for the physical process
/// (as the Monte Carlo validation does).
inline SyncModel make_sync_model(const params::SimParams& p, double L_km,
                                 double herald_prob = effective_herald_prob) {
    return SyncModel{herald_prob, params::channel_transmittance(p.alpha, L_km),
                     p.T_QM, p.N, p.mu, p.eta_D};
}

/// Binomial survival: probability that exactly `k_prime` of `k` photons that
/// entered storage at slot `j_prime` remain at readout in slot `j`, with
/// per-photon survival T_c * T_QM^(j - j_prime + 1).
inline double transit_survival(int k_prime, int k, int j, int j_prime,
                               double T_c, double T_QM) {
    if (k_prime < 0 || k < 0 || k_prime > k)
        throw std::domain_error("transit_survival: need 0 <= k' <= k");
    if (j_prime < 1 || j_prime > j)
        throw std::domain_error("transit_survival: need 1 <= j' <= j");
    const double s = T_c * std::pow(T_QM, j - j_prime + 1);
    double binom = 1.0;
    for (int i = 1; i <= k_prime; ++i)
        binom *= static_cast<double>(k - k_prime + i) / i;
    return binom * std::pow(s, k_prime) * std::pow(1.0 - s, k - k_prime);
}

namespace detail {

/// Joint probability that one pulse draw heralds AND the stored pulse
/// delivers exactly one photon when each photon survives independently with
/// probability `s`: sum_k P(k) * [1-(1-eta_D)^k] * k * s * (1-s)^(k-1) over
/// the thermal distribution. Adaptive truncation, tail bound < 1e-15 relative.
inline double herald_and_single(double mu, double eta_D, double s) {
    if (s <= 0.0 || mu <= 0.0) return 0.0;
    const double r = mu / (1.0 + mu);
    double pmf = mu / ((1.0 + mu) * (1.0 + mu));  // P(1)
    double acc = 0.0;
    for (int k = 1; k < 100000; ++k) {
        acc += pmf * sources::herald_click_prob(k, eta_D) * k * s *
               std::pow(1.0 - s, k - 1);
        // tail <= s * sum_{k'>k} P(k')*k' = s * P(k) * (k*mu + mu*(1+mu))
        const double tail = s * pmf * (k * mu + mu * (1.0 + mu));
        if (k >= 3 && tail <= 1e-15 * acc) break;
        pmf *= r;
    }
    return acc;
}

/// First- and repeat-herald delivery probabilities for readout slot j. Each
/// term carries the joint herald-and-delivery amplitude, so the run-length
/// weights sum to 1 - (1-P_h1)^j and P_l + P_e <= 1 holds structurally.
struct HeraldPair {
    double P_l;
    double P_e;
};

inline HeraldPair herald_pair(int j, const SyncModel& m) {
    if (j < 1 || j > m.N)
        throw std::domain_error("herald slot index out of [1, N]");
    const double q = 1.0 - m.P_h1;  // per-slot no-herald probability
    const double pl = std::pow(q, j - 1) *
                      herald_and_single(m.mu, m.eta_D, m.T_c * m.T_QM);
    double pe = 0.0;
    for (int jp = 1; jp <= j - 1; ++jp) {
        const double s = m.T_c * std::pow(m.T_QM, j - jp + 1);
        pe += std::pow(q, j - jp) * herald_and_single(m.mu, m.eta_D, s);
    }
    if (j > 1)
        pe += (1.0 - std::pow(q, j - 1)) *
              herald_and_single(m.mu, m.eta_D, m.T_c * m.T_QM);
    return HeraldPair{pl, pe};
}

} // namespace detail

/// P_l(1|j): no herald occurred in slots 1..j-1, the pulse drawn in slot j
/// heralds, and it delivers exactly one photon at a readout in that slot.
inline double first_herald_single(int j, const SyncModel& m) {
    return detail::herald_pair(j, m).P_l;
}

/// P_e(1|j): the arm was heralded before slot j (possibly re-heralded since)
/// and the stored pulse delivers exactly one photon at a readout in slot j.
inline double repeat_herald_single(int j, const SyncModel& m) {
    return detail::herald_pair(j, m).P_e;
}

/// Synchronization success probability for M parties within the window:
/// P_s(M) = P_l(1|1)^M + sum_{j=2..N} sum_{q=1..M} C(M,q) P_l^q P_e^(M-q).
inline double sync_success(int M, const SyncModel& m) {
    if (M < 1) throw std::domain_error("sync_success: need M >= 1");
    if (m.N < 1) throw std::domain_error("sync_success: need N >= 1");
    double total = 0.0;
    for (int j = 1; j <= m.N; ++j) {
        const detail::HeraldPair hp = detail::herald_pair(j, m);
        double binom = 1.0;  // C(M, q)
        double sum_j = 0.0;
        for (int q = 1; q <= M; ++q) {
            binom = binom * (M - q + 1) / q;
            sum_j += binom * std::pow(hp.P_l, q) * std::pow(hp.P_e, M - q);
        }
        total += sum_j;
    }
    return total;
}

/// Probability that the heralding/storage/readout process succeeds for three
/// arms within one window. With P_h1 = herald_prob_per_slot(mu, eta_D) this
/// is the true process probability that the Monte Carlo simulation estimates;
/// the per-slot terms already carry the herald factor, so no extra herald
/// weight is applied.
inline double heralded_triple_prob(const SyncModel& m) {
    return sync_success(3, m);
}

/// Weight of the undisturbed polarization component of the memory output
/// state: F = (1 - e_b)(1 - e_q) + e_b / 2; reduces to 1 - e_q at e_b = 0.
inline double memory_fidelity(const MemoryChannel& ch) {
    if (ch.e_q < 0.0 || ch.e_q > 1.0 || ch.e_b < 0.0 || ch.e_b > 1.0)
        throw std::domain_error("memory_fidelity: e_q, e_b must be in [0,1]");
    return (1.0 - ch.e_b) * (1.0 - ch.e_q) + ch.e_b / 2.0;
}

/// Per-arm detection efficiency eta = eta_d * Ps3^(1/3) (symmetric users).
inline double per_arm_efficiency(double eta_d, double Ps3) {
    if (eta_d < 0.0 || eta_d > 1.0)
        throw std::domain_error("per_arm_efficiency: eta_d must be in [0,1]");
    if (Ps3 < 0.0 || Ps3 > 1.0)
        throw std::domain_error("per_arm_efficiency: Ps3 must be in [0,1]");
    return eta_d * std::cbrt(Ps3);
}

} // namespace mdiqss::sync
