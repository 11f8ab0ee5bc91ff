#pragma once

// GHZ-measurement logic: detector-click classification, ideal projection
// probabilities derived from the state expansions (not from a lookup table),
// sifting rules, and the analytic click/gain/QBER model with phase
// post-selection.

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "mdiqss/quadrature.hpp"

namespace mdiqss::ghz {

enum class Polarization { H, V, Plus, Minus };

enum class Basis { Z, X };

/// Six detector flags, one per detector (two per output station).
struct ClickPattern {
    bool d1h = false, d1v = false;
    bool d2h = false, d2v = false;
    bool d3h = false, d3v = false;
};

enum class GhzOutcome { PhiPlus, PhiMinus, Failure };

/// Mean photon numbers of the three pulses meeting at the measurement node.
struct IntensityTriple {
    double mu_a, mu_b, mu_c;
};

/// Gains and error rate for one intensity triple.
struct GainResult {
    double Q_RX;  ///< gain of the "right" click patterns
    double Q_EX;  ///< gain of the "error" click patterns
    double Q_X;   ///< total gain, Q_RX + Q_EX
    double E_X;   ///< error rate; 0 when Q_X == 0
};

/// Maps a click pattern to the identified GHZ state: success needs exactly
/// one click per station pair; an even number of V clicks identifies
/// PhiPlus, an odd number PhiMinus.
inline GhzOutcome classify_clicks(const ClickPattern& p) {
    const bool one1 = p.d1h != p.d1v;
    const bool one2 = p.d2h != p.d2v;
    const bool one3 = p.d3h != p.d3v;
    if (!(one1 && one2 && one3)) return GhzOutcome::Failure;
    const int v_count = (p.d1v ? 1 : 0) + (p.d2v ? 1 : 0) + (p.d3v ? 1 : 0);
    return (v_count % 2 == 0) ? GhzOutcome::PhiPlus : GhzOutcome::PhiMinus;
}

/// Projection probabilities of a three-photon product state onto the two
/// distinguishable GHZ states.
struct ProjectionProbs {
    double phi_plus;
    double phi_minus;
};

inline Basis basis_of(Polarization p) {
    return (p == Polarization::H || p == Polarization::V) ? Basis::Z : Basis::X;
}

/// Computes |<Phi+-|abc>|^2 by amplitude projection. All three inputs must
/// share a basis. For diagonal-basis inputs the probabilities are
/// renormalized over the successful outcomes (the measurement identifies one
/// of the two states with certainty there); rectilinear-basis inputs keep
/// their raw projection weights.
inline ProjectionProbs ideal_projection_probs(
    const std::array<Polarization, 3>& inputs) {
    const Basis b = basis_of(inputs[0]);
    for (Polarization p : inputs)
        if (basis_of(p) != b)
            throw std::invalid_argument(
                "ideal_projection_probs: mixed-basis input is sifted out");
    // amplitude vectors over (H, V)
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    auto ampvec = [&](Polarization p) -> std::array<double, 2> {
        switch (p) {
            case Polarization::H: return {1.0, 0.0};
            case Polarization::V: return {0.0, 1.0};
            case Polarization::Plus: return {inv_sqrt2, inv_sqrt2};
            default: return {inv_sqrt2, -inv_sqrt2};
        }
    };
    const auto va = ampvec(inputs[0]);
    const auto vb = ampvec(inputs[1]);
    const auto vc = ampvec(inputs[2]);
    const double c_hhh = va[0] * vb[0] * vc[0];
    const double c_vvv = va[1] * vb[1] * vc[1];
    const double amp_plus = (c_hhh + c_vvv) * inv_sqrt2;
    const double amp_minus = (c_hhh - c_vvv) * inv_sqrt2;
    ProjectionProbs probs{amp_plus * amp_plus, amp_minus * amp_minus};
    if (b == Basis::X) {
        const double total = probs.phi_plus + probs.phi_minus;
        if (total > 0.0) {
            probs.phi_plus /= total;
            probs.phi_minus /= total;
        }
    }
    return probs;
}

enum class SiftKind { Check, RawKey, Discard };

struct SiftResult {
    SiftKind kind;
    bool ok;  ///< check passed / key parity satisfied; false for Discard
};

/// Applies the post-measurement sifting rule to a successful outcome:
/// all-rectilinear rounds are security checks (all bits must agree),
/// all-diagonal rounds are raw-key events (first bit equals the XOR of the
/// other two, inverted for PhiMinus), mixed-basis rounds are discarded.
inline SiftResult sift(GhzOutcome outcome, const std::array<Basis, 3>& bases,
                       const std::array<int, 3>& bits) {
    if (outcome == GhzOutcome::Failure)
        throw std::invalid_argument("sift: outcome must be a success");
    for (int bit : bits)
        if (bit != 0 && bit != 1)
            throw std::invalid_argument("sift: bits must be 0 or 1");
    const bool all_z = bases[0] == Basis::Z && bases[1] == Basis::Z &&
                       bases[2] == Basis::Z;
    const bool all_x = bases[0] == Basis::X && bases[1] == Basis::X &&
                       bases[2] == Basis::X;
    if (all_z) {
        const bool pass = bits[0] == bits[1] && bits[1] == bits[2];
        return SiftResult{SiftKind::Check, pass};
    }
    if (all_x) {
        int parity = bits[1] ^ bits[2];
        if (outcome == GhzOutcome::PhiMinus) parity ^= 1;
        return SiftResult{SiftKind::RawKey, bits[0] == parity};
    }
    return SiftResult{SiftKind::Discard, false};
}

/// Click probabilities of the six detectors for one phase pair.
struct ClickProbs {
    double f1h, f1v;
    double f2h, f2v;
    double f3h, f3v;
};

/// Analytic single-pair click model: station 1 interferes arms (a, b) with
/// relative phase phi, station 2 arms (b, c) with varphi - phi, station 3
/// arms (a, c) with varphi. All arms share the efficiency eta; p_d is the
/// dark-count probability per detector.
inline ClickProbs click_probs(double phi, double varphi,
                              const IntensityTriple& mu, double eta,
                              double p_d) {
    if (eta < 0.0 || eta > 1.0)
        throw std::domain_error("click_probs: eta must be in [0,1]");
    if (mu.mu_a < 0.0 || mu.mu_b < 0.0 || mu.mu_c < 0.0)
        throw std::domain_error("click_probs: intensities must be >= 0");
    const double la = mu.mu_a * eta;
    const double lb = mu.mu_b * eta;
    const double lc = mu.mu_c * eta;
    auto pair_click = [p_d](double l1, double l2, double cos_arg,
                            double sign) {
        const double expo =
            (l1 + l2) / 4.0 + sign * (std::sqrt(l1 * l2) / 2.0) * cos_arg;
        return 1.0 - (1.0 - p_d) * std::exp(-expo);
    };
    ClickProbs f{};
    f.f1h = pair_click(la, lb, std::cos(phi), +1.0);
    f.f1v = pair_click(la, lb, std::cos(phi), -1.0);
    f.f2h = pair_click(lb, lc, std::cos(varphi - phi), +1.0);
    f.f2v = pair_click(lb, lc, std::cos(varphi - phi), -1.0);
    f.f3h = pair_click(la, lc, std::cos(varphi), +1.0);
    f.f3v = pair_click(la, lc, std::cos(varphi), -1.0);
    return f;
}

namespace detail {

/// Right/error coincidence probabilities at one phase pair: the four
/// exactly-one-click-per-pair patterns identifying each state.
inline std::array<double, 2> coincidence_integrand(const ClickProbs& f) {
    auto only = [](double hit1, double miss1, double hit2, double miss2,
                   double hit3, double miss3) {
        return hit1 * (1.0 - miss1) * hit2 * (1.0 - miss2) * hit3 *
               (1.0 - miss3);
    };
    const double right = only(f.f1h, f.f1v, f.f2h, f.f2v, f.f3h, f.f3v) +
                         only(f.f1h, f.f1v, f.f2v, f.f2h, f.f3v, f.f3h) +
                         only(f.f1v, f.f1h, f.f2h, f.f2v, f.f3v, f.f3h) +
                         only(f.f1v, f.f1h, f.f2v, f.f2h, f.f3h, f.f3v);
    const double error = only(f.f1h, f.f1v, f.f2h, f.f2v, f.f3v, f.f3h) +
                         only(f.f1h, f.f1v, f.f2v, f.f2h, f.f3h, f.f3v) +
                         only(f.f1v, f.f1h, f.f2h, f.f2v, f.f3h, f.f3v) +
                         only(f.f1v, f.f1h, f.f2v, f.f2h, f.f3v, f.f3h) ;
    return {right, error};
}

} // namespace detail

/// Phase-post-selected gains: (K/pi^2) times the integrals of the right- and
/// error-pattern coincidence probabilities over the accepted phase cell
/// [0, pi/K]^2, via certified adaptive quadrature (relative 1e-9).
inline std::pair<double, double> gain_integrals(const IntensityTriple& mu,
                                                double eta, double p_d,
                                                int K) {
    if (K < 1) throw std::domain_error("gain_integrals: need K >= 1");
    const double cell = M_PI / K;
    auto f = [&](double phi, double varphi) {
        return detail::coincidence_integrand(
            click_probs(phi, varphi, mu, eta, p_d));
    };
    std::array<double, 2> integral =
        quadrature::adaptive_integrate_2d(f, cell, cell);
    const double pref = K / (M_PI * M_PI);
    return {pref * integral[0], pref * integral[1]};
}

/// Total gain and error rate for one intensity triple: misidentification
/// mixes the right/error gains through the intrinsic flip error e_d and the
/// memory fidelity F.
inline GainResult gain_and_qber(const IntensityTriple& mu, double eta,
                                double p_d, int K, double e_d, double F) {
    if (F < 0.0 || F > 1.0)
        throw std::domain_error("gain_and_qber: F must be in [0,1]");
    if (e_d < 0.0 || e_d > 1.0)
        throw std::domain_error("gain_and_qber: e_d must be in [0,1]");
    const auto [q_r, q_e] = gain_integrals(mu, eta, p_d, K);
    GainResult g{};
    g.Q_RX = q_r;
    g.Q_EX = q_e;
    g.Q_X = q_r + q_e;
    g.E_X = 0.0;
    if (g.Q_X > 0.0) {
        const double keep = (1.0 - e_d) * F;
        g.E_X = ((1.0 - keep) * q_r + keep * q_e) / g.Q_X;
    }
    return g;
}

} // namespace mdiqss::ghz
