#pragma once

// Independent discrete-event oracle: slot-level simulation of
// heralding/storage/readout, symbolic polarization trace of the storage
// loop, and ideal protocol sifting statistics.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mdiqss/ghz.hpp"
#include "mdiqss/params.hpp"
#include "mdiqss/sources.hpp"
#include "mdiqss/sync.hpp"

namespace mdiqss::montecarlo {

/// Counter-based 64-bit generator (splitmix64 finalizer). Cheap to seed, so
/// every trial owns an independent substream derived from (seed, trial):
/// changing the trial count never reshuffles earlier trials.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return (next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

inline SplitMix64 trial_substream(std::uint64_t seed, std::uint64_t trial) {
    return SplitMix64(seed ^ (0x9E3779B97F4A7C15ULL * (trial + 1)));
}

/// Draws a photon number from the thermal distribution
/// P(n) = mu^n / (1+mu)^(n+1) by inverting the geometric CDF. The common
/// n = 0 case is decided without transcendental calls.
inline int sample_thermal(SplitMix64& rng, double mu) {
    if (mu <= 0.0) return 0;
    const double r = mu / (1.0 + mu);
    const double u = rng.uniform01();
    if (u < 1.0 - r) return 0;
    return static_cast<int>(std::floor(std::log1p(-u) / std::log(r)));
}

struct McConfig {
    std::uint64_t seed = 1;
    std::uint64_t trials = 1;
    params::SimParams params;
};

struct McEstimate {
    double frequency;
    double std_error;
    std::uint64_t successes;
    std::uint64_t trials;
};

namespace detail {

/// One synchronization attempt: three arms herald within a window of N
/// slots; a herald loads the whole drawn pulse (replacing any stored pulse);
/// when the last arm loads, all memories are read out in that same slot
/// (readout precedes any same-slot replacement) and every stored photon
/// independently survives the loop and channel. Success means every arm
/// delivers exactly one photon.
template <class Source>
bool sync_trial(SplitMix64& rng, const params::SimParams& p, double T_c,
                Source&& source) {
    struct Arm {
        bool loaded = false;
        int photons = 0;
        int entry_slot = 0;
    };
    std::array<Arm, 3> arms{};
    for (int j = 1; j <= p.N; ++j) {
        std::array<int, 3> drawn{};
        std::array<bool, 3> clicked{};
        std::array<bool, 3> was_loaded{};
        for (int a = 0; a < 3; ++a) {
            was_loaded[a] = arms[a].loaded;
            drawn[a] = source(rng);
            clicked[a] = drawn[a] > 0 &&
                         rng.uniform01() <
                             sources::herald_click_prob(drawn[a], p.eta_D);
        }
        for (int a = 0; a < 3; ++a)
            if (clicked[a] && !was_loaded[a])
                arms[a] = Arm{true, drawn[a], j};
        if (arms[0].loaded && arms[1].loaded && arms[2].loaded) {
            bool all_single = true;
            for (int a = 0; a < 3; ++a) {
                const double s =
                    T_c * std::pow(p.T_QM, j - arms[a].entry_slot + 1);
                int survivors = 0;
                for (int ph = 0; ph < arms[a].photons; ++ph)
                    if (rng.uniform01() < s) ++survivors;
                if (survivors != 1) all_single = false;
            }
            return all_single;
        }
        for (int a = 0; a < 3; ++a)
            if (clicked[a] && was_loaded[a]) arms[a] = Arm{true, drawn[a], j};
    }
    return false;
}

} // namespace detail

/// Estimates the three-arm synchronization success probability with a
/// caller-supplied per-slot photon-number source.
template <class Source>
McEstimate simulate_sync_with(const McConfig& cfg, Source&& source) {
    if (cfg.trials < 1)
        throw std::domain_error("simulate_sync: need trials >= 1");
    const double T_c =
        params::channel_transmittance(cfg.params.alpha, cfg.params.L_km);
    std::uint64_t successes = 0;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        SplitMix64 rng = trial_substream(cfg.seed, t);
        if (detail::sync_trial(rng, cfg.params, T_c, source)) ++successes;
    }
    const double n = static_cast<double>(cfg.trials);
    const double freq = successes / n;
    return McEstimate{freq, std::sqrt(freq * (1.0 - freq) / n), successes,
                      cfg.trials};
}

/// Same with the thermal photon-number source given by params.mu.
inline McEstimate simulate_sync(const McConfig& cfg) {
    const double mu = cfg.params.mu;
    return simulate_sync_with(
        cfg, [mu](SplitMix64& rng) { return sample_thermal(rng, mu); });
}

enum class LoopPosition { a1_in, a2, a3, a4, a1_out };

/// A photon inside (or at a port of) the storage loop.
struct LoopPhoton {
    ghz::Polarization polarization;
    LoopPosition position;
    int round_trips = 0;
};

struct LoopStep {
    ghz::Polarization polarization;
    LoopPosition position;
};

/// Symbolic replay of the storage loop for `rounds` round trips: the
/// four-port polarizing splitter routes H along the straight axes
/// (a1-a2, a3-a4) and V along the reflecting pairs (a1-a3, a2-a4); the
/// modulator segment joins a2 and a3 and flips polarization only while on
/// (all interior passes); the wave-plate mirror at a4 always flips. The exit
/// polarization is the flip of the entry polarization for every round count.
/// When `path` is given, every intermediate (polarization, mode) pair is
/// appended in traversal order.
inline LoopPhoton loop_trace(const LoopPhoton& input, int rounds,
                             std::vector<LoopStep>* path = nullptr) {
    if (rounds < 1) throw std::domain_error("loop_trace: need rounds >= 1");
    if (input.position != LoopPosition::a1_in)
        throw std::invalid_argument("loop_trace: photon must enter at a1");
    if (input.polarization != ghz::Polarization::H &&
        input.polarization != ghz::Polarization::V)
        throw std::invalid_argument("loop_trace: loop photons are H or V");

    using ghz::Polarization;
    auto flip = [](Polarization p) {
        return p == Polarization::H ? Polarization::V : Polarization::H;
    };
    const int eom_passes_total = rounds + 1;
    int eom_passes = 0;
    Polarization pol = input.polarization;
    LoopPosition pos =
        pol == Polarization::H ? LoopPosition::a2 : LoopPosition::a3;
    bool toward_splitter = false;
    auto record = [&]() {
        if (path) path->push_back(LoopStep{pol, pos});
    };
    record();
    const int max_hops = 6 * rounds + 12;
    for (int hop = 0; hop < max_hops; ++hop) {
        if (!toward_splitter) {
            // traverse the arm's element, then head back to the splitter
            if (pos == LoopPosition::a2 || pos == LoopPosition::a3) {
                ++eom_passes;
                const bool eom_on =
                    eom_passes > 1 && eom_passes < eom_passes_total;
                if (eom_on) pol = flip(pol);
                pos = pos == LoopPosition::a2 ? LoopPosition::a3
                                              : LoopPosition::a2;
            } else {  // a4: wave-plate double pass and mirror
                pol = flip(pol);
            }
            toward_splitter = true;
            record();
            continue;
        }
        // splitter hop
        if (pos == LoopPosition::a2) {
            if (pol == Polarization::H) {
                pos = LoopPosition::a1_out;
            } else {
                pos = LoopPosition::a4;
                toward_splitter = false;
            }
        } else if (pos == LoopPosition::a3) {
            if (pol == Polarization::H) {
                pos = LoopPosition::a4;
                toward_splitter = false;
            } else {
                pos = LoopPosition::a1_out;
            }
        } else if (pos == LoopPosition::a4) {
            pos = pol == Polarization::H ? LoopPosition::a3 : LoopPosition::a2;
            toward_splitter = false;
        } else {
            throw std::logic_error("loop_trace: inconsistent routing");
        }
        record();
        if (pos == LoopPosition::a1_out) {
            if (eom_passes != eom_passes_total || pol != flip(input.polarization))
                throw std::logic_error("loop_trace: inconsistent routing");
            return LoopPhoton{pol, pos, input.round_trips + rounds};
        }
    }
    throw std::logic_error("loop_trace: inconsistent routing");
}

/// One point of the fixed validation grid for the analytic-versus-simulated
/// synchronization comparison.
struct GridPoint {
    double L_km;
    int N;
    double T_QM;
};

/// The fixed short-distance validation grid:
/// L in {0, 10, 25} km x N in {1, 3, 5} x T_QM in {0.9, 0.98}.
inline const std::array<GridPoint, 18>& validation_grid() {
    static const std::array<GridPoint, 18> grid = [] {
        std::array<GridPoint, 18> g{};
        int i = 0;
        for (double L : {0.0, 10.0, 25.0})
            for (int N : {1, 3, 5})
                for (double T : {0.9, 0.98}) g[i++] = GridPoint{L, N, T};
        return g;
    }();
    return grid;
}

/// Analytic probability of the physical process the simulation estimates:
/// the synchronization model evaluated at the per-slot herald probability of
/// the real source (the per-slot terms already carry the herald factor).
inline double analytic_sync_prob(const params::SimParams& p) {
    const double ph1 = sources::herald_prob_per_slot(p.mu, p.eta_D);
    return sync::heralded_triple_prob(
        sync::make_sync_model(p, p.L_km, ph1));
}

/// Result of comparing the simulation against the analytic model at one
/// grid point.
struct ValidationRow {
    GridPoint point;
    std::uint64_t trials;
    double analytic;
    double estimate;
    double std_error;
    double z;
    bool pass;
};

/// Conservative z-score: the binomial standard error is evaluated at the
/// larger of the estimated and predicted probabilities, so that near-empty
/// counts are not over-trusted.
inline double conservative_z(double estimate, double predicted,
                             double trials) {
    if (estimate == predicted) return 0.0;
    const double p_se = std::max(estimate, predicted);
    const double se = std::sqrt(p_se * (1.0 - p_se) / trials);
    return se > 0.0 ? (estimate - predicted) / se
                    : std::numeric_limits<double>::infinity();
}

/// Runs the simulation at one grid point and compares it with the analytic
/// model at the |z| <= 3 level.
inline ValidationRow validate_grid_point(const params::SimParams& base,
                                         const GridPoint& gp,
                                         std::uint64_t seed,
                                         std::uint64_t trials) {
    params::SimParams p = base;
    p.L_km = gp.L_km;
    p.N = gp.N;
    p.T_QM = gp.T_QM;
    const double analytic = analytic_sync_prob(p);
    const McEstimate est = simulate_sync(McConfig{seed, trials, p});
    ValidationRow row{};
    row.point = gp;
    row.trials = trials;
    row.analytic = analytic;
    row.estimate = est.frequency;
    row.std_error = est.std_error;
    row.z = conservative_z(est.frequency, analytic,
                           static_cast<double>(trials));
    row.pass = std::abs(row.z) <= 3.0;
    return row;
}

/// Counters from the ideal sifting simulation.
struct SiftStats {
    std::uint64_t trials = 0;
    std::uint64_t discards = 0;          ///< mixed-basis rounds
    std::uint64_t z_rounds = 0;          ///< all-rectilinear rounds
    std::uint64_t z_checks = 0;          ///< ... with successful measurement
    std::uint64_t z_check_failures = 0;  ///< ... whose bits disagreed
    std::uint64_t x_rounds = 0;          ///< all-diagonal rounds
    std::uint64_t x_events = 0;          ///< ... with successful measurement
    std::uint64_t x_parity_ok = 0;       ///< ... satisfying the key parity
};

/// Ideal single-photon protocol rounds: random bases and bits for all three
/// users, measurement outcomes sampled from the ideal projection
/// probabilities, then the sifting rule applied.
inline SiftStats simulate_sifting(const McConfig& cfg) {
    if (cfg.trials < 1)
        throw std::domain_error("simulate_sifting: need trials >= 1");
    using ghz::Basis;
    using ghz::Polarization;
    SiftStats st;
    st.trials = cfg.trials;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        SplitMix64 rng = trial_substream(cfg.seed, t);
        std::array<Basis, 3> bases{};
        std::array<int, 3> bits{};
        std::array<Polarization, 3> states{};
        for (int u = 0; u < 3; ++u) {
            bases[u] = rng.uniform01() < 0.5 ? Basis::Z : Basis::X;
            bits[u] = rng.uniform01() < 0.5 ? 0 : 1;
            if (bases[u] == Basis::Z)
                states[u] = bits[u] == 0 ? Polarization::H : Polarization::V;
            else
                states[u] =
                    bits[u] == 0 ? Polarization::Plus : Polarization::Minus;
        }
        const bool all_z = bases[0] == Basis::Z && bases[1] == Basis::Z &&
                           bases[2] == Basis::Z;
        const bool all_x = bases[0] == Basis::X && bases[1] == Basis::X &&
                           bases[2] == Basis::X;
        if (!all_z && !all_x) {
            ++st.discards;
            continue;
        }
        const ghz::ProjectionProbs probs = ghz::ideal_projection_probs(states);
        const double u = rng.uniform01();
        ghz::GhzOutcome outcome = ghz::GhzOutcome::Failure;
        if (u < probs.phi_plus)
            outcome = ghz::GhzOutcome::PhiPlus;
        else if (u < probs.phi_plus + probs.phi_minus)
            outcome = ghz::GhzOutcome::PhiMinus;
        if (all_z) ++st.z_rounds;
        if (all_x) ++st.x_rounds;
        if (outcome == ghz::GhzOutcome::Failure) continue;
        const ghz::SiftResult res = ghz::sift(outcome, bases, bits);
        if (res.kind == ghz::SiftKind::Check) {
            ++st.z_checks;
            if (!res.ok) ++st.z_check_failures;
        } else if (res.kind == ghz::SiftKind::RawKey) {
            ++st.x_events;
            if (res.ok) ++st.x_parity_ok;
        }
    }
    return st;
}

} // namespace mdiqss::montecarlo
