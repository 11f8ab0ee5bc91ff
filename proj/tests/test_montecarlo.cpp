// Tests for the Monte Carlo machinery: substream generator, thermal
// sampling, the synchronization trial simulation against the analytic model,
// the symbolic storage-loop replay, and the ideal sifting simulation against
// an exhaustive enumeration oracle.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mdiqss/montecarlo.hpp"

using namespace mdiqss::montecarlo;
using mdiqss::ghz::Polarization;
using mdiqss::params::SimParams;

TEST_CASE("substream generator is deterministic and per-trial independent", "[mc]") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    // distinct trials get distinct streams under the same seed
    std::set<std::uint64_t> firsts;
    for (std::uint64_t t = 0; t < 64; ++t)
        firsts.insert(trial_substream(1234, t).next());
    CHECK(firsts.size() == 64);
    // substream identity depends only on (seed, trial)
    CHECK(trial_substream(7, 5).next() == trial_substream(7, 5).next());
    CHECK(trial_substream(7, 5).next() != trial_substream(8, 5).next());
    // uniforms live in [0, 1)
    SplitMix64 u(99);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("thermal sampling reproduces the distribution", "[mc]") {
    const double mu = 0.05;
    const int n = 200000;
    SplitMix64 rng(2026);
    long long sum = 0;
    int zeros = 0, ones = 0;
    for (int i = 0; i < n; ++i) {
        const int k = sample_thermal(rng, mu);
        REQUIRE(k >= 0);
        sum += k;
        if (k == 0) ++zeros;
        if (k == 1) ++ones;
    }
    const double mean = static_cast<double>(sum) / n;
    const double se_mean = std::sqrt(mu * (1.0 + mu) / n);
    CHECK(std::abs(mean - mu) < 4.0 * se_mean);
    const double p0 = 1.0 / (1.0 + mu);
    CHECK(std::abs(static_cast<double>(zeros) / n - p0) <
          4.0 * std::sqrt(p0 * (1.0 - p0) / n));
    const double p1 = mdiqss::sources::thermal_pmf(mu, 1);
    CHECK(std::abs(static_cast<double>(ones) / n - p1) <
          4.0 * std::sqrt(p1 * (1.0 - p1) / n));
    // vacuum source never emits
    SplitMix64 rng2(7);
    for (int i = 0; i < 100; ++i) CHECK(sample_thermal(rng2, 0.0) == 0);
}

TEST_CASE("synchronization simulation determinism and degenerate sources", "[mc]") {
    McConfig cfg;
    cfg.seed = 555;
    cfg.trials = 20000;
    cfg.params.L_km = 0.0;
    McEstimate e1 = simulate_sync(cfg);
    McEstimate e2 = simulate_sync(cfg);
    CHECK(e1.successes == e2.successes);
    CHECK(e1.frequency == e2.frequency);
    CHECK(e1.trials == cfg.trials);

    // a heralding detector that never fires: nothing ever loads
    McConfig deaf = cfg;
    deaf.params.eta_D = 0.0;
    CHECK(simulate_sync(deaf).successes == 0);
    // a source that never emits: nothing ever clicks
    McConfig vac = cfg;
    vac.params.mu = 0.0;
    vac.params.omega = 0.0;
    CHECK(simulate_sync(vac).successes == 0);

    // single-photon source with lossless everything succeeds every trial
    McConfig perfect;
    perfect.seed = 9;
    perfect.trials = 5000;
    perfect.params.alpha = 0.0;
    perfect.params.T_QM = 1.0;
    perfect.params.eta_D = 1.0;
    McEstimate ideal =
        simulate_sync_with(perfect, [](SplitMix64&) { return 1; });
    CHECK(ideal.successes == perfect.trials);
    CHECK(ideal.frequency == 1.0);
    CHECK(ideal.std_error == 0.0);

    // minimal but well-formed run
    McConfig one = cfg;
    one.trials = 1;
    McEstimate e_one = simulate_sync(one);
    CHECK(e_one.trials == 1);
    CHECK((e_one.frequency == 0.0 || e_one.frequency == 1.0));
    McConfig zero = cfg;
    zero.trials = 0;
    CHECK_THROWS_AS(simulate_sync(zero), std::domain_error);
}

TEST_CASE("conservative z-score", "[mc]") {
    CHECK(conservative_z(0.5, 0.5, 100) == 0.0);
    // empty count against a small prediction: |z| ~ sqrt(n p)
    const double p = 2e-6, n = 1e6;
    const double z = conservative_z(0.0, p, n);
    CHECK_THAT(z, Catch::Matchers::WithinRel(-p / std::sqrt(p * (1.0 - p) / n), 1e-12));
    // the standard error is taken at the larger probability
    const double z2 = conservative_z(3e-6, 1e-6, n);
    CHECK_THAT(z2, Catch::Matchers::WithinRel(
                       2e-6 / std::sqrt(3e-6 * (1.0 - 3e-6) / n), 1e-12));
    CHECK(std::isinf(conservative_z(1.0, 0.5, 100)));
}

TEST_CASE("validation grid layout", "[mc]") {
    const auto& grid = validation_grid();
    REQUIRE(grid.size() == 18);
    CHECK(grid[0].L_km == 0.0);
    CHECK(grid[0].N == 1);
    CHECK(grid[0].T_QM == 0.9);
    CHECK(grid[17].L_km == 25.0);
    CHECK(grid[17].N == 5);
    CHECK(grid[17].T_QM == 0.98);
    std::set<std::tuple<double, int, double>> unique;
    for (const GridPoint& g : grid) unique.insert({g.L_km, g.N, g.T_QM});
    CHECK(unique.size() == 18);
}

TEST_CASE("analytic process probability wiring", "[mc]") {
    SimParams p;
    p.L_km = 10.0;
    p.N = 5;
    const double ph1 = mdiqss::sources::herald_prob_per_slot(p.mu, p.eta_D);
    const double expected = mdiqss::sync::heralded_triple_prob(
        mdiqss::sync::make_sync_model(p, p.L_km, ph1));
    CHECK_THAT(analytic_sync_prob(p), Catch::Matchers::WithinRel(expected, 1e-15));
}

TEST_CASE("simulation agrees with the analytic model at spot points", "[mc]") {
    // Full-grid agreement is exercised by the acceptance run; here two grid
    // points keep the unit suite fast while still checking the pipeline.
    SimParams base;
    ValidationRow r1 = validate_grid_point(base, GridPoint{10.0, 5, 0.98},
                                           20260815, 10000000);
    INFO("L=10 N=5: analytic " << r1.analytic << " estimate " << r1.estimate
                               << " z " << r1.z);
    CHECK(r1.analytic > 0.0);
    CHECK(std::abs(r1.z) <= 3.0);
    CHECK(r1.pass);

    ValidationRow r2 =
        validate_grid_point(base, GridPoint{0.0, 3, 0.9}, 20260815, 10000000);
    INFO("L=0 N=3: analytic " << r2.analytic << " estimate " << r2.estimate
                              << " z " << r2.z);
    CHECK(std::abs(r2.z) <= 3.0);
}

TEST_CASE("storage loop flip law", "[mc]") {
    for (Polarization in : {Polarization::H, Polarization::V}) {
        for (int rounds = 1; rounds <= 20; ++rounds) {
            LoopPhoton out =
                loop_trace(LoopPhoton{in, LoopPosition::a1_in, 0}, rounds);
            CHECK(out.position == LoopPosition::a1_out);
            CHECK(out.polarization ==
                  (in == Polarization::H ? Polarization::V : Polarization::H));
            CHECK(out.round_trips == rounds);
        }
    }
    // two storage periods with a half-wave flip between recover the input
    for (Polarization in : {Polarization::H, Polarization::V}) {
        LoopPhoton first = loop_trace(LoopPhoton{in, LoopPosition::a1_in, 0}, 3);
        Polarization re_in = first.polarization == Polarization::H
                                 ? Polarization::V
                                 : Polarization::H;
        LoopPhoton second = loop_trace(
            LoopPhoton{re_in, LoopPosition::a1_in, first.round_trips}, 2);
        Polarization final_pol = second.polarization == Polarization::H
                                     ? Polarization::V
                                     : Polarization::H;
        CHECK(final_pol == in);
        CHECK(second.round_trips == 5);
    }
    CHECK_THROWS_AS(loop_trace(LoopPhoton{Polarization::H, LoopPosition::a1_in, 0}, 0),
                    std::domain_error);
    CHECK_THROWS_AS(loop_trace(LoopPhoton{Polarization::H, LoopPosition::a2, 0}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        loop_trace(LoopPhoton{Polarization::Plus, LoopPosition::a1_in, 0}, 1),
        std::invalid_argument);
}

TEST_CASE("storage loop traversal paths", "[mc]") {
    using P = Polarization;
    using L = LoopPosition;
    auto trace = [](P in, int rounds) {
        std::vector<LoopStep> path;
        loop_trace(LoopPhoton{in, L::a1_in, 0}, rounds, &path);
        return path;
    };
    auto expect = [](const std::vector<LoopStep>& got,
                     const std::vector<std::pair<P, L>>& want) {
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            INFO("step " << i);
            CHECK(got[i].polarization == want[i].first);
            CHECK(got[i].position == want[i].second);
        }
    };
    // one round trip, entering horizontally: through the modulator segment
    // (off), down to the mirror arm (flip), back through the modulator
    // segment (off on the final pass), out the reflecting port
    expect(trace(P::H, 1),
           {{P::H, L::a2},
            {P::H, L::a3},
            {P::H, L::a4},
            {P::V, L::a4},
            {P::V, L::a2},
            {P::V, L::a3},
            {P::V, L::a1_out}});
    // one round trip, entering vertically: mirrored traversal
    expect(trace(P::V, 1),
           {{P::V, L::a3},
            {P::V, L::a2},
            {P::V, L::a4},
            {P::H, L::a4},
            {P::H, L::a3},
            {P::H, L::a2},
            {P::H, L::a1_out}});
    // two round trips: the interior modulator pass is active and retains the
    // photon for one more cycle
    expect(trace(P::H, 2),
           {{P::H, L::a2},
            {P::H, L::a3},
            {P::H, L::a4},
            {P::V, L::a4},
            {P::V, L::a2},
            {P::H, L::a3},
            {P::H, L::a4},
            {P::V, L::a4},
            {P::V, L::a2},
            {P::V, L::a3},
            {P::V, L::a1_out}});
    expect(trace(P::V, 2),
           {{P::V, L::a3},
            {P::V, L::a2},
            {P::V, L::a4},
            {P::H, L::a4},
            {P::H, L::a3},
            {P::V, L::a2},
            {P::V, L::a4},
            {P::H, L::a4},
            {P::H, L::a3},
            {P::H, L::a2},
            {P::H, L::a1_out}});
    // paths grow linearly with the round count
    CHECK(trace(P::H, 7).size() == 4u * 7 + 3);
}

TEST_CASE("ideal sifting simulation matches the enumeration oracle", "[mc]") {
    McConfig cfg;
    cfg.seed = 808;
    cfg.trials = 1000000;
    SiftStats st = simulate_sifting(cfg);

    // bookkeeping identities
    CHECK(st.trials == cfg.trials);
    CHECK(st.z_rounds + st.x_rounds + st.discards == st.trials);
    CHECK(st.z_checks <= st.z_rounds);

    // noiseless single photons: checks never fail, key parity always holds
    CHECK(st.z_check_failures == 0);
    CHECK(st.x_parity_ok == st.x_events);
    // diagonal rounds always produce an identifiable outcome
    CHECK(st.x_events == st.x_rounds);

    // exhaustive oracle: average success probability over the 64 equally
    // likely basis/bit combinations, from the projection probabilities
    double expected = 0.0;
    for (unsigned bb = 0; bb < 64; ++bb) {
        const bool z0 = bb & 1, z1 = bb & 2, z2 = bb & 4;
        const bool b0 = bb & 8, b1 = bb & 16, b2 = bb & 32;
        if (z0 != z1 || z1 != z2) continue;  // mixed bases are discarded
        std::array<Polarization, 3> states;
        const std::array<bool, 3> one{b0, b1, b2};
        for (int u = 0; u < 3; ++u)
            states[u] = z0 ? (one[u] ? Polarization::V : Polarization::H)
                           : (one[u] ? Polarization::Minus : Polarization::Plus);
        auto pr = mdiqss::ghz::ideal_projection_probs(states);
        expected += (pr.phi_plus + pr.phi_minus) / 64.0;
    }
    CHECK_THAT(expected, Catch::Matchers::WithinRel(10.0 / 64.0, 1e-12));
    const double observed =
        static_cast<double>(st.z_checks + st.x_events) / st.trials;
    const double se = std::sqrt(expected * (1.0 - expected) / st.trials);
    CHECK(std::abs(observed - expected) < 4.0 * se);

    // successful all-rectilinear rounds require aligned bits: 1/4 of them
    const double check_frac =
        static_cast<double>(st.z_checks) / static_cast<double>(st.z_rounds);
    const double se_check =
        std::sqrt(0.25 * 0.75 / static_cast<double>(st.z_rounds));
    CHECK(std::abs(check_frac - 0.25) < 4.0 * se_check);

    // determinism and seed sensitivity
    SiftStats again = simulate_sifting(cfg);
    CHECK(again.z_checks == st.z_checks);
    CHECK(again.x_events == st.x_events);
    CHECK(again.discards == st.discards);
    McConfig other = cfg;
    other.seed = 809;
    SiftStats diff = simulate_sifting(other);
    CHECK((diff.x_events != st.x_events || diff.z_checks != st.z_checks ||
           diff.discards != st.discards));

    McConfig tiny = cfg;
    tiny.trials = 1;
    SiftStats one = simulate_sifting(tiny);
    CHECK(one.trials == 1);
    CHECK(one.z_rounds + one.x_rounds + one.discards == 1);
    McConfig zero = cfg;
    zero.trials = 0;
    CHECK_THROWS_AS(simulate_sifting(zero), std::domain_error);
}
