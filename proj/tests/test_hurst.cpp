#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "roughvol/errors.hpp"
#include "roughvol/hurst.hpp"
#include "roughvol/rng.hpp"
#include "roughvol/simulate.hpp"

using namespace roughvol;

namespace {

PriceSeries constant_series(std::size_t n, double delta) {
    PriceSeries s;
    s.delta = delta;
    s.samples.assign(n + 1, std::log(100.0));
    return s;
}

// Price series whose k_day-block realized variances equal exp(fBM with index H):
// every increment inside block j is sqrt(RV_j / k_day).
PriceSeries fbm_logrv_series(long nblocks, long k_day, double H, std::uint64_t seed) {
    auto fgn = sample_fgn(nblocks, H, 1.0, seed);
    PriceSeries s;
    s.delta = 1.0 / static_cast<double>(nblocks * k_day);
    s.samples.reserve(static_cast<std::size_t>(nblocks * k_day) + 1);
    s.samples.push_back(0.0);
    double b = 0.0;
    for (long j = 0; j < nblocks; ++j) {
        // small amplitude keeps exp(b) within floating-point dynamic range;
        // a constant scale does not change the scaling exponent
        b += 0.1 * fgn[static_cast<std::size_t>(j)];
        double inc = std::sqrt(std::exp(b) / static_cast<double>(k_day));
        for (long i = 0; i < k_day; ++i) s.samples.push_back(s.samples.back() + inc);
    }
    return s;
}

} // namespace

TEST_CASE("phi ratio pinned value and monotonicity for the default lags") {
    EstimationConfig cfg;
    CHECK(phi_ratio(0.3, 3, 4) == doctest::Approx(1.5449048458627907).epsilon(1e-12));
    CHECK_NOTHROW(verify_phi_monotone(cfg));
    CHECK_THROWS_AS(phi_ratio(0.5, 3, 4), numeric_error);
    CHECK_THROWS_AS(phi_ratio(0.3, 1, 4), numeric_error);
}

TEST_CASE("phi inversion round-trips on a grid and clamps out-of-range ratios") {
    EstimationConfig cfg;
    for (double H = 0.05; H < 0.49; H += 0.02) {
        auto [h, clamped] = invert_phi_ratio(phi_ratio(H, cfg.ell1, cfg.ell2), cfg);
        CHECK(std::fabs(h - H) <= 1e-7);
        CHECK_FALSE(clamped);
    }
    // phi is decreasing for (3,4): huge ratio -> h_lo, tiny ratio -> h_hi
    auto lo = invert_phi_ratio(10.0, cfg);
    CHECK(lo.first == doctest::Approx(cfg.h_lo));
    CHECK(lo.second);
    auto hi = invert_phi_ratio(1.0, cfg);
    CHECK(hi.first == doctest::Approx(cfg.h_hi));
    CHECK(hi.second);
}

TEST_CASE("estimation config validation") {
    EstimationConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    EstimationConfig bad = cfg;
    bad.ell1 = bad.ell2;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = cfg;
    bad.ell1 = 2;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = cfg;
    bad.rho_r = 0.3;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = cfg;
    bad.h_lo = 0.4;
    bad.h_hi = 0.3;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = cfg;
    bad.ci_level = 1.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("Vandermonde weights annihilate lower-order powers") {
    auto [wt2, w2] = vandermonde_weights(2);
    CHECK(wt2[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(wt2[1] == doctest::Approx(-2.0).epsilon(1e-12));
    double n2 = std::sqrt(w2[0] * w2[0] + w2[1] * w2[1]);
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));

    for (int M = 1; M <= 8; ++M) {
        auto [wt, w] = vandermonde_weights(M);
        (void)w;
        for (int p = 0; p < M; ++p) {
            double s = 0.0;
            for (int m = 1; m <= M; ++m) s += wt[static_cast<std::size_t>(m - 1)] * std::pow(m, -p);
            double target = (p == M - 1) ? 1.0 : 0.0;
            CHECK(std::fabs(s - target) <= 1e-8);
        }
    }
    CHECK_THROWS_AS(vandermonde_weights(0), config_error);
    CHECK_THROWS_AS(vandermonde_weights(9), numeric_error);
}

TEST_CASE("debiasing order and thresholds") {
    CHECK(h_threshold(1) == doctest::Approx(0.3090169943749474).epsilon(1e-12));
    CHECK(h_threshold(2) == doctest::Approx(0.15138781886599728).epsilon(1e-10));
    CHECK(h_threshold(3) == doctest::Approx(0.09629120178363213).epsilon(1e-8));
    CHECK(h_threshold(4) == doctest::Approx(0.07002747161598733).epsilon(1e-8));

    CHECK(m_of_h(0.45) == 1);
    CHECK(m_of_h(0.5) == 1);
    CHECK(m_of_h(h_threshold(1) + 1e-9) == 1);
    CHECK(m_of_h(h_threshold(1) - 1e-9) == 2);
    CHECK(m_of_h(h_threshold(2) - 1e-9) == 3);

    // m_hat adds the delta^{1/4} log(1/delta) inflation before flooring
    double delta = std::pow(2.0, -16);
    double infl = std::pow(delta, 0.25) * std::log(1.0 / delta);
    int mh = m_hat(0.3, delta);
    CHECK(mh == static_cast<int>(std::floor(0.5 - 0.3 + 0.25 / 0.3 + infl)) + 1);
    CHECK_THROWS_AS(m_hat(0.0, delta), numeric_error);
}

TEST_CASE("randomized window arithmetic matches the worked example") {
    // r_n = 10, q_n = 0.05, bar_h = 0.3, u = 0.4:
    // floor(10*(0.35) + 0.4) = 3, so H_U = 0.4; at delta = 1e-4, k_hat = 59.
    auto [hu, khat] = randomized_window_raw(0.3, 10.0, 0.05, 0.4, 1e-4);
    CHECK(hu == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(khat == 59);

    EstimationConfig cfg;
    double delta = 1e-4;
    double r_n = std::ceil(std::pow(delta, -cfg.rho_r));
    double q_n = cfg.q / std::log(1.0 / delta);
    auto a = randomized_window(0.3, delta, cfg, 0.25);
    auto b = randomized_window_raw(0.3, r_n, q_n, 0.25, delta);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK_THROWS_AS(randomized_window(0.3, delta, cfg, 1.0), numeric_error);
}

TEST_CASE("pilot on constant prices reports degenerate data") {
    EstimationConfig cfg;
    PriceSeries s = constant_series(4096, 1.0 / 4096);
    CHECK_THROWS_WITH_AS(pilot_estimate(s, cfg), doctest::Contains("pilot"), data_error);
}

TEST_CASE("full pipeline runs deterministically on a simulated market") {
    ModelParams p;
    p.H = 0.35;
    p.eta0 = 0.5;
    const long n = 1 << 14;
    auto mkt = simulate_market(p, n, 1.0 / n, 2024);

    EstimationConfig cfg;
    // window/bracket choices that keep every stage feasible at this n
    cfg.h_lo = 0.15;
    cfg.h_hi = 0.45;
    cfg.rho_r = 0.2;
    cfg.q = 0.5;
    auto est1 = final_estimate(mkt.series, cfg);
    auto est2 = final_estimate(mkt.series, cfg);
    CHECK(est1.pilot == est2.pilot);
    CHECK(est1.hat_h == est2.hat_h);
    CHECK(est1.k_hat == est2.k_hat);
    CHECK(est1.pilot >= cfg.h_lo);
    CHECK(est1.pilot <= cfg.h_hi);
    CHECK(est1.m_hat >= 1);
    CHECK(est1.m_hat <= 8);
    CHECK(static_cast<int>(est1.iterates.size()) == est1.m_hat);
    CHECK(est1.bar_h == est1.iterates.back());
    CHECK(est1.k_hat >= 1);
    CHECK(est1.diagnostics.count("k_tilde") == 1);
    CHECK(est1.diagnostics.count("u") == 1);
    CHECK(est1.diagnostics.count("v_final_num") == 1);
}

TEST_CASE("gate decision is strict and the gate resets final_h") {
    CHECK_FALSE(gate_decision(1.0, 1.0));
    CHECK(gate_decision(1.0000001, 1.0));
    CHECK(gate_decision(-2.0, 1.0));

    // Brownian market: the gate should not reject H = 1/2
    ModelParams p; // sigma == 1
    const long n = 1 << 14;
    auto mkt = simulate_market(p, n, 1.0 / n, 99);
    EstimationConfig cfg;
    cfg.h_lo = 0.15;
    cfg.h_hi = 0.45;
    cfg.rho_r = 0.2;
    cfg.q = 0.5;
    auto est = final_estimate(mkt.series, cfg);
    // plug-in Gamma-hats of the right order: true values are (1, 0, 0)
    auto gated = semimartingale_gate(mkt.series, cfg, est, {1.0, 0.0, 0.0});
    CHECK(gated.final_h == 0.5);
    CHECK_FALSE(gated.gate_passed);
    CHECK(gated.diagnostics.count("tau") == 1);
}

TEST_CASE("scaling regression baseline recovers the index of injected fBM log-RV") {
    for (double H : {0.3, 0.5}) {
        double sum = 0.0;
        const int reps = 20;
        for (int r = 0; r < reps; ++r) {
            PriceSeries s = fbm_logrv_series(512, 32, H, 555 + static_cast<std::uint64_t>(r));
            sum += scaling_regression_baseline(s, 32, {0.5, 1.0, 1.5, 2.0}, {1, 2, 3, 4, 5});
        }
        CHECK(std::fabs(sum / reps - H) <= 0.04);
    }
    PriceSeries tiny = constant_series(64, 1.0 / 64);
    CHECK_THROWS_AS(scaling_regression_baseline(tiny, 32, {1.0}, {1}), data_error);
}
