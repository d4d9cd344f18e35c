#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "roughvol/errors.hpp"
#include "roughvol/rng.hpp"
#include "roughvol/simulate.hpp"
#include "roughvol/stats.hpp"

using namespace roughvol;

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double lag1_autocorr(const std::vector<double>& v) {
    double m = mean_of(v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        den += (v[i] - m) * (v[i] - m);
        if (i + 1 < v.size()) num += (v[i] - m) * (v[i + 1] - m);
    }
    return num / den;
}

} // namespace

TEST_CASE("fGN sampling is deterministic in the seed") {
    auto a = sample_fgn(256, 0.3, 0.01, 42);
    auto b = sample_fgn(256, 0.3, 0.01, 42);
    auto c = sample_fgn(256, 0.3, 0.01, 43);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("fGN at H = 1/2 is white noise with variance delta") {
    const long n = 1 << 15;
    const double delta = 1e-3;
    auto z = sample_fgn(n, 0.5, delta, 7);
    CHECK(var_of(z) == doctest::Approx(delta).epsilon(3.0 / std::sqrt(static_cast<double>(n)) * 2));
    CHECK(std::fabs(lag1_autocorr(z)) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fGN variance is delta^{2H} and rough lag-1 autocorrelation matches") {
    const long n = 1 << 15;
    const double delta = 1e-3;
    for (double H : {0.1, 0.3}) {
        auto z = sample_fgn(n, H, delta, 11);
        double v = std::pow(delta, 2.0 * H);
        // chi-square-ish MC error on the sample variance of correlated Gaussians
        CHECK(var_of(z) == doctest::Approx(v).epsilon(0.05));
    }
    auto z = sample_fgn(n, 0.1, delta, 13);
    double rho_theory = (std::pow(2.0, 0.2) - 2.0) / 2.0; // -0.42565082
    CHECK(std::fabs(lag1_autocorr(z) - rho_theory) <= 0.02);
}

TEST_CASE("FFT and direct causal convolutions agree") {
    Rng rng(5);
    for (long n : {17L, 255L, 1024L}) {
        std::vector<double> kernel(static_cast<std::size_t>(n)), u(static_cast<std::size_t>(n));
        for (auto& x : kernel) x = rng.normal();
        for (auto& x : u) x = rng.normal();
        auto a = rl_convolve_fft(kernel, u);
        auto b = rl_convolve_direct(kernel, u);
        REQUIRE(a.size() == b.size());
        double scale = 0.0;
        for (double x : b) scale = std::max(scale, std::fabs(x));
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(std::fabs(a[i] - b[i]) <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("degenerate VoV gives constant variance and Brownian prices") {
    ModelParams p; // defaults: eta0 = etahat0 = 0, loadings 0, c0 = 1
    const long n = 1024;
    const double delta = 1.0 / n;
    std::vector<double> xT;
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto mkt = simulate_market(p, n, delta, 1000 + s);
        for (double c : mkt.c_path) CHECK(c == doctest::Approx(1.0).epsilon(1e-14));
        xT.push_back(mkt.series.samples.back());
        CHECK(mkt.clamp_count == 0);
    }
    // Var(x_1) = c0 * 1 within ~3 MC standard errors of a chi-square estimate
    CHECK(var_of(xT) == doctest::Approx(1.0).epsilon(3.0 * std::sqrt(2.0 / 200.0)));
}

TEST_CASE("constant-eta variance of c matches the kernel quadrature") {
    ModelParams p;
    p.H = 0.3;
    p.eta0 = 0.4; // small enough that the positivity clamp is essentially inactive
    const long n = 512;
    const double delta = 1.0 / n;
    const double t = 1.0;
    std::vector<double> cT;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) cT.push_back(simulate_market(p, n, delta, 77 + r).c_path.back());
    // exact discrete counterpart: eta^2 * delta * sum_m g(m delta)^2
    double disc = 0.0;
    for (long m = 1; m <= n; ++m) disc += g_kernel(p.H, m * delta) * g_kernel(p.H, m * delta);
    disc *= p.eta0 * p.eta0 * delta;
    double se = disc * std::sqrt(2.0 / reps);
    CHECK(std::fabs(var_of(cT) - disc) <= 3.0 * se);
    // continuum formula eta^2 K_H^{-2} t^{2H} / (2H): looser agreement
    double cont = p.eta0 * p.eta0 * std::pow(t, 2.0 * p.H) / (2.0 * p.H * k_h(p.H) * k_h(p.H));
    CHECK(var_of(cT) == doctest::Approx(cont).epsilon(0.15));
}

TEST_CASE("H = 1/2 constant-eta variance increments are uncorrelated") {
    ModelParams p;
    p.H = 0.5;
    p.eta0 = 0.5;
    const long n = 256;
    const double delta = 1.0 / n;
    const int reps = 400;
    std::vector<double> d1, d2;
    for (int r = 0; r < reps; ++r) {
        auto mkt = simulate_market(p, n, delta, 9000 + r);
        d1.push_back(mkt.c_path[128] - mkt.c_path[64]);
        d2.push_back(mkt.c_path[256] - mkt.c_path[192]);
    }
    double m1 = mean_of(d1), m2 = mean_of(d2);
    double num = 0.0, v1 = 0.0, v2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        num += (d1[static_cast<std::size_t>(r)] - m1) * (d2[static_cast<std::size_t>(r)] - m2);
        v1 += (d1[static_cast<std::size_t>(r)] - m1) * (d1[static_cast<std::size_t>(r)] - m1);
        v2 += (d2[static_cast<std::size_t>(r)] - m2) * (d2[static_cast<std::size_t>(r)] - m2);
    }
    CHECK(std::fabs(num / std::sqrt(v1 * v2)) <= 3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("market simulation is deterministic and flags heavy clamping") {
    ModelParams p;
    p.H = 0.3;
    p.eta0 = 0.5;
    auto a = simulate_market(p, 512, 1.0 / 512, 4);
    auto b = simulate_market(p, 512, 1.0 / 512, 4);
    CHECK(a.series.samples == b.series.samples);
    CHECK(a.c_path == b.c_path);

    ModelParams wild;
    wild.H = 0.1;
    wild.c0 = 1e-4;
    wild.eta0 = 5.0;
    wild.c_min = 1e-5;
    auto w = simulate_market(wild, 2048, 1.0 / 2048, 10);
    CHECK(w.clamp_warning);
    for (double c : w.c_path) CHECK(c >= wild.c_min);
}

TEST_CASE("model validation rejects bad correlation structures") {
    ModelParams p;
    p.rho[0] = 1.5;
    CHECK_THROWS_AS(p.validate(), config_error);
    ModelParams q;
    // W perfectly correlated with two orthogonal drivers: not PSD
    q.rho[0] = 1.0;
    q.rho[1] = 1.0;
    CHECK_THROWS_AS(q.validate(), config_error);
    ModelParams ok;
    ok.rho[0] = 0.6;
    CHECK_NOTHROW(ok.validate());
    ModelParams bad_h;
    bad_h.H = 0.7;
    CHECK_THROWS_AS(bad_h.validate(), config_error);
}

TEST_CASE("true_gammas on degenerate and constant-VoV markets") {
    ModelParams p;
    auto mkt = simulate_market(p, 256, 1.0 / 256, 3);
    auto g = true_gammas(mkt, 1.0);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[2] == doctest::Approx(0.0));

    // homogeneity: scaling c0 scales Gamma_1 by sigma^8
    ModelParams r;
    r.c0 = 4.0; // sigma = 2
    auto mkt2 = simulate_market(r, 256, 1.0 / 256, 3);
    auto g2 = true_gammas(mkt2, 1.0);
    CHECK(g2[0] == doctest::Approx(256.0).epsilon(1e-12)); // 2^8
}

TEST_CASE("bias oracle vanishes without volatility of volatility") {
    ModelParams p; // eta == etahat == 0 -> sigma constant
    auto mkt = simulate_market(p, 512, 1.0 / 512, 21);
    CHECK(bias_oracle(mkt, 3, 8, 1.0) == doctest::Approx(0.0));
    ModelParams q;
    q.eta0 = 0.5;
    auto mkt2 = simulate_market(q, 512, 1.0 / 512, 21);
    CHECK(std::fabs(bias_oracle(mkt2, 3, 8, 1.0)) > 0.0);
}
