#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "roughvol/series.hpp"

namespace roughvol {

// Canonical rough-volatility sub-model: power-law kernels, constant loadings,
// zero auxiliary drifts. Positivity of c and eta^2 enforced by clamping.
struct ModelParams {
    double H = 0.3;        // volatility roughness, in (0, 1/2]
    double H_eta = 0.5;    // VoV roughness of eta^2
    double H_etahat = 0.5; // VoV roughness of etahat^2
    double c0 = 1.0;
    double eta0 = 0.0;    // eta at time 0 (level, not squared)
    double etahat0 = 0.0; // etahat at time 0
    double a = 0.0;       // linear drift rate of c
    double b = 0.0;       // price drift
    std::array<double, 4> theta_vec{0.0, 0.0, 0.0, 0.0};    // loadings of eta^2 on Wbar
    std::array<double, 4> vartheta_vec{0.0, 0.0, 0.0, 0.0}; // loadings of etahat^2 on Wbar
    // Correlations of (W, What) with the 4 components of Wbar, row-major 2x4.
    std::array<double, 8> rho{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    double c_min = 1e-6; // positivity clamp for c

    void validate() const; // throws config_error (PSD driver correlation, ranges)
};

struct SimulatedMarket {
    PriceSeries series; // n+1 log prices on t_i = i*delta
    std::vector<double> sigma_path, c_path, eta_path, etahat_path;
    std::vector<double> dW; // n Brownian increments of W (kept for the bias oracle)
    ModelParams params;
    std::uint64_t seed = 0;
    long clamp_count = 0;      // grid points where c or eta^2 was clamped
    bool clamp_warning = false; // clamp activation rate > 5% of grid points
};

// Exact-in-distribution fractional Gaussian noise by circulant embedding;
// deterministic given seed. Fails (never truncates) if an embedding eigenvalue
// is negative beyond tolerance 1e-8.
std::vector<double> sample_fgn(long n, double H, double delta, std::uint64_t seed);

// y_i = sum_{m=1}^{i} kernel[m-1] * u[i-m], i = 0..u.size(); FFT O(n log n) and a
// direct O(n^2) reference used in equivalence tests.
std::vector<double> rl_convolve_fft(const std::vector<double>& kernel, const std::vector<double>& u);
std::vector<double> rl_convolve_direct(const std::vector<double>& kernel, const std::vector<double>& u);

SimulatedMarket simulate_market(const ModelParams& params, long n, double delta, std::uint64_t seed);

// (Gamma_1, Gamma_2, Gamma_3)(t) = (int sigma^8, int (eta^2+etahat^2)^2,
// int sigma^4 (eta^2+etahat^2)) by trapezoidal integration of the latent paths.
std::array<double, 3> true_gammas(const SimulatedMarket& market, double t);

// Latent-path evaluation of the first-order bias term of the autocovariance
// statistic; cell integrals discretized at the right endpoint of each grid cell.
double bias_oracle(const SimulatedMarket& market, int ell, long k, double t);

} // namespace roughvol
