#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "roughvol/series.hpp"
#include "roughvol/stats.hpp"

namespace roughvol {

struct EstimationConfig {
    int ell1 = 3;
    int ell2 = 4;
    double q = 1.0;            // randomization constant
    double rho_r = 0.125;      // r_n = ceil(delta^{-rho_r}), rho_r in (0, 1/4)
    double lambda = 0.3;       // K-hat exponent, in (0, 1/2)
    double h_lo = 1e-3;        // inversion bracket
    double h_hi = 0.5 - 1e-3;
    double invert_tol = 1e-8;
    std::uint64_t seed_u = 42; // seed of the single uniform draw U
    double t = -1.0;           // evaluation time; <= 0 means "use the horizon T"
    double ci_level = 0.95;

    void validate() const; // throws config_error
    double resolve_t(const PriceSeries& series) const;
};

struct HurstEstimate {
    double pilot = 0.0;
    std::vector<double> iterates; // debiasing iterates, last entry is bar_h
    int m_hat = 1;
    double bar_h = 0.0;
    double h_u = 0.0;  // randomized window parameter (may exceed 1/2 by design)
    long k_hat = 1;
    double hat_h = 0.0;
    double final_h = 0.5;
    bool gate_passed = false;
    std::pair<double, double> ci{0.0, 0.0};
    bool clamped = false; // any ratio inversion hit the bracket boundary
    std::map<std::string, double> diagnostics;
};

// phi(H) = Phi^H_{ell1} / Phi^H_{ell2}; the pilot inverts this ratio.
double phi_ratio(double H, int ell1, int ell2);

// Bisection inverse of phi on [h_lo, h_hi]; requires the monotonicity scan to
// have passed for the configured lags. Returns (H, clamped).
std::pair<double, bool> invert_phi_ratio(double r, const EstimationConfig& cfg);

// Strict-monotonicity grid scan of phi on [h_lo, h_hi]; throws config_error on
// failure. Called at configuration time by the pipeline.
void verify_phi_monotone(const EstimationConfig& cfg, int grid_points = 10000);

double pilot_estimate(const PriceSeries& series, const EstimationConfig& cfg);

// Solves V_M w~ = e_M (Vandermonde with entries m^{-(row-1)}); returns
// (w~, w = w~/|w~|_2). M must lie in [1, 8].
std::pair<std::vector<double>, std::vector<double>> vandermonde_weights(int M);

int m_of_h(double H);
double h_threshold(int j);
int m_hat(double pilot, double delta);

std::vector<double> refine(const PriceSeries& series, const EstimationConfig& cfg, double pilot,
                           int mhat);

// Core arithmetic of the randomized window, with r_n and q_n supplied directly.
std::pair<double, long> randomized_window_raw(double bar_h, double r_n, double q_n, double u,
                                              double delta);
// r_n = ceil(delta^{-rho_r}), q_n = q / log(1/delta).
std::pair<double, long> randomized_window(double bar_h, double delta, const EstimationConfig& cfg,
                                          double u);

HurstEstimate final_estimate(const PriceSeries& series, const EstimationConfig& cfg);

// Gate arithmetic: strict |v| > tau keeps hat_h, otherwise final_h = 1/2.
bool gate_decision(double v_hat_l2, double tau);

// Applies the H = 1/2 test; needs Gamma-hat estimates from the asymptotics
// module evaluated at (hat_h, k_hat).
HurstEstimate semimartingale_gate(const PriceSeries& series, const EstimationConfig& cfg,
                                  HurstEstimate est, const std::array<double, 3>& gamma_hats);

// Legacy log-log regression baseline on realized-variance blocks.
double scaling_regression_baseline(const PriceSeries& series, long k_day,
                                   const std::vector<double>& q_list,
                                   const std::vector<long>& lag_list);

} // namespace roughvol
