#pragma once
#include <array>
#include <utility>
#include <vector>

#include "roughvol/hurst.hpp"
#include "roughvol/series.hpp"

namespace roughvol {

struct AsymptoticSpec {
    std::array<double, 3> gamma_hats{0.0, 0.0, 0.0};
    double variance = 0.0;           // CLT variance of the final estimator
    double rate = 1.0;               // delta^{1/(4*hat_h+2)}
    std::pair<double, double> ci{0.0, 0.0};
    bool kappa_optimal = true;       // indicator 1{kappa = 2H/(2H+1)}
};

// beta(H) = exp(2q / (2H+1)^2): the limiting window constant of the
// randomized sequence k-hat relative to the optimal rate.
double beta_of_h(double H, double q);

// Closed-form asymptotic covariance constants. gamma_1 and gamma_3 carry the
// rate-optimality indicator; gamma_2 uses a continuous extension at H = 1/4.
double gamma_nu(int nu, double ell, double theta, double ell_p, double theta_p, double H,
                bool kappa_optimal);

// M x M matrix with entries gamma_nu(nu, ell, beta(H) m, ell_p, beta(H) m', H, true).
std::vector<std::vector<double>> gamma_matrix(int nu, int ell, int ell_p, double H, int M,
                                              double q);

// w(M,H)_m = w(M)_m m^{1/2+H} / sum_m' w(M)_m' m'^{1/2+H}; sums to 1.
std::vector<double> weights_wmh(int M, double H);

// Block-increment estimators of (Gamma_1, Gamma_2, Gamma_3)(t) with block
// spacing K-hat = k_hat * [delta^{-lambda}] and spot windows k_hat.
std::array<double, 3> gamma_hat(const PriceSeries& series, double hat_h, long k_hat, double lambda,
                                double t);

// Plug-in variance of the final estimator's CLT; phi' by central difference.
double clt_variance(double hat_h, int m, const std::array<double, 3>& gamma_hats,
                    const EstimationConfig& cfg);

// (hat_h -+ z * sqrt(variance) * delta^{1/(4 hat_h + 2)}), clipped to [0, 1/2].
std::pair<double, double> confidence_interval(double hat_h, double variance, double delta,
                                              double level);

// Full post-estimation bundle used by the CLI report.
AsymptoticSpec asymptotic_spec(const PriceSeries& series, const EstimationConfig& cfg,
                               const HurstEstimate& est);

} // namespace roughvol
