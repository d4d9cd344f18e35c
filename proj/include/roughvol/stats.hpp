#pragma once
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "roughvol/series.hpp"

namespace roughvol {

// ---- grid / difference primitives -------------------------------------------------

// ([x], {x}) with [x] the greatest integer <= x and {x} = x - [x] in [0,1).
std::pair<long long, double> floor_frac(double x);

// 4th-order central difference: sum_{i=0}^{4} (-1)^i C(4,i) f(x + (2-i)h).
double central_diff4(const std::function<double(double)>& f, double h, double x);

enum class combine_sign { minus, plus };

// 25-term double 4th-order central difference of |u -/+ v|^alpha at (a, b)
// with steps theta (in u) and theta_p (in v).
double double_central_diff4(double alpha, double theta, double theta_p, double a, double b,
                            combine_sign sign);

// ---- kernel normalization ----------------------------------------------------------

// K_H = Gamma(H + 1/2) / sqrt(sin(pi H) Gamma(2H + 1)); the power-law kernel is
// g_H(t) = K_H^{-1} t^{H - 1/2}.
double k_h(double H);
double g_kernel(double H, double t);

// ---- autocovariance constants ------------------------------------------------------

// Closed form: 4th central difference of l^{2H+2} over 2(2H+1)(2H+2).
double phi_const(double H, int ell);

// Independent quadrature oracle: integral over v >= -2 of the product of second
// differences of G_H(v) and G_H(v + ell), with an analytic tail correction.
double phi_const_integral(double H, int ell);

// ---- statistics from a price series ------------------------------------------------

struct AutocovStat {
    int ell = 0;
    long k = 1;
    double value_hat = 0.0; // V-hat
    double t = 0.0;
};

// Spot variance estimate at time t with window k*delta (standalone form).
double spot_vol(const PriceSeries& series, double t, long k);

// Shared prefix-sum evaluator: one pass over squared increments serves every
// (ell, k) pair the pipeline needs.
class VhatComputer {
public:
    explicit VhatComputer(const PriceSeries& series);

    double delta() const { return delta_; }
    long n_increments() const { return static_cast<long>(prefix_.size()) - 1; }

    // c-hat at grid index i (time i*delta), window k*delta; valid for
    // 1 <= i and i + k - 1 <= n_increments().
    double spot(long i, long k) const;

    AutocovStat v_hat(int ell, long k, double t) const;
    double v_tilde(int ell, long k, double t, double H) const;

private:
    std::vector<long double> prefix_; // prefix_[j] = sum_{i<=j} (x_i - x_{i-1})^2
    double delta_;
};

// Convenience wrappers (build a fresh prefix array).
AutocovStat v_hat(const PriceSeries& series, int ell, long k, double t);
double v_tilde(const PriceSeries& series, int ell, long k, double t, double H);

// Literal double-loop reference evaluation; test oracle for the prefix-sum path.
double v_hat_bruteforce(const PriceSeries& series, int ell, long k, double t);

} // namespace roughvol
