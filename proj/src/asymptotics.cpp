#include "roughvol/asymptotics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughvol/errors.hpp"
#include "roughvol/stats.hpp"

namespace roughvol {

double beta_of_h(double H, double q) {
    double d = 2.0 * H + 1.0;
    return std::exp(2.0 * q / (d * d));
}

namespace {

constexpr double kBinom4[5] = {1.0, -4.0, 6.0, -4.0, 1.0};

// 25-term double central difference of f(|u -+ v|) around (a, b).
template <typename F>
double dcd4_of(const F& f, double theta, double theta_p, double a, double b, combine_sign sign) {
    long double s = 0.0L;
    for (int i = 0; i <= 4; ++i) {
        double u = a + (2 - i) * theta;
        for (int j = 0; j <= 4; ++j) {
            double v = b + (2 - j) * theta_p;
            double arg = (sign == combine_sign::minus) ? u - v : u + v;
            s += static_cast<long double>(kBinom4[i] * kBinom4[j]) * f(std::fabs(arg));
        }
    }
    return static_cast<double>(s);
}

double x6_log(double m) { return (m > 0.0) ? std::pow(m, 6.0) * std::log(m) : 0.0; }

} // namespace

double gamma_nu(int nu, double ell, double theta, double ell_p, double theta_p, double H,
                bool kappa_optimal) {
    if (nu < 1 || nu > 3) throw numeric_error("gamma_nu: nu must be 1, 2 or 3");
    if (!(theta > 0.0) || !(theta_p > 0.0)) throw numeric_error("gamma_nu: theta must be positive");
    if (!(H > 0.0) || H > 0.5) throw numeric_error("gamma_nu: H must lie in (0, 1/2]");
    const double a = ell * theta;
    const double b = ell_p * theta_p;
    const double tp = theta * theta_p;

    switch (nu) {
    case 1: {
        if (!kappa_optimal) return 0.0;
        double d = double_central_diff4(3.0, theta, theta_p, a, b, combine_sign::minus);
        return d / (3.0 * std::pow(tp, 2.0 * H + 2.0));
    }
    case 2: {
        if (std::fabs(H - 0.25) < 1e-6) {
            double d = dcd4_of(x6_log, theta, theta_p, a, b, combine_sign::minus) +
                       dcd4_of(x6_log, theta, theta_p, a, b, combine_sign::plus);
            return d / (5760.0 * std::pow(tp, 2.5));
        }
        double pref = std::tgamma(1.0 + 2.0 * H) * std::tgamma(1.0 + 2.0 * H) *
                      (1.0 - 1.0 / std::cos(2.0 * M_PI * H)) /
                      (4.0 * std::tgamma(6.0 + 4.0 * H) * std::pow(tp, 2.0 * H + 2.0));
        double d = double_central_diff4(4.0 * H + 5.0, theta, theta_p, a, b, combine_sign::minus) +
                   double_central_diff4(4.0 * H + 5.0, theta, theta_p, a, b, combine_sign::plus);
        return pref * d;
    }
    default: {
        if (!kappa_optimal) return 0.0;
        double d = double_central_diff4(2.0 * H + 4.0, theta, theta_p, a, b, combine_sign::plus) +
                   double_central_diff4(2.0 * H + 4.0, theta, theta_p, a, b, combine_sign::minus);
        return -d / (8.0 * (H + 0.5) * (H + 1.0) * (H + 1.5) * (H + 2.0) *
                     std::pow(tp, 2.0 * H + 2.0));
    }
    }
}

std::vector<std::vector<double>> gamma_matrix(int nu, int ell, int ell_p, double H, int M,
                                              double q) {
    if (M < 1 || M > 8) throw config_error("gamma_matrix: M must lie in [1, 8]");
    const double beta = beta_of_h(H, q);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(M),
                                         std::vector<double>(static_cast<std::size_t>(M)));
    for (int m = 1; m <= M; ++m)
        for (int mp = 1; mp <= M; ++mp)
            out[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(mp - 1)] =
                gamma_nu(nu, static_cast<double>(ell), beta * m, static_cast<double>(ell_p),
                         beta * mp, H, true);
    return out;
}

std::vector<double> weights_wmh(int M, double H) {
    auto [wt, w] = vandermonde_weights(M);
    (void)wt;
    std::vector<double> out(static_cast<std::size_t>(M));
    long double den = 0.0L;
    for (int m = 1; m <= M; ++m) {
        long double v = static_cast<long double>(w[static_cast<std::size_t>(m - 1)]) *
                        powl(static_cast<long double>(m), 0.5L + static_cast<long double>(H));
        out[static_cast<std::size_t>(m - 1)] = static_cast<double>(v);
        den += v;
    }
    if (den == 0.0L) {
        std::ostringstream os;
        os << "weights_wmh: zero normalization for M = " << M << ", H = " << H;
        throw numeric_error(os.str());
    }
    for (double& v : out) v = static_cast<double>(v / static_cast<double>(den));
    return out;
}

std::array<double, 3> gamma_hat(const PriceSeries& series, double hat_h, long k_hat, double lambda,
                                double t) {
    series.validate();
    if (k_hat < 1) throw data_error("gamma_hat: k_hat must be >= 1");
    if (!(lambda > 0.0) || !(lambda < 0.5)) throw config_error("gamma_hat: lambda must lie in (0, 1/2)");
    const double delta = series.delta;
    const long long mult = floor_frac(std::pow(delta, -lambda)).first;
    const long long K = static_cast<long long>(k_hat) * std::max<long long>(1, mult);
    const double Kd = static_cast<double>(K) * delta;
    const long long N = floor_frac(t / Kd).first;
    const long long n_incr = static_cast<long long>(series.samples.size()) - 1;
    if (N < 2 || N * K > n_incr) {
        std::ostringstream os;
        os << "gamma_hat: fewer than 2 complete blocks of spacing " << K << " within t = " << t;
        throw data_error(os.str());
    }

    const auto& x = series.samples;
    VhatComputer vc(series);
    auto dX = [&](long long i) {
        return x[static_cast<std::size_t>(i * K)] - x[static_cast<std::size_t>((i - 1) * K)];
    };
    auto dC = [&](long long i) {
        return vc.spot(static_cast<long>(1 + i * K), k_hat) -
               vc.spot(static_cast<long>(1 + (i - 1) * K), k_hat);
    };

    long double g1 = 0.0L, g2 = 0.0L, g3 = 0.0L;
    for (long long i = 1; i <= N - 1; ++i) {
        long double a = dX(i), b = dX(i + 1);
        g1 += a * a * a * a * b * b * b * b;
    }
    for (long long i = 1; i <= N - 2; ++i) {
        long double c = dC(i);
        long double b = dX(i + 1);
        long double c2 = c * c;
        g2 += c2 * c2;
        g3 += c2 * b * b * b * b;
    }
    // Block-length normalization (K delta)^3 of the eighth-moment estimator;
    // a per-increment delta^3 here would scale the limit by K^3.
    std::array<double, 3> out;
    out[0] = static_cast<double>(g1 / (9.0L * static_cast<long double>(Kd) *
                                       static_cast<long double>(Kd) * static_cast<long double>(Kd)));
    out[1] = static_cast<double>(g2) * std::pow(Kd, 1.0 - 4.0 * hat_h) / 3.0;
    out[2] = static_cast<double>(g3) * std::pow(Kd, -1.0 - 2.0 * hat_h) / 3.0;
    return out;
}

double clt_variance(double hat_h, int m, const std::array<double, 3>& gamma_hats,
                    const EstimationConfig& cfg) {
    for (double g : gamma_hats)
        if (!std::isfinite(g)) throw numeric_error("clt_variance: non-finite Gamma-hat input");
    if (m < 1 || m > 8) throw config_error("clt_variance: m must lie in [1, 8]");

    const double phi0 = phi_ratio(hat_h, cfg.ell1, cfg.ell2);
    const double step = 1e-5;
    const double phi_d =
        (phi_ratio(hat_h + step, cfg.ell1, cfg.ell2) - phi_ratio(hat_h - step, cfg.ell1, cfg.ell2)) /
        (2.0 * step);
    if (phi_d == 0.0) throw numeric_error("clt_variance: vanishing phi derivative");

    const int ells[2] = {cfg.ell1, cfg.ell2};
    double big_phi[2];
    for (int i = 0; i < 2; ++i) {
        big_phi[i] = phi_const(hat_h, ells[i]);
        if (std::fabs(big_phi[i]) < 1e-12) {
            std::ostringstream os;
            os << "clt_variance: Phi^H_" << ells[i] << " vanishes at H = " << hat_h
               << " (H at the semimartingale boundary; use the gate instead)";
            throw numeric_error(os.str());
        }
    }

    const std::vector<double> w = weights_wmh(m, hat_h);
    double total = 0.0;
    for (int io = 0; io < 2; ++io) {
        for (int ip = 0; ip < 2; ++ip) {
            double sign = ((io + ip) % 2 == 0) ? 1.0 : -1.0;
            double inner = 0.0;
            for (int nu = 1; nu <= 3; ++nu) {
                auto g = gamma_matrix(nu, ells[io], ells[ip], hat_h, m, cfg.q);
                long double quad = 0.0L;
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < m; ++c)
                        quad += static_cast<long double>(w[static_cast<std::size_t>(r)]) *
                                static_cast<long double>(g[static_cast<std::size_t>(r)]
                                                          [static_cast<std::size_t>(c)]) *
                                static_cast<long double>(w[static_cast<std::size_t>(c)]);
                inner += static_cast<double>(quad) * gamma_hats[static_cast<std::size_t>(nu - 1)];
            }
            total += sign / (big_phi[io] * big_phi[ip]) * inner;
        }
    }
    double f = phi0 / phi_d;
    return f * f * total;
}

std::pair<double, double> confidence_interval(double hat_h, double variance, double delta,
                                              double level) {
    if (!(variance >= 0.0)) throw numeric_error("confidence_interval: negative variance");
    if (!(level > 0.0) || !(level < 1.0)) throw config_error("confidence_interval: level out of (0,1)");
    boost::math::normal_distribution<double> nd;
    double z = boost::math::quantile(nd, 0.5 * (1.0 + level));
    double hw = z * std::sqrt(variance) * std::pow(delta, 1.0 / (4.0 * hat_h + 2.0));
    double lo = std::clamp(hat_h - hw, 0.0, 0.5);
    double hi = std::clamp(hat_h + hw, 0.0, 0.5);
    return {lo, hi};
}

AsymptoticSpec asymptotic_spec(const PriceSeries& series, const EstimationConfig& cfg,
                               const HurstEstimate& est) {
    AsymptoticSpec spec;
    const double t = cfg.resolve_t(series);
    spec.gamma_hats = gamma_hat(series, est.hat_h, est.k_hat, cfg.lambda, t);
    double var = clt_variance(est.hat_h, est.m_hat, spec.gamma_hats, cfg);
    if (var < -1e-10) {
        std::ostringstream os;
        os << "asymptotic_spec: negative plug-in variance " << var
           << " (inconsistent Gamma-hat estimates)";
        throw numeric_error(os.str());
    }
    spec.variance = std::max(var, 0.0);
    spec.rate = std::pow(series.delta, 1.0 / (4.0 * est.hat_h + 2.0));
    spec.ci = confidence_interval(est.hat_h, spec.variance, series.delta, cfg.ci_level);
    spec.kappa_optimal = true;
    return spec;
}

} // namespace roughvol
