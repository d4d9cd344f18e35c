#include "roughvol/hurst.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughvol/asymptotics.hpp"
#include "roughvol/errors.hpp"
#include "roughvol/rng.hpp"

namespace roughvol {

void EstimationConfig::validate() const {
    if (ell1 < 3 || ell2 < 3) throw config_error("config: ell1 and ell2 must be >= 3");
    if (ell1 == ell2) throw config_error("config: ell1 and ell2 must differ");
    if (!(q > 0.0)) throw config_error("config: q must be positive");
    if (!(rho_r > 0.0) || !(rho_r < 0.25)) throw config_error("config: rho_r must lie in (0, 1/4)");
    if (!(lambda > 0.0) || !(lambda < 0.5)) throw config_error("config: lambda must lie in (0, 1/2)");
    if (!(h_lo > 0.0) || !(h_lo < h_hi) || !(h_hi < 0.5))
        throw config_error("config: need 0 < h_lo < h_hi < 1/2");
    if (!(invert_tol > 0.0)) throw config_error("config: invert_tol must be positive");
    if (!(ci_level > 0.0) || !(ci_level < 1.0)) throw config_error("config: ci_level must lie in (0, 1)");
}

double EstimationConfig::resolve_t(const PriceSeries& series) const {
    double T = series.horizon();
    if (t <= 0.0) return T;
    if (t > T * (1.0 + 1e-12)) throw config_error("config: evaluation time t exceeds series horizon");
    return t;
}

double phi_ratio(double H, int ell1, int ell2) {
    if (!(H > 0.0) || !(H < 0.5)) throw numeric_error("phi_ratio: H must lie in (0, 1/2)");
    if (ell1 < 3 || ell2 < 3) throw numeric_error("phi_ratio: lags must be >= 3");
    double den = phi_const(H, ell2);
    if (den == 0.0) throw numeric_error("phi_ratio: zero denominator");
    return phi_const(H, ell1) / den;
}

void verify_phi_monotone(const EstimationConfig& cfg, int grid_points) {
    double prev = phi_ratio(cfg.h_lo, cfg.ell1, cfg.ell2);
    double last = phi_ratio(cfg.h_hi, cfg.ell1, cfg.ell2);
    const bool decreasing = last < prev;
    for (int i = 1; i <= grid_points; ++i) {
        double h = cfg.h_lo + (cfg.h_hi - cfg.h_lo) * static_cast<double>(i) / grid_points;
        double v = phi_ratio(h, cfg.ell1, cfg.ell2);
        bool ok = decreasing ? (v < prev) : (v > prev);
        if (!ok) {
            std::ostringstream os;
            os << "config: phi ratio not strictly monotone for lags (" << cfg.ell1 << "," << cfg.ell2
               << ") near H = " << h;
            throw config_error(os.str());
        }
        prev = v;
    }
}

std::pair<double, bool> invert_phi_ratio(double r, const EstimationConfig& cfg) {
    if (!std::isfinite(r)) throw numeric_error("invert_phi_ratio: non-finite ratio");
    double lo = cfg.h_lo, hi = cfg.h_hi;
    double flo = phi_ratio(lo, cfg.ell1, cfg.ell2);
    double fhi = phi_ratio(hi, cfg.ell1, cfg.ell2);
    const bool decreasing = fhi < flo;
    double fmin = std::min(flo, fhi), fmax = std::max(flo, fhi);
    if (r > fmax) return {decreasing ? lo : hi, r != fmax};
    if (r < fmin) return {decreasing ? hi : lo, r != fmin};
    while (hi - lo > cfg.invert_tol) {
        double mid = 0.5 * (lo + hi);
        double fm = phi_ratio(mid, cfg.ell1, cfg.ell2);
        bool go_right = decreasing ? (fm > r) : (fm < r);
        if (go_right)
            lo = mid;
        else
            hi = mid;
    }
    return {0.5 * (lo + hi), false};
}

namespace {

long k_tilde_of(double delta) {
    return std::max<long>(1, static_cast<long>(std::floor(std::pow(delta, -0.5))));
}

} // namespace

double pilot_estimate(const PriceSeries& series, const EstimationConfig& cfg) {
    cfg.validate();
    verify_phi_monotone(cfg);
    VhatComputer vc(series);
    const double t = cfg.resolve_t(series);
    const long kt = k_tilde_of(series.delta);
    double v1, v2;
    try {
        v1 = vc.v_hat(cfg.ell1, kt, t).value_hat;
        v2 = vc.v_hat(cfg.ell2, kt, t).value_hat;
    } catch (const data_error& e) {
        throw data_error(std::string("pilot stage: ") + e.what());
    }
    if (v2 == 0.0) throw data_error("pilot stage: degenerate data (zero autocovariance denominator)");
    return invert_phi_ratio(v1 / v2, cfg).first;
}

std::pair<std::vector<double>, std::vector<double>> vandermonde_weights(int M) {
    if (M < 1) throw config_error("vandermonde_weights: M must be >= 1");
    if (M > 8) throw numeric_error("vandermonde_weights: M > 8 unsupported (ill-conditioned)");
    const int n = M;
    // Augmented system [V | e_M] with V[r][m-1] = m^{-r}, solved by Gaussian
    // elimination with partial pivoting in extended precision.
    std::vector<std::vector<long double>> A(static_cast<std::size_t>(n),
                                            std::vector<long double>(static_cast<std::size_t>(n) + 1, 0.0L));
    for (int r = 0; r < n; ++r) {
        for (int m = 1; m <= n; ++m)
            A[static_cast<std::size_t>(r)][static_cast<std::size_t>(m - 1)] =
                powl(static_cast<long double>(m), static_cast<long double>(-r));
        A[static_cast<std::size_t>(r)][static_cast<std::size_t>(n)] = (r == n - 1) ? 1.0L : 0.0L;
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (fabsl(A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                fabsl(A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(piv)]);
        long double d = A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (d == 0.0L) throw numeric_error("vandermonde_weights: singular system");
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            long double f = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / d;
            for (int c = col; c <= n; ++c)
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
        }
    }
    std::vector<double> wt(static_cast<std::size_t>(n));
    long double norm2 = 0.0L;
    for (int m = 0; m < n; ++m) {
        long double v = A[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] /
                        A[static_cast<std::size_t>(m)][static_cast<std::size_t>(m)];
        wt[static_cast<std::size_t>(m)] = static_cast<double>(v);
        norm2 += v * v;
    }
    long double nrm = sqrtl(norm2);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m)
        w[static_cast<std::size_t>(m)] = static_cast<double>(wt[static_cast<std::size_t>(m)] / nrm);
    return {wt, w};
}

int m_of_h(double H) {
    if (!(H > 0.0) || H > 0.5) throw numeric_error("m_of_h: H must lie in (0, 1/2]");
    return static_cast<int>(floor_frac(0.5 - H + 0.25 / H).first) + 1;
}

double h_threshold(int j) {
    if (j < 1) throw numeric_error("h_threshold: j must be >= 1");
    double jj = static_cast<double>(j);
    return (std::sqrt(4.0 * jj * jj - 4.0 * jj + 5.0) - 2.0 * jj + 1.0) / 4.0;
}

int m_hat(double pilot, double delta) {
    if (!(pilot > 0.0) || pilot > 0.5) throw numeric_error("m_hat: pilot must lie in (0, 1/2]");
    if (!(delta > 0.0) || !(delta < 1.0)) throw numeric_error("m_hat: delta must lie in (0, 1)");
    double infl = std::pow(delta, 0.25) * std::log(1.0 / delta);
    return static_cast<int>(floor_frac(0.5 - pilot + 0.25 / pilot + infl).first) + 1;
}

std::vector<double> refine(const PriceSeries& series, const EstimationConfig& cfg, double pilot,
                           int mhat) {
    if (mhat < 1) throw config_error("refine: m_hat must be >= 1");
    std::vector<double> iter = {pilot};
    if (mhat == 1) return iter;
    VhatComputer vc(series);
    const double t = cfg.resolve_t(series);
    const double delta = series.delta;
    for (int j = 1; j <= mhat - 1; ++j) {
        double hj = h_threshold(j);
        long kbar = std::max<long>(
            1, static_cast<long>(std::floor(std::pow(delta, -2.0 * hj / (2.0 * hj + 1.0)))));
        auto [wt, w] = vandermonde_weights(j);
        (void)wt;
        double hprev = iter.back();
        long double num = 0.0L, den = 0.0L;
        for (int m = 1; m <= j; ++m) {
            double wm = w[static_cast<std::size_t>(m - 1)] *
                        std::pow(static_cast<double>(m), 0.5 - hprev);
            try {
                num += static_cast<long double>(wm) * vc.v_hat(cfg.ell1, m * kbar, t).value_hat;
                den += static_cast<long double>(wm) * vc.v_hat(cfg.ell2, m * kbar, t).value_hat;
            } catch (const data_error& e) {
                std::ostringstream os;
                os << "refine stage (j=" << j << ", m=" << m << "): " << e.what();
                throw data_error(os.str());
            }
        }
        if (den == 0.0L) throw data_error("refine stage: degenerate data (zero denominator)");
        iter.push_back(invert_phi_ratio(static_cast<double>(num / den), cfg).first);
    }
    return iter;
}

std::pair<double, long> randomized_window_raw(double bar_h, double r_n, double q_n, double u,
                                              double delta) {
    double hu = (static_cast<double>(floor_frac(r_n * (bar_h + q_n) + u).first) + 1.0) / r_n;
    long khat = std::max<long>(
        1, static_cast<long>(std::floor(std::pow(delta, -2.0 * hu / (2.0 * hu + 1.0)))));
    return {hu, khat};
}

std::pair<double, long> randomized_window(double bar_h, double delta, const EstimationConfig& cfg,
                                          double u) {
    if (!(bar_h > 0.0) || bar_h > 0.5) throw numeric_error("randomized_window: bar_h out of range");
    if (!(u >= 0.0) || !(u < 1.0)) throw numeric_error("randomized_window: u must lie in [0, 1)");
    double r_n = std::ceil(std::pow(delta, -cfg.rho_r));
    double q_n = cfg.q / std::log(1.0 / delta);
    return randomized_window_raw(bar_h, r_n, q_n, u, delta);
}

HurstEstimate final_estimate(const PriceSeries& series, const EstimationConfig& cfg) {
    cfg.validate();
    verify_phi_monotone(cfg);
    series.validate();
    const double delta = series.delta;
    const double t = cfg.resolve_t(series);

    HurstEstimate est;
    VhatComputer vc(series);
    const long kt = k_tilde_of(delta);

    // Pilot.
    double v1, v2;
    try {
        v1 = vc.v_hat(cfg.ell1, kt, t).value_hat;
        v2 = vc.v_hat(cfg.ell2, kt, t).value_hat;
    } catch (const data_error& e) {
        throw data_error(std::string("pilot stage: ") + e.what());
    }
    if (v2 == 0.0) throw data_error("pilot stage: degenerate data (zero autocovariance denominator)");
    auto [pilot, cl0] = invert_phi_ratio(v1 / v2, cfg);
    est.pilot = pilot;
    est.clamped = cl0;
    est.diagnostics["k_tilde"] = static_cast<double>(kt);
    est.diagnostics["v_hat_pilot_l1"] = v1;
    est.diagnostics["v_hat_pilot_l2"] = v2;

    // Debiasing order.
    est.m_hat = m_hat(pilot, delta);
    if (est.m_hat > 8) {
        std::ostringstream os;
        os << "debias stage: estimated order M-hat = " << est.m_hat
           << " exceeds the supported maximum 8 (pilot H = " << pilot << ")";
        throw numeric_error(os.str());
    }

    // Iterative refinement.
    est.iterates = refine(series, cfg, pilot, est.m_hat);
    est.bar_h = est.iterates.back();

    // Randomized window from a single uniform draw.
    Rng urng(cfg.seed_u);
    double u = urng.uniform();
    auto [hu, khat] = randomized_window(est.bar_h, delta, cfg, u);
    est.h_u = hu;
    est.k_hat = khat;
    est.diagnostics["u"] = u;

    // Final debiased estimator.
    auto [wt, w] = vandermonde_weights(est.m_hat);
    (void)wt;
    long double num = 0.0L, den = 0.0L;
    for (int m = 1; m <= est.m_hat; ++m) {
        double wm = w[static_cast<std::size_t>(m - 1)] *
                    std::pow(static_cast<double>(m), 0.5 - est.bar_h);
        double a, b;
        try {
            a = vc.v_hat(cfg.ell1, m * khat, t).value_hat;
            b = vc.v_hat(cfg.ell2, m * khat, t).value_hat;
        } catch (const data_error& e) {
            std::ostringstream os;
            os << "final stage (m=" << m << "): " << e.what();
            throw data_error(os.str());
        }
        num += static_cast<long double>(wm) * a;
        den += static_cast<long double>(wm) * b;
        est.diagnostics["v_hat_final_l1_m" + std::to_string(m)] = a;
        est.diagnostics["v_hat_final_l2_m" + std::to_string(m)] = b;
    }
    if (den == 0.0L) throw data_error("final stage: degenerate data (zero denominator)");
    auto [hh, cl1] = invert_phi_ratio(static_cast<double>(num / den), cfg);
    est.hat_h = hh;
    est.clamped = est.clamped || cl1;
    est.diagnostics["v_final_num"] = static_cast<double>(num);
    est.diagnostics["v_final_den"] = static_cast<double>(den);

    est.final_h = est.hat_h; // provisional; the gate may reset it to 1/2
    est.gate_passed = false;
    return est;
}

bool gate_decision(double v_hat_l2, double tau) { return std::fabs(v_hat_l2) > tau; }

HurstEstimate semimartingale_gate(const PriceSeries& series, const EstimationConfig& cfg,
                                  HurstEstimate est, const std::array<double, 3>& gamma_hats) {
    const double delta = series.delta;
    const double t = cfg.resolve_t(series);
    const long kt = k_tilde_of(delta);
    double v2 = v_hat(series, cfg.ell2, kt, t).value_hat;

    double s = 0.0;
    for (int nu = 1; nu <= 3; ++nu)
        s += gamma_nu(nu, cfg.ell2, 1.0, cfg.ell2, 1.0, 0.5, true) *
             gamma_hats[static_cast<std::size_t>(nu - 1)];
    if (s < 0.0) {
        std::ostringstream os;
        os << "gate stage: negative variance aggregate " << s
           << " under the square root (inconsistent Gamma-hat estimates)";
        throw numeric_error(os.str());
    }
    double tau = std::pow(delta, 0.75) * std::log(1.0 / delta) * std::sqrt(s);
    est.diagnostics["tau"] = tau;
    est.diagnostics["v_hat_gate_l2"] = v2;
    est.gate_passed = gate_decision(v2, tau);
    est.final_h = est.gate_passed ? est.hat_h : 0.5;
    return est;
}

double scaling_regression_baseline(const PriceSeries& series, long k_day,
                                   const std::vector<double>& q_list,
                                   const std::vector<long>& lag_list) {
    series.validate();
    if (k_day < 1) throw config_error("baseline: k_day must be >= 1");
    if (q_list.empty() || lag_list.empty()) throw config_error("baseline: empty q or lag list");
    const long n_incr = static_cast<long>(series.samples.size()) - 1;
    const long max_lag = *std::max_element(lag_list.begin(), lag_list.end());
    if (n_incr < 2 * k_day * max_lag) throw data_error("baseline: series too short for block/lag choice");

    const long nblocks = n_incr / k_day;
    std::vector<double> log_rv(static_cast<std::size_t>(nblocks));
    for (long j = 0; j < nblocks; ++j) {
        long double s = 0.0L;
        for (long i = j * k_day + 1; i <= (j + 1) * k_day; ++i) {
            long double d = static_cast<long double>(series.samples[static_cast<std::size_t>(i)]) -
                            static_cast<long double>(series.samples[static_cast<std::size_t>(i - 1)]);
            s += d * d;
        }
        if (s == 0.0L) throw data_error("baseline: zero realized variance block (log undefined)");
        log_rv[static_cast<std::size_t>(j)] = static_cast<double>(logl(s));
    }

    double h_sum = 0.0;
    for (double q : q_list) {
        // OLS of log m(q, Delta) on log Delta across the lag list.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double nlag = static_cast<double>(lag_list.size());
        for (long lag : lag_list) {
            long double acc = 0.0L;
            long cnt = 0;
            for (long j = 0; j + lag < nblocks; ++j) {
                double d = log_rv[static_cast<std::size_t>(j + lag)] - log_rv[static_cast<std::size_t>(j)];
                acc += std::pow(std::fabs(d), q);
                ++cnt;
            }
            if (cnt == 0) throw data_error("baseline: no block pairs for lag");
            double x = std::log(static_cast<double>(lag) * static_cast<double>(k_day) * series.delta);
            double y = std::log(static_cast<double>(acc / cnt));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double slope = (nlag * sxy - sx * sy) / (nlag * sxx - sx * sx);
        h_sum += slope / q;
    }
    return h_sum / static_cast<double>(q_list.size());
}

} // namespace roughvol
