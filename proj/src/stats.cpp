#include "roughvol/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughvol/errors.hpp"

namespace roughvol {

void PriceSeries::validate() const {
    if (samples.size() < 2) throw data_error("price series needs at least 2 samples");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw data_error("delta must be positive and finite");
    for (double v : samples)
        if (!std::isfinite(v)) throw data_error("non-finite log price in series");
}

std::pair<long long, double> floor_frac(double x) {
    if (!std::isfinite(x)) throw data_error("floor_frac: non-finite input");
    double fl = std::floor(x);
    double frac = x - fl;
    if (frac >= 1.0) frac = 0.0; // guard against rounding at integer inputs
    return {static_cast<long long>(fl), frac};
}

namespace {
constexpr double kBinom4[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
} // namespace

double central_diff4(const std::function<double(double)>& f, double h, double x) {
    double s = 0.0;
    for (int i = 0; i <= 4; ++i) s += kBinom4[i] * f(x + (2 - i) * h);
    return s;
}

double double_central_diff4(double alpha, double theta, double theta_p, double a, double b,
                            combine_sign sign) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(alpha))
        throw numeric_error("double_central_diff4: non-finite input");
    long double s = 0.0L;
    for (int i = 0; i <= 4; ++i) {
        double u = a + (2 - i) * theta;
        for (int j = 0; j <= 4; ++j) {
            double v = b + (2 - j) * theta_p;
            double arg = (sign == combine_sign::minus) ? u - v : u + v;
            double mag = std::fabs(arg);
            double term = (mag > 0.0) ? std::pow(mag, alpha) : 0.0;
            s += static_cast<long double>(kBinom4[i] * kBinom4[j]) * term;
        }
    }
    return static_cast<double>(s);
}

double k_h(double H) {
    return std::tgamma(H + 0.5) / std::sqrt(std::sin(M_PI * H) * std::tgamma(2.0 * H + 1.0));
}

double g_kernel(double H, double t) {
    if (t <= 0.0) return 0.0;
    return std::pow(t, H - 0.5) / k_h(H);
}

double phi_const(double H, int ell) {
    if (!(H > 0.0) || H > 0.5) throw numeric_error("phi_const: H must lie in (0, 1/2]");
    if (ell < 2) throw numeric_error("phi_const: ell must be >= 2");
    double p = 2.0 * H + 2.0;
    double l = static_cast<double>(ell);
    double num = std::pow(l + 2.0, p) - 4.0 * std::pow(l + 1.0, p) + 6.0 * std::pow(l, p) -
                 4.0 * std::pow(l - 1.0, p) + std::pow(l - 2.0, p);
    return num / (2.0 * (2.0 * H + 1.0) * (2.0 * H + 2.0));
}

namespace {

// Antiderivative-of-the-kernel primitive G_H(t) = K_H^{-1} t_+^{H+1/2} / (H+1/2).
double big_g(double H, double invK, double t) {
    if (t <= 0.0) return 0.0;
    return invK / (H + 0.5) * std::pow(t, H + 0.5);
}

double d2_big_g(double H, double invK, double v) {
    return big_g(H, invK, v + 2.0) - 2.0 * big_g(H, invK, v + 1.0) + big_g(H, invK, v);
}

} // namespace

double phi_const_integral(double H, int ell) {
    if (!(H > 0.0) || !(H < 0.5)) throw numeric_error("phi_const_integral: H must lie in (0, 1/2)");
    if (ell < 2) throw numeric_error("phi_const_integral: ell must be >= 2");
    const double invK = 1.0 / k_h(H);
    auto f = [&](double v) { return d2_big_g(H, invK, v) * d2_big_g(H, invK, v + ell); };

    // Cutoff from the tail bound: |second difference| ~ c2 * v^{H-3/2}, so the tail
    // integral beyond V is ~ c2^2 V^{2H-2}/(2-2H). Choose V so this is < 1e-10, then
    // add the analytic tail estimate back as a correction.
    const double c2 = invK * std::fabs(H - 0.5);
    double vcut = std::pow(1e-10 * (2.0 - 2.0 * H) / (c2 * c2), 1.0 / (2.0 * H - 2.0));
    vcut = std::max(vcut, 64.0);

    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    double err_total = 0.0;
    // Segment at the kink locations of the first factor, then dyadically.
    std::vector<double> pts = {-2.0, -1.0, 0.0, 1.0, 2.0};
    double hi = 2.0;
    while (hi < vcut) {
        hi = std::min(2.0 * hi, vcut);
        pts.push_back(hi);
    }
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        double e = 0.0;
        total += quad::integrate(f, pts[s], pts[s + 1], 12, 1e-12, &e);
        err_total += e;
    }
    // Tail correction: integrate the asymptotic product with midpoint offset.
    double vend = pts.back();
    double mid = 0.5 * (2.0 + static_cast<double>(ell) + 2.0); // (2 + (ell+2))/2
    total += c2 * c2 * std::pow(vend + mid, 2.0 * H - 2.0) / (2.0 - 2.0 * H);

    if (err_total > 1e-7) {
        std::ostringstream os;
        os << "phi_const_integral: quadrature did not converge (achieved error " << err_total << ")";
        throw numeric_error(os.str());
    }
    return total;
}

double spot_vol(const PriceSeries& series, double t, long k) {
    series.validate();
    if (k < 1) throw data_error("spot_vol: k must be >= 1");
    const double delta = series.delta;
    long long i0 = floor_frac(t / delta).first;
    long long i1 = floor_frac((t + static_cast<double>(k) * delta) / delta).first - 1;
    long long nmax = static_cast<long long>(series.samples.size()) - 1;
    if (i0 < 1 || i1 > nmax) throw data_error("spot_vol: window exceeds series");
    long double s = 0.0L;
    for (long long i = i0; i <= i1; ++i) {
        long double d = static_cast<long double>(series.samples[static_cast<std::size_t>(i)]) -
                        static_cast<long double>(series.samples[static_cast<std::size_t>(i - 1)]);
        s += d * d;
    }
    return static_cast<double>(s / (static_cast<long double>(k) * delta));
}

VhatComputer::VhatComputer(const PriceSeries& series) : delta_(series.delta) {
    series.validate();
    const std::size_t n = series.samples.size();
    prefix_.assign(n, 0.0L);
    for (std::size_t i = 1; i < n; ++i) {
        long double d = static_cast<long double>(series.samples[i]) -
                        static_cast<long double>(series.samples[i - 1]);
        prefix_[i] = prefix_[i - 1] + d * d;
    }
}

double VhatComputer::spot(long i, long k) const {
    return static_cast<double>((prefix_[static_cast<std::size_t>(i + k - 1)] -
                                prefix_[static_cast<std::size_t>(i - 1)]) /
                               (static_cast<long double>(k) * delta_));
}

AutocovStat VhatComputer::v_hat(int ell, long k, double t) const {
    if (ell < 0) throw data_error("v_hat: ell must be >= 0");
    if (k < 1) throw data_error("v_hat: k must be >= 1");
    long long it = floor_frac(t / delta_).first;
    if (it > n_increments()) throw data_error("v_hat: t exceeds series horizon");
    long long imax = it - (static_cast<long long>(ell) + 2) * k + 1;
    if (imax < 1) {
        std::ostringstream os;
        os << "series too short for (ell,k) = (" << ell << "," << k << ")";
        throw data_error(os.str());
    }
    long double acc = 0.0L;
    const long lk = static_cast<long>(ell) * k;
    for (long long i = 1; i <= imax; ++i) {
        long double a = static_cast<long double>(spot(static_cast<long>(i) + k, k)) -
                        static_cast<long double>(spot(static_cast<long>(i), k));
        long double b = static_cast<long double>(spot(static_cast<long>(i) + lk + k, k)) -
                        static_cast<long double>(spot(static_cast<long>(i) + lk, k));
        acc += a * b;
    }
    AutocovStat out;
    out.ell = ell;
    out.k = k;
    out.t = t;
    out.value_hat = static_cast<double>(acc * static_cast<long double>(delta_));
    return out;
}

double VhatComputer::v_tilde(int ell, long k, double t, double H) const {
    if (!(H > 0.0) || H > 0.5) throw numeric_error("v_tilde: H must lie in (0, 1/2]");
    return std::pow(static_cast<double>(k) * delta_, -2.0 * H) * v_hat(ell, k, t).value_hat;
}

AutocovStat v_hat(const PriceSeries& series, int ell, long k, double t) {
    return VhatComputer(series).v_hat(ell, k, t);
}

double v_tilde(const PriceSeries& series, int ell, long k, double t, double H) {
    return VhatComputer(series).v_tilde(ell, k, t, H);
}

double v_hat_bruteforce(const PriceSeries& series, int ell, long k, double t) {
    series.validate();
    const double delta = series.delta;
    long long it = floor_frac(t / delta).first;
    long long imax = it - (static_cast<long long>(ell) + 2) * k + 1;
    if (imax < 1) throw data_error("series too short for (ell,k)");
    auto chat = [&](long long i) {
        long double s = 0.0L;
        for (long long j = i; j <= i + k - 1; ++j) {
            long double d = static_cast<long double>(series.samples[static_cast<std::size_t>(j)]) -
                            static_cast<long double>(series.samples[static_cast<std::size_t>(j - 1)]);
            s += d * d;
        }
        return s / (static_cast<long double>(k) * delta);
    };
    long double acc = 0.0L;
    for (long long i = 1; i <= imax; ++i) {
        long double a = chat(i + k) - chat(i);
        long double b = chat(i + (static_cast<long long>(ell) + 1) * k) -
                        chat(i + static_cast<long long>(ell) * k);
        acc += a * b;
    }
    return static_cast<double>(acc * static_cast<long double>(delta));
}

} // namespace roughvol
