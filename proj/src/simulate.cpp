#include "roughvol/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include "roughvol/errors.hpp"
#include "roughvol/rng.hpp"
#include "roughvol/stats.hpp"

namespace roughvol {

namespace {

// FFTW plan creation is not thread-safe; execution is.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

struct ComplexBuf {
    fftw_complex* p = nullptr;
    explicit ComplexBuf(std::size_t n) { p = fftw_alloc_complex(n); }
    ~ComplexBuf() { fftw_free(p); }
    ComplexBuf(const ComplexBuf&) = delete;
    ComplexBuf& operator=(const ComplexBuf&) = delete;
};

void fft_inplace(fftw_complex* buf, std::size_t n, int sign) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
}

// fGN autocovariance at lag j for step delta.
double fgn_gamma(double H, double delta, double j) {
    double t = std::pow(delta, 2.0 * H) * 0.5;
    return t * (std::pow(std::fabs(j + 1.0), 2.0 * H) - 2.0 * std::pow(std::fabs(j), 2.0 * H) +
                std::pow(std::fabs(j - 1.0), 2.0 * H));
}

} // namespace

std::vector<double> sample_fgn(long n, double H, double delta, std::uint64_t seed) {
    if (n < 1) throw config_error("sample_fgn: n must be >= 1");
    if (!(H > 0.0) || !(H < 1.0)) throw config_error("sample_fgn: H must lie in (0, 1)");
    if (!(delta > 0.0)) throw config_error("sample_fgn: delta must be positive");

    const std::size_t m = next_pow2(2 * static_cast<std::size_t>(std::max<long>(n, 2)));
    ComplexBuf buf(m);
    for (std::size_t j = 0; j <= m / 2; ++j) {
        buf.p[j][0] = fgn_gamma(H, delta, static_cast<double>(j));
        buf.p[j][1] = 0.0;
    }
    for (std::size_t j = m / 2 + 1; j < m; ++j) {
        buf.p[j][0] = buf.p[m - j][0];
        buf.p[j][1] = 0.0;
    }
    fft_inplace(buf.p, m, FFTW_FORWARD);

    std::vector<double> lambda(m);
    double lmax = 0.0, lmin = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        lambda[j] = buf.p[j][0];
        lmax = std::max(lmax, lambda[j]);
        lmin = std::min(lmin, lambda[j]);
    }
    if (lmin < -1e-8 * std::max(lmax, 1.0)) {
        std::ostringstream os;
        os << "sample_fgn: circulant embedding produced negative eigenvalue " << lmin
           << " beyond tolerance (n=" << n << ", H=" << H << ")";
        throw numeric_error(os.str());
    }
    for (std::size_t j = 0; j < m; ++j) lambda[j] = std::max(lambda[j], 0.0);

    Rng rng(seed);
    buf.p[0][0] = std::sqrt(lambda[0]) * rng.normal();
    buf.p[0][1] = 0.0;
    buf.p[m / 2][0] = std::sqrt(lambda[m / 2]) * rng.normal();
    buf.p[m / 2][1] = 0.0;
    for (std::size_t j = 1; j < m / 2; ++j) {
        double s = std::sqrt(0.5 * lambda[j]);
        double re = s * rng.normal();
        double im = s * rng.normal();
        buf.p[j][0] = re;
        buf.p[j][1] = im;
        buf.p[m - j][0] = re;
        buf.p[m - j][1] = -im;
    }
    fft_inplace(buf.p, m, FFTW_FORWARD);

    std::vector<double> out(static_cast<std::size_t>(n));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = buf.p[i][0] * scale;
    return out;
}

std::vector<double> rl_convolve_fft(const std::vector<double>& kernel, const std::vector<double>& u) {
    const std::size_t n = u.size();
    std::vector<double> out(n + 1, 0.0);
    if (n == 0) return out;
    if (kernel.size() < n) throw numeric_error("rl_convolve_fft: kernel shorter than input");
    const std::size_t m = next_pow2(2 * n + 1);
    ComplexBuf a(m), b(m);
    for (std::size_t j = 0; j < m; ++j) {
        a.p[j][0] = (j >= 1 && j <= n) ? kernel[j - 1] : 0.0;
        a.p[j][1] = 0.0;
        b.p[j][0] = (j < n) ? u[j] : 0.0;
        b.p[j][1] = 0.0;
    }
    fft_inplace(a.p, m, FFTW_FORWARD);
    fft_inplace(b.p, m, FFTW_FORWARD);
    for (std::size_t j = 0; j < m; ++j) {
        double re = a.p[j][0] * b.p[j][0] - a.p[j][1] * b.p[j][1];
        double im = a.p[j][0] * b.p[j][1] + a.p[j][1] * b.p[j][0];
        a.p[j][0] = re;
        a.p[j][1] = im;
    }
    fft_inplace(a.p, m, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 1; i <= n; ++i) out[i] = a.p[i][0] * scale;
    return out;
}

std::vector<double> rl_convolve_direct(const std::vector<double>& kernel, const std::vector<double>& u) {
    const std::size_t n = u.size();
    if (kernel.size() < n && n > 0) throw numeric_error("rl_convolve_direct: kernel shorter than input");
    std::vector<double> out(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        long double s = 0.0L;
        for (std::size_t mm = 1; mm <= i; ++mm)
            s += static_cast<long double>(kernel[mm - 1]) * static_cast<long double>(u[i - mm]);
        out[i] = static_cast<double>(s);
    }
    return out;
}

void ModelParams::validate() const {
    auto in01h = [](double h) { return h > 0.0 && h <= 0.5; };
    if (!in01h(H)) throw config_error("model: H must lie in (0, 1/2]");
    if (!in01h(H_eta)) throw config_error("model: H_eta must lie in (0, 1/2]");
    if (!in01h(H_etahat)) throw config_error("model: H_etahat must lie in (0, 1/2]");
    if (!(c0 > 0.0)) throw config_error("model: c0 must be positive");
    if (eta0 < 0.0 || etahat0 < 0.0) throw config_error("model: eta0, etahat0 must be >= 0");
    if (!(c_min > 0.0) || !(c_min < c0)) throw config_error("model: need 0 < c_min < c0");
    // PSD check of the 6-dim driver correlation [[I2, R],[R^T, I4]] via Cholesky.
    double mtx[6][6] = {};
    for (int i = 0; i < 6; ++i) mtx[i][i] = 1.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) {
            mtx[r][2 + c] = rho[static_cast<std::size_t>(4 * r + c)];
            mtx[2 + c][r] = mtx[r][2 + c];
        }
    double chol[6][6] = {};
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = mtx[i][j];
            for (int kk = 0; kk < j; ++kk) s -= chol[i][kk] * chol[j][kk];
            if (i == j) {
                if (s < -1e-12) throw config_error("model: driver correlation matrix is not PSD");
                chol[i][i] = std::sqrt(std::max(s, 0.0));
            } else if (chol[j][j] > 1e-12) {
                chol[i][j] = s / chol[j][j];
            } else if (std::fabs(s) > 1e-12) {
                // zero pivot with nonzero residual: semidefinite rank deficiency
                // that the remaining columns cannot represent
                throw config_error("model: driver correlation matrix is not PSD");
            } else {
                chol[i][j] = 0.0;
            }
        }
    }
}

namespace {

// Lower Cholesky factor of the 6-dim driver correlation; validate() guarantees PSD.
void driver_chol(const ModelParams& p, double chol[6][6]) {
    double mtx[6][6] = {};
    for (int i = 0; i < 6; ++i) mtx[i][i] = 1.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) {
            mtx[r][2 + c] = p.rho[static_cast<std::size_t>(4 * r + c)];
            mtx[2 + c][r] = mtx[r][2 + c];
        }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) chol[i][j] = 0.0;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = mtx[i][j];
            for (int kk = 0; kk < j; ++kk) s -= chol[i][kk] * chol[j][kk];
            if (i == j)
                chol[i][i] = std::sqrt(std::max(s, 0.0));
            else
                chol[i][j] = (chol[j][j] > 0.0) ? s / chol[j][j] : 0.0;
        }
    }
}

} // namespace

SimulatedMarket simulate_market(const ModelParams& params, long n, double delta, std::uint64_t seed) {
    params.validate();
    if (n < 2) throw config_error("simulate_market: n must be >= 2");
    if (!(delta > 0.0)) throw config_error("simulate_market: delta must be positive");

    const std::size_t N = static_cast<std::size_t>(n);
    const double sq_delta = std::sqrt(delta);

    double chol[6][6];
    driver_chol(params, chol);

    // Correlated Brownian increments: rows (W, What, Wbar1..4).
    std::vector<std::vector<double>> dB(6, std::vector<double>(N));
    Rng rng(seed);
    for (std::size_t i = 0; i < N; ++i) {
        double z[6];
        for (double& zz : z) zz = rng.normal();
        for (int r = 0; r < 6; ++r) {
            double s = 0.0;
            for (int c = 0; c <= r; ++c) s += chol[r][c] * z[c];
            dB[static_cast<std::size_t>(r)][i] = s * sq_delta;
        }
    }

    SimulatedMarket mkt;
    mkt.params = params;
    mkt.seed = seed;
    mkt.dW = dB[0];

    auto vov_path = [&](double level0, double h_vov, const std::array<double, 4>& load) {
        std::vector<double> sq(N + 1, level0 * level0);
        bool active = false;
        for (double l : load) active = active || l != 0.0;
        if (active) {
            std::vector<double> u(N, 0.0);
            for (std::size_t i = 0; i < N; ++i)
                for (int c = 0; c < 4; ++c)
                    u[i] += load[static_cast<std::size_t>(c)] * dB[static_cast<std::size_t>(2 + c)][i];
            std::vector<double> kern(N);
            for (std::size_t m = 1; m <= N; ++m)
                kern[m - 1] = g_kernel(h_vov, static_cast<double>(m) * delta);
            std::vector<double> conv = rl_convolve_fft(kern, u);
            for (std::size_t i = 0; i <= N; ++i) {
                double v = level0 * level0 + conv[i];
                if (v < 0.0) {
                    v = 0.0;
                    ++mkt.clamp_count;
                }
                sq[i] = v;
            }
        }
        std::vector<double> path(N + 1);
        for (std::size_t i = 0; i <= N; ++i) path[i] = std::sqrt(sq[i]);
        return path;
    };

    mkt.eta_path = vov_path(params.eta0, params.H_eta, params.theta_vec);
    mkt.etahat_path = vov_path(params.etahat0, params.H_etahat, params.vartheta_vec);

    // c_t = c0 + a t + RL-convolution of (eta dW + etahat dWhat) with g_H.
    mkt.c_path.assign(N + 1, params.c0);
    {
        std::vector<double> u(N);
        for (std::size_t i = 0; i < N; ++i)
            u[i] = mkt.eta_path[i] * dB[0][i] + mkt.etahat_path[i] * dB[1][i];
        bool active = false;
        for (double v : u)
            if (v != 0.0) {
                active = true;
                break;
            }
        std::vector<double> conv;
        if (active) {
            std::vector<double> kern(N);
            for (std::size_t m = 1; m <= N; ++m)
                kern[m - 1] = g_kernel(params.H, static_cast<double>(m) * delta);
            conv = rl_convolve_fft(kern, u);
        } else {
            conv.assign(N + 1, 0.0);
        }
        for (std::size_t i = 0; i <= N; ++i) {
            double v = params.c0 + params.a * static_cast<double>(i) * delta + conv[i];
            if (v < params.c_min) {
                v = params.c_min;
                ++mkt.clamp_count;
            }
            mkt.c_path[i] = v;
        }
    }
    mkt.sigma_path.assign(N + 1, 0.0);
    for (std::size_t i = 0; i <= N; ++i) mkt.sigma_path[i] = std::sqrt(mkt.c_path[i]);

    mkt.clamp_warning = mkt.clamp_count > static_cast<long>((N + 1) / 20);

    // Left-point Euler for the log price.
    mkt.series.delta = delta;
    mkt.series.samples.assign(N + 1, 0.0);
    for (std::size_t i = 1; i <= N; ++i)
        mkt.series.samples[i] = mkt.series.samples[i - 1] + params.b * delta +
                                mkt.sigma_path[i - 1] * dB[0][i - 1];
    return mkt;
}

std::array<double, 3> true_gammas(const SimulatedMarket& market, double t) {
    const double delta = market.series.delta;
    const std::size_t last = static_cast<std::size_t>(
        std::min<long long>(floor_frac(t / delta).first,
                            static_cast<long long>(market.c_path.size()) - 1));
    long double g1 = 0.0L, g2 = 0.0L, g3 = 0.0L;
    auto vov2 = [&](std::size_t i) {
        double e = market.eta_path[i], eh = market.etahat_path[i];
        return e * e + eh * eh;
    };
    for (std::size_t i = 0; i < last; ++i) {
        double c0 = market.c_path[i], c1 = market.c_path[i + 1];
        double v0 = vov2(i), v1 = vov2(i + 1);
        g1 += 0.5L * (std::pow(c0, 4.0) + std::pow(c1, 4.0));
        g2 += 0.5L * (static_cast<long double>(v0) * v0 + static_cast<long double>(v1) * v1);
        g3 += 0.5L * (static_cast<long double>(c0) * c0 * v0 + static_cast<long double>(c1) * c1 * v1);
    }
    return {static_cast<double>(g1 * delta), static_cast<double>(g2 * delta),
            static_cast<double>(g3 * delta)};
}

double bias_oracle(const SimulatedMarket& market, int ell, long k, double t) {
    if (ell < 2) throw config_error("bias_oracle: ell must be >= 2");
    const double H = market.params.H;
    const double delta = market.series.delta;
    const double kd = static_cast<double>(k) * delta;

    // Window-shape factor at the right cell endpoint ({u/delta} -> 1): a third
    // forward difference of x_+^{H+1/2}; constant across cells.
    auto fplus = [&](double x) { return x > 0.0 ? std::pow(x, H + 0.5) : 0.0; };
    auto d3 = [&](double x) { return fplus(x + 3.0) - 3.0 * fplus(x + 2.0) + 3.0 * fplus(x + 1.0) - fplus(x); };
    long double wf = 0.0L;
    for (long i = 0; i < k; ++i)
        wf += d3(static_cast<double>(ell) - 1.0 -
                 (static_cast<double>(i) + 1.0) / static_cast<double>(k));
    wf /= static_cast<long double>(k);

    const long long jmax = std::min<long long>(floor_frac(t / delta).first,
                                               static_cast<long long>(market.dW.size()));
    long double s = 0.0L;
    for (long long j = 0; j + 1 <= jmax; ++j) {
        std::size_t jj = static_cast<std::size_t>(j);
        long double inner = static_cast<long double>(market.sigma_path[jj]) * market.dW[jj];
        long double fac = static_cast<long double>(market.sigma_path[jj + 1]) * market.eta_path[jj + 1] -
                          static_cast<long double>(market.sigma_path[jj]) * market.eta_path[jj];
        s += inner * fac;
    }
    s *= static_cast<long double>(delta);

    double pref = -(2.0 / k_h(H)) / (H + 0.5) * std::pow(kd, -0.5 - H);
    return static_cast<double>(pref * wf * s);
}

} // namespace roughvol
