#include "roughvol/cli_support.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "roughvol/errors.hpp"
#include "roughvol/rng.hpp"

namespace roughvol {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

bool parses_as_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

double parse_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw config_error("config: cannot parse numeric value for key '" + key + "': '" + s + "'");
    return v;
}

long long parse_ll(const std::string& key, const std::string& s) {
    double v = parse_double(key, s);
    if (v != std::floor(v)) throw config_error("config: key '" + key + "' must be an integer");
    return static_cast<long long>(v);
}

double timer_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

PriceSeries ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("ingest: cannot open file " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("ingest: empty file " + path);
    auto header = split_csv_line(line);
    if (header.size() < 2) throw data_error("ingest: header must have at least 2 columns");
    if (parses_as_number(header[0]))
        throw data_error("ingest: header row required (first line looks like data)");
    const bool dump_mode = header.size() >= 2 && header[1] == "x"; // simulator dump

    std::vector<double> times, values;
    long row = 0; // 1-based index among data rows
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        ++row;
        auto cells = split_csv_line(t);
        if (cells.size() < 2) throw data_error("ingest: too few columns at row " + std::to_string(row));
        if (!parses_as_number(cells[0]) || !parses_as_number(cells[1]))
            throw data_error("ingest: non-numeric value at row " + std::to_string(row));
        double ts = std::strtod(cells[0].c_str(), nullptr);
        double p = std::strtod(cells[1].c_str(), nullptr);
        times.push_back(ts);
        if (dump_mode) {
            values.push_back(p); // already a log price
        } else {
            if (!(p > 0.0))
                throw data_error("ingest: non-positive price at row " + std::to_string(row));
            values.push_back(std::log(p));
        }
    }
    if (times.size() < 2) throw data_error("ingest: fewer than 2 data rows");

    std::vector<double> diffs(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) diffs[i] = times[i + 1] - times[i];
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    double delta = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0) delta = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    if (!(delta > 0.0)) throw data_error("ingest: non-increasing timestamps");
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (std::fabs(diffs[i] - delta) > 1e-6 * delta)
            throw data_error("ingest: non-uniform time grid at row " + std::to_string(i + 2));
    }

    PriceSeries out;
    out.samples = std::move(values);
    out.delta = delta;
    out.label = path;
    out.validate();
    return out;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw config_error("config: malformed line '" + t + "' in " + path);
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw config_error("config: empty key in " + path);
        kv[key] = val;
    }
    return kv;
}

EstimationConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    EstimationConfig cfg;
    for (const auto& [key, val] : kv) {
        if (key == "ell1")
            cfg.ell1 = static_cast<int>(parse_ll(key, val));
        else if (key == "ell2")
            cfg.ell2 = static_cast<int>(parse_ll(key, val));
        else if (key == "q")
            cfg.q = parse_double(key, val);
        else if (key == "rho_r")
            cfg.rho_r = parse_double(key, val);
        else if (key == "lambda")
            cfg.lambda = parse_double(key, val);
        else if (key == "h_lo")
            cfg.h_lo = parse_double(key, val);
        else if (key == "h_hi")
            cfg.h_hi = parse_double(key, val);
        else if (key == "invert_tol")
            cfg.invert_tol = parse_double(key, val);
        else if (key == "seed_u")
            cfg.seed_u = static_cast<std::uint64_t>(parse_ll(key, val));
        else if (key == "t")
            cfg.t = parse_double(key, val);
        else if (key == "ci_level")
            cfg.ci_level = parse_double(key, val);
        else
            throw config_error("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ModelParams model_from_kv(const std::map<std::string, std::string>& kv) {
    ModelParams p;
    for (const auto& [key, val] : kv) {
        if (key == "h")
            p.H = parse_double(key, val);
        else if (key == "h_eta")
            p.H_eta = parse_double(key, val);
        else if (key == "h_etahat")
            p.H_etahat = parse_double(key, val);
        else if (key == "c0")
            p.c0 = parse_double(key, val);
        else if (key == "eta0")
            p.eta0 = parse_double(key, val);
        else if (key == "etahat0")
            p.etahat0 = parse_double(key, val);
        else if (key == "a")
            p.a = parse_double(key, val);
        else if (key == "b")
            p.b = parse_double(key, val);
        else if (key == "c_min")
            p.c_min = parse_double(key, val);
        else if (key.rfind("theta", 0) == 0 && key.size() == 6 && key[5] >= '1' && key[5] <= '4')
            p.theta_vec[static_cast<std::size_t>(key[5] - '1')] = parse_double(key, val);
        else if (key.rfind("vartheta", 0) == 0 && key.size() == 9 && key[8] >= '1' && key[8] <= '4')
            p.vartheta_vec[static_cast<std::size_t>(key[8] - '1')] = parse_double(key, val);
        else if (key.rfind("rho_w", 0) == 0 && key.size() == 6 && key[5] >= '1' && key[5] <= '4')
            p.rho[static_cast<std::size_t>(key[5] - '1')] = parse_double(key, val);
        else if (key.rfind("rho_what", 0) == 0 && key.size() == 9 && key[8] >= '1' && key[8] <= '4')
            p.rho[4 + static_cast<std::size_t>(key[8] - '1')] = parse_double(key, val);
        else
            throw config_error("model: unknown key '" + key + "'");
    }
    p.validate();
    return p;
}

nlohmann::json config_echo_json(const EstimationConfig& cfg) {
    return nlohmann::json{{"ell1", cfg.ell1},
                          {"ell2", cfg.ell2},
                          {"q", cfg.q},
                          {"rho_r", cfg.rho_r},
                          {"lambda", cfg.lambda},
                          {"h_lo", cfg.h_lo},
                          {"h_hi", cfg.h_hi},
                          {"invert_tol", cfg.invert_tol},
                          {"seed_u", cfg.seed_u},
                          {"t", cfg.t},
                          {"ci_level", cfg.ci_level}};
}

nlohmann::json model_echo_json(const ModelParams& p) {
    return nlohmann::json{{"h", p.H},
                          {"h_eta", p.H_eta},
                          {"h_etahat", p.H_etahat},
                          {"c0", p.c0},
                          {"eta0", p.eta0},
                          {"etahat0", p.etahat0},
                          {"a", p.a},
                          {"b", p.b},
                          {"theta", p.theta_vec},
                          {"vartheta", p.vartheta_vec},
                          {"rho", p.rho},
                          {"c_min", p.c_min}};
}

void write_market_csv(const SimulatedMarket& market, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("simulate: cannot write file " + path);
    out << "t,x,c,sigma,eta,etahat\n";
    const double delta = market.series.delta;
    for (std::size_t i = 0; i < market.series.samples.size(); ++i) {
        out << fmt17(static_cast<double>(i) * delta) << ',' << fmt17(market.series.samples[i]) << ','
            << fmt17(market.c_path[i]) << ',' << fmt17(market.sigma_path[i]) << ','
            << fmt17(market.eta_path[i]) << ',' << fmt17(market.etahat_path[i]) << '\n';
    }
    if (!out) throw data_error("simulate: write failure on " + path);
}

RunReport run_estimate(const PriceSeries& series, const EstimationConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    HurstEstimate est = final_estimate(series, cfg);
    double t_est = timer_seconds(t0);

    auto t1 = std::chrono::steady_clock::now();
    AsymptoticSpec spec = asymptotic_spec(series, cfg, est);
    est.ci = spec.ci;
    est = semimartingale_gate(series, cfg, est, spec.gamma_hats);
    double t_asym = timer_seconds(t1);

    RunReport rep;
    rep.doc["command"] = "estimate";
    rep.doc["config_echo"] = config_echo_json(cfg);
    rep.doc["estimate"] = nlohmann::json{{"pilot", est.pilot},
                                         {"iterates", est.iterates},
                                         {"m_hat", est.m_hat},
                                         {"bar_h", est.bar_h},
                                         {"h_u", est.h_u},
                                         {"k_hat", est.k_hat},
                                         {"hat_h", est.hat_h},
                                         {"final_h", est.final_h},
                                         {"gate_passed", est.gate_passed},
                                         {"ci", {est.ci.first, est.ci.second}},
                                         {"clamped", est.clamped},
                                         {"diagnostics", est.diagnostics}};
    rep.doc["asymptotics"] = nlohmann::json{{"gamma_hats", spec.gamma_hats},
                                            {"variance", spec.variance},
                                            {"rate", spec.rate},
                                            {"ci", {spec.ci.first, spec.ci.second}},
                                            {"kappa_optimal", spec.kappa_optimal}};
    rep.doc["timings"] = nlohmann::json{{"estimate_seconds", t_est},
                                        {"asymptotics_seconds", t_asym},
                                        {"total_seconds", t_est + t_asym}};
    return rep;
}

namespace {

struct McRow {
    bool ok = false;
    std::string error;
    double pilot = std::nan(""), bar_h = std::nan(""), hat_h = std::nan(""), final_h = std::nan("");
    double ci_lo = std::nan(""), ci_hi = std::nan("");
    bool gate_passed = false;
    bool covered = false;
    bool clamp_warning = false;
    std::uint64_t seed = 0;
};

struct McAggregate {
    long n = 0;
    double delta = 0.0;
    int reps = 0;
    int failures = 0;
    double bias_pilot = 0, bias_bar = 0, bias_hat = 0, bias_final = 0;
    double rmse_pilot = 0, rmse_bar = 0, rmse_hat = 0, rmse_final = 0;
    double coverage = 0, gate_pass_rate = 0;
    int clamp_warnings = 0;
    std::string table_path;
};

McAggregate aggregate_rows(const std::vector<McRow>& rows, double true_h, long n) {
    McAggregate agg;
    agg.n = n;
    agg.delta = 1.0 / static_cast<double>(n);
    agg.reps = static_cast<int>(rows.size());
    long double sb[4] = {0, 0, 0, 0}, ss[4] = {0, 0, 0, 0};
    long covered = 0, gates = 0, ok = 0;
    for (const auto& r : rows) {
        if (!r.ok) {
            ++agg.failures;
            continue;
        }
        ++ok;
        double e[4] = {r.pilot - true_h, r.bar_h - true_h, r.hat_h - true_h, r.final_h - true_h};
        for (int j = 0; j < 4; ++j) {
            sb[j] += e[j];
            ss[j] += static_cast<long double>(e[j]) * e[j];
        }
        if (r.covered) ++covered;
        if (r.gate_passed) ++gates;
        if (r.clamp_warning) ++agg.clamp_warnings;
    }
    if (ok > 0) {
        agg.bias_pilot = static_cast<double>(sb[0] / ok);
        agg.bias_bar = static_cast<double>(sb[1] / ok);
        agg.bias_hat = static_cast<double>(sb[2] / ok);
        agg.bias_final = static_cast<double>(sb[3] / ok);
        agg.rmse_pilot = std::sqrt(static_cast<double>(ss[0] / ok));
        agg.rmse_bar = std::sqrt(static_cast<double>(ss[1] / ok));
        agg.rmse_hat = std::sqrt(static_cast<double>(ss[2] / ok));
        agg.rmse_final = std::sqrt(static_cast<double>(ss[3] / ok));
        agg.coverage = static_cast<double>(covered) / static_cast<double>(ok);
        agg.gate_pass_rate = static_cast<double>(gates) / static_cast<double>(ok);
    }
    return agg;
}

void write_replicate_csv(const std::vector<McRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("mc: cannot write file " + path);
    out << "replicate,seed,ok,pilot,bar_h,hat_h,final_h,ci_lo,ci_hi,gate_passed,covered,"
           "clamp_warning,error\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << i << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << fmt17(r.pilot) << ','
            << fmt17(r.bar_h) << ',' << fmt17(r.hat_h) << ',' << fmt17(r.final_h) << ','
            << fmt17(r.ci_lo) << ',' << fmt17(r.ci_hi) << ',' << (r.gate_passed ? 1 : 0) << ','
            << (r.covered ? 1 : 0) << ',' << (r.clamp_warning ? 1 : 0) << ',' << err << '\n';
    }
    if (!out) throw data_error("mc: write failure on " + path);
}

nlohmann::json aggregate_json(const McAggregate& a) {
    return nlohmann::json{{"n", a.n},
                          {"delta", a.delta},
                          {"reps", a.reps},
                          {"failures", a.failures},
                          {"bias_pilot", a.bias_pilot},
                          {"bias_bar_h", a.bias_bar},
                          {"bias_hat_h", a.bias_hat},
                          {"bias_final_h", a.bias_final},
                          {"rmse_pilot", a.rmse_pilot},
                          {"rmse_bar_h", a.rmse_bar},
                          {"rmse_hat_h", a.rmse_hat},
                          {"rmse_final_h", a.rmse_final},
                          {"coverage", a.coverage},
                          {"gate_pass_rate", a.gate_pass_rate},
                          {"clamp_warnings", a.clamp_warnings},
                          {"replicate_table", a.table_path}};
}

} // namespace

RunReport run_mc_study(const ModelParams& model, const std::vector<long>& n_ladder, int reps,
                       const EstimationConfig& cfg, std::uint64_t master_seed,
                       const std::string& out_dir) {
    model.validate();
    cfg.validate();
    if (reps < 1) throw config_error("mc: reps must be >= 1");
    if (n_ladder.empty()) throw config_error("mc: empty n ladder");
    for (long n : n_ladder)
        if (n < 8) throw config_error("mc: n must be >= 8");
    std::filesystem::create_directories(out_dir);

    std::vector<McAggregate> aggs;
    for (long n : n_ladder) {
        const double delta = 1.0 / static_cast<double>(n);
        std::vector<McRow> rows(static_cast<std::size_t>(reps));
        const std::uint64_t n_seed = mix_seed(master_seed, static_cast<std::uint64_t>(n));
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= reps) return;
                McRow& row = rows[static_cast<std::size_t>(i)];
                row.seed = mix_seed(n_seed, static_cast<std::uint64_t>(i));
                try {
                    SimulatedMarket mkt = simulate_market(model, n, delta, row.seed);
                    row.clamp_warning = mkt.clamp_warning;
                    HurstEstimate est = final_estimate(mkt.series, cfg);
                    AsymptoticSpec spec = asymptotic_spec(mkt.series, cfg, est);
                    est.ci = spec.ci;
                    est = semimartingale_gate(mkt.series, cfg, est, spec.gamma_hats);
                    row.pilot = est.pilot;
                    row.bar_h = est.bar_h;
                    row.hat_h = est.hat_h;
                    row.final_h = est.final_h;
                    row.ci_lo = est.ci.first;
                    row.ci_hi = est.ci.second;
                    row.gate_passed = est.gate_passed;
                    row.covered = est.ci.first <= model.H && model.H <= est.ci.second;
                    row.ok = true;
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
        };
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(reps));
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();

        McAggregate agg = aggregate_rows(rows, model.H, n);
        // store the table name relative to the summary so the summary bytes do
        // not depend on the output directory
        agg.table_path = "replicates_n" + std::to_string(n) + ".csv";
        std::string table_file = out_dir + "/" + agg.table_path;
        write_replicate_csv(rows, table_file);
        if (5 * agg.failures > reps) {
            std::ostringstream os;
            os << "mc: " << agg.failures << " of " << reps << " replicates failed at n = " << n
               << " (over 20%); see " << table_file;
            throw numeric_error(os.str());
        }
        aggs.push_back(std::move(agg));
    }

    RunReport rep;
    rep.doc["command"] = "mc";
    rep.doc["config_echo"] = config_echo_json(cfg);
    rep.doc["config_echo"]["reps"] = reps;
    rep.doc["config_echo"]["master_seed"] = master_seed;
    rep.doc["config_echo"]["n_ladder"] = n_ladder;
    rep.doc["model_echo"] = model_echo_json(model);
    nlohmann::json per_n = nlohmann::json::array();
    for (const auto& a : aggs) per_n.push_back(aggregate_json(a));
    nlohmann::json summary{{"true_h", model.H}, {"per_n", per_n}};
    if (aggs.size() >= 2) {
        // OLS slope of log RMSE(hat_h) against log delta (and against log n).
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        for (const auto& a : aggs) {
            if (!(a.rmse_hat > 0.0)) continue;
            double x = std::log(a.delta), y = std::log(a.rmse_hat);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        if (cnt >= 2) {
            double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
            summary["rate_slope_log_rmse_vs_log_delta"] = slope;
            summary["rate_slope_log_rmse_vs_log_n"] = -slope;
        }
    }
    rep.doc["mc_summary"] = summary;

    std::ofstream out(out_dir + "/summary.json");
    if (!out) throw data_error("mc: cannot write summary.json in " + out_dir);
    out << rep.to_string();
    if (!out) throw data_error("mc: write failure on summary.json");
    return rep;
}

} // namespace roughvol
