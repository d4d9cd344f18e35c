#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "roughvol/cli_support.hpp"
#include "roughvol/errors.hpp"

namespace {

int dispatch(int argc, char** argv) {
    CLI::App app{"Rough-volatility Hurst estimation toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a rough-volatility market");
    std::string sim_model, sim_out;
    long sim_n = 0;
    double sim_delta = 0.0;
    std::uint64_t sim_seed = 0;
    sim->add_option("--model", sim_model, "Model parameter file (key=value)")->required();
    sim->add_option("--n", sim_n, "Number of increments")->required();
    sim->add_option("--delta", sim_delta, "Grid step")->required();
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "Output CSV path")->required();

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the roughness parameter from a price CSV");
    std::string est_data, est_config, est_out;
    est->add_option("--data", est_data, "Input CSV (timestamp,price)")->required();
    est->add_option("--config", est_config, "Estimation config file (key=value)");
    est->add_option("--out", est_out, "Output JSON path (default: stdout)");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo study of the estimator");
    std::string mc_model, mc_config, mc_ladder, mc_outdir;
    int mc_reps = 0;
    long mc_n = 0;
    std::uint64_t mc_seed = 0;
    mc->add_option("--model", mc_model, "Model parameter file")->required();
    mc->add_option("--config", mc_config, "Estimation config file");
    mc->add_option("--reps", mc_reps, "Replicates per sample size")->required();
    mc->add_option("--n", mc_n, "Number of increments (delta = 1/n)");
    mc->add_option("--n-ladder", mc_ladder, "Comma-separated sample sizes, overrides --n");
    mc->add_option("--seed", mc_seed, "Master seed")->required();
    mc->add_option("--out-dir", mc_outdir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4; // command-line usage errors map to the config exit code
    }

    if (sim->parsed()) {
        roughvol::ModelParams params = roughvol::model_from_kv(roughvol::parse_kv_file(sim_model));
        roughvol::SimulatedMarket mkt = roughvol::simulate_market(params, sim_n, sim_delta, sim_seed);
        if (mkt.clamp_warning)
            std::cerr << "warning: positivity clamp fired at " << mkt.clamp_count
                      << " grid points (over 5%); parameter regime may be too wild\n";
        roughvol::write_market_csv(mkt, sim_out);
        return 0;
    }

    if (est->parsed()) {
        roughvol::EstimationConfig cfg;
        if (!est_config.empty()) cfg = roughvol::config_from_kv(roughvol::parse_kv_file(est_config));
        roughvol::PriceSeries series = roughvol::ingest_csv(est_data);
        roughvol::RunReport rep = roughvol::run_estimate(series, cfg);
        if (est_out.empty()) {
            std::cout << rep.to_string();
        } else {
            std::ofstream out(est_out);
            if (!out) throw roughvol::data_error("estimate: cannot write file " + est_out);
            out << rep.to_string();
            if (!out) throw roughvol::data_error("estimate: write failure on " + est_out);
        }
        return 0;
    }

    // mc
    roughvol::ModelParams params = roughvol::model_from_kv(roughvol::parse_kv_file(mc_model));
    roughvol::EstimationConfig cfg;
    if (!mc_config.empty()) cfg = roughvol::config_from_kv(roughvol::parse_kv_file(mc_config));
    std::vector<long> ladder;
    if (!mc_ladder.empty()) {
        std::stringstream ss(mc_ladder);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                ladder.push_back(std::stol(tok));
            } catch (const std::exception&) {
                throw roughvol::config_error("mc: cannot parse --n-ladder entry '" + tok + "'");
            }
        }
    } else if (mc_n > 0) {
        ladder.push_back(mc_n);
    } else {
        throw roughvol::config_error("mc: one of --n or --n-ladder is required");
    }
    roughvol::RunReport rep = roughvol::run_mc_study(params, ladder, mc_reps, cfg, mc_seed, mc_outdir);
    std::cout << rep.to_string();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const roughvol::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const roughvol::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const roughvol::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
