#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughvol/asymptotics.hpp"
#include "roughvol/hurst.hpp"
#include "roughvol/series.hpp"
#include "roughvol/simulate.hpp"

namespace roughvol {

// Self-contained machine-readable result of one CLI command. config_echo
// always lists every effective parameter so a run can be replayed exactly.
struct RunReport {
    nlohmann::json doc;
    std::string to_string() const { return doc.dump(2) + "\n"; }
};

// Reads "timestamp,price" CSV (header required, prices > 0, arithmetic time
// grid within relative tolerance 1e-6); also accepts the simulator dump
// "t,x,c,sigma,eta,etahat", in which case x is taken as the log price.
PriceSeries ingest_csv(const std::string& path);

// Flat key=value files; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
EstimationConfig config_from_kv(const std::map<std::string, std::string>& kv);
ModelParams model_from_kv(const std::map<std::string, std::string>& kv);
nlohmann::json config_echo_json(const EstimationConfig& cfg);
nlohmann::json model_echo_json(const ModelParams& params);

void write_market_csv(const SimulatedMarket& market, const std::string& path);

// Full pipeline: estimate -> variance plug-in -> confidence interval -> gate.
RunReport run_estimate(const PriceSeries& series, const EstimationConfig& cfg);

// Monte Carlo study over one or more sample sizes (delta = 1/n). Writes one
// per-replicate CSV per n plus summary.json into out_dir; returns the summary.
RunReport run_mc_study(const ModelParams& model, const std::vector<long>& n_ladder, int reps,
                       const EstimationConfig& cfg, std::uint64_t master_seed,
                       const std::string& out_dir);

} // namespace roughvol
