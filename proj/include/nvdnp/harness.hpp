#pragma once

// Subcommand orchestration and artifact emission.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvdnp/config.hpp"

namespace nvdnp {

std::string toolkit_version();

struct RunOptions {
  std::filesystem::path out_dir;  // empty: use the config's output_dir
  unsigned workers = 1;
  std::optional<long long> seed;  // reserved; every pipeline is deterministic
};

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::string version;
  double wall_time = 0.0;  // s
  std::vector<std::string> files;
  nlohmann::json summary;

  nlohmann::json to_json() const;
};

// Time for a complete transfer without control errors: 2 pi/A_eff for the
// electron, 4 pi/sqrt(A_eff^2 + (alpha B_perp)^2) for the first nucleus.
double ideal_transfer_time(const SpinRegister& reg, double tau, double omega, bool instantaneous, Observed observe,
                           double alpha);

struct OverlayResult {
  double cycle = 0.0;                     // us
  std::vector<double> rates;              // 1/us per nucleus
  std::vector<double> rms;                // vs |simulated| at cycle ends
  std::vector<double> cycle_end_times;
};

// Exponential buildup curves for every nucleus of the register compared with
// the simulated series at the end of each reinitialization cycle. Simulated
// polarizations are sign-normalized.
OverlayResult buildup_overlay(const TimeSeries& ts, const SpinRegister& reg, double alpha, double tau,
                              int blocks_per_cycle);

// Closed-form record for the `analytics` subcommand.
nlohmann::json analytics_record(const ExperimentConfig& config);

RunManifest run_subcommand(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options);

// 0 success, 2 configuration error, 3 numerical failure, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace nvdnp
