#pragma once

// Experiment configuration. User-facing units: MHz (linear), Gauss, nm,
// us for the discrete engine and s for the continuum model.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvdnp/continuum.hpp"
#include "nvdnp/dynamics.hpp"
#include "nvdnp/pulse_sequence.hpp"

namespace nvdnp {

struct CouplingOverride {
  double a_zz = 0.0;              // rad/us
  std::vector<double> b_perp;     // rad/us, taken along the transverse x axis
};

struct SequenceConfig {
  int harmonic = 3;
  std::optional<double> tau;      // us; overrides the resonance spacing
  double omega = to_angular(20.0);
  int blocks = 1;
  bool instantaneous = false;
  ControlErrors errors;
};

enum class Engine { Unitary, Lindblad };

struct SimulateConfig {
  double total_time = 0.0;        // us
  Engine engine = Engine::Unitary;
  bool overlay = false;           // exponential buildup curves next to the run
  bool noiseless_reference = false;
};

enum class Observed { Electron, Nucleus };

struct SweepConfig {
  std::vector<double> detuning_nv;  // rad/us
  std::vector<double> rabi_error;   // rad/us
  Observed observe = Observed::Electron;
  double horizon_factor = 1.5;
};

struct ContinuumConfig {
  ContinuumProblem problem;
  std::vector<double> t2_sweep;     // us
  bool write_full_map = false;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string hash;

  PhysicalConstants constants = PhysicalConstants::standard();
  SystemGeometry geometry;
  std::optional<CouplingOverride> couplings;
  SequenceConfig sequence;
  NoiseModel noise;
  bool has_noise = false;
  ReinitPolicy reinit;
  std::optional<SimulateConfig> simulate;
  std::optional<SweepConfig> sweep;
  std::vector<Protocol> protocols{Protocol::Mediated, Protocol::Direct};
  std::optional<ContinuumConfig> continuum;
  std::string output_dir = "out";

  SpinRegister spin_register() const;
  double tau() const;
  PulseSchedule schedule() const;
};

// FNV-1a 64 of the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace nvdnp
