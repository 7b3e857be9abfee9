#pragma once

// Stroboscopic propagation of the register under a PulsePol schedule, closed
// or open, with periodic NV reinitialization.

#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "nvdnp/physical_model.hpp"
#include "nvdnp/pulse_sequence.hpp"

namespace nvdnp {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct SiteNoise {
  double t1 = kNever;  // us
  double t2 = kNever;  // us
};

enum class ResetMixture {
  Mixed,    // F|0><0| + (1-F) I/2
  Flipped,  // F|0><0| + (1-F)|1><1|
};

struct NoiseModel {
  std::vector<SiteNoise> sites;  // register order; missing sites are noiseless
  double nv_init_fidelity = 1.0;
  double dead_time = 0.0;        // us; used by the continuum rates only
  ResetMixture mixture = ResetMixture::Mixed;

  void validate() const;
};

// Per site: sigma_+ and sigma_- at 1/(2 T1) each, sigma_z at (1/T2 - 1/(2 T1))/2,
// so populations relax at 1/T1 and coherences decay at exactly 1/T2.
std::vector<CollapseChannel> collapse_channels(const NoiseModel& noise, std::span<const int> dims);

enum class ResetMode { Instantaneous, DeadTime };

struct ReinitPolicy {
  int blocks_per_cycle = 0;  // one block = 2 tau; 0 disables resets
  ResetMode mode = ResetMode::Instantaneous;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> nv;
  std::vector<double> electron;
  std::vector<std::vector<double>> nuclei;

  std::size_t size() const { return times.size(); }
  void write_csv(std::ostream& os) const;
};

// NV marginal after a reset with fidelity F.
Matrix nv_reset_state(double fidelity, ResetMixture mixture = ResetMixture::Mixed);

// Replaces the NV marginal by the reset state; the rest of the register keeps
// its joint state and ends up in a product with the NV.
DensityMatrix reinitialize_nv(const DensityMatrix& rho, double fidelity,
                              ResetMixture mixture = ResetMixture::Mixed);

// NV in |0>, electron and nuclei maximally mixed.
DensityMatrix thermal_initial_state(const SpinRegister& reg);

inline constexpr Eigen::Index kUnitaryDimensionCap = 32;

// Exact propagator of the full register over one sequence of the schedule.
Matrix sequence_propagator(const PulseSchedule& schedule, const SpinRegister& reg);

// Strobes every tau (t = 0 included) up to total_time; the NV is reset to a
// pure |0> after every policy.blocks_per_cycle blocks.
TimeSeries run_unitary(const PulseSchedule& schedule, const SpinRegister& reg, const DensityMatrix& initial,
                       const ReinitPolicy& policy, double total_time);

TimeSeries run_lindblad(const PulseSchedule& schedule, const SpinRegister& reg, const NoiseModel& noise,
                        const DensityMatrix& initial, const ReinitPolicy& policy, double total_time);

struct Extremum {
  double value = 0.0;  // |polarization|
  double time = 0.0;
};

// Largest |y| within [0, horizon] refined by a parabola through the
// neighbouring strobes.
Extremum strobe_extremum(std::span<const double> times, std::span<const double> values, double horizon);

struct RobustnessBase {
  SpinRegister reg;
  double tau = 0.0;
  double omega = 0.0;
  double horizon = 0.0;        // us
  int observed_site = 1;       // 1 = electron, 2.. = nuclei
  double detuning_e = 0.0;
};

struct RobustnessGrid {
  std::vector<double> detuning_nv;  // rad/us, rows
  std::vector<double> rabi_error;   // rad/us, columns
  std::vector<std::vector<double>> max_polarization;
  std::vector<std::vector<double>> extremum_time;

  void write_csv(std::ostream& os) const;
};

Extremum robustness_point(const RobustnessBase& base, double detuning_nv, double rabi_error);

// Fans grid points across `workers` threads; results are merged by index.
RobustnessGrid robustness_sweep(const RobustnessBase& base, std::span<const double> detuning_nv,
                                std::span<const double> rabi_error, unsigned workers = 1);

// snprintf %.9g.
std::string format_number(double v);

}  // namespace nvdnp
