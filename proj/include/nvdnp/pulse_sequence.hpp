#pragma once

// Double-channel PulsePol schedules.
//
// One sequence of duration tau is the bracket
//   (pi/2)_Y - (pi)_-X - (pi/2)_Y (pi/2)_X - (pi)_Y - (pi/2)_X
// driven on the NV and electron channels at once; a block is two sequences
// (2 tau). The bracket composite is a z rotation by pi on each drive channel,
// so populations can be strobed every tau; the block composite is -1.

#include <optional>
#include <string>
#include <vector>

#include "nvdnp/physical_model.hpp"

namespace nvdnp {

// tau = n pi / (gamma_n B) for odd n (angular gamma_n, Gauss).
double resonance_spacing(int n, double gamma_n, double field);

enum class Axis { X, MinusX, Y, MinusY };

const char* axis_name(Axis a);

// Per-channel phases that make both spins rotate about the same +axis under
// the drive terms of build_rotating_hamiltonian.
DriveSetting axis_phases(Axis a);

enum class SegmentKind { Pulse, Free, Instant };

struct PulseSegment {
  SegmentKind kind = SegmentKind::Free;
  double duration = 0.0;  // us; zero for Instant
  ChannelDrive nv;
  ChannelDrive electron;
  Axis axis = Axis::X;
  double angle = 0.0;     // nominal rotation angle
  // Rotation actually applied by an Instant segment on each channel.
  double nv_angle = 0.0;
  double electron_angle = 0.0;
};

struct ControlErrors {
  double detuning_nv = 0.0;      // rad/us
  double detuning_e = 0.0;       // rad/us
  double rabi_error_nv = 0.0;    // rad/us
  double rabi_error_e = 0.0;     // rad/us

  static ControlErrors shared_rabi(double detuning_nv, double detuning_e, double rabi_error) {
    return {detuning_nv, detuning_e, rabi_error, rabi_error};
  }
};

struct PulseSchedule {
  std::vector<PulseSegment> segments;
  double tau = 0.0;
  std::optional<int> harmonic;
  int block_count = 0;
  bool instantaneous = false;
  double omega = 0.0;  // nominal Rabi amplitude, rad/us

  std::size_t segments_per_sequence() const;
  std::size_t sequence_count() const { return 2 * static_cast<std::size_t>(block_count); }
  double total_duration() const;
};

// 2 * blocks sequences. Finite pulses last angle/omega and run at
// omega + rabi_error; each of the four free intervals of a sequence lasts
// (tau - 4 pi/omega)/4. Detunings act during every segment.
PulseSchedule build_schedule(double tau, double omega, int blocks, const ControlErrors& errors = {},
                             bool instantaneous = false);

struct ScheduleDiagnostics {
  double total_duration = 0.0;
  double pulse_time = 0.0;
  double duty_cycle = 0.0;
  bool feasible = true;
  std::vector<double> block_deviation;  // drive-only block vs identity, up to global phase
  double max_deviation = 0.0;
  bool audit_pass = true;
};

ScheduleDiagnostics validate_schedule(const PulseSchedule& schedule, double tolerance = 1e-10);

// Drive-only propagator of a segment on the bare NV (x) electron pair;
// detunings are kept when `with_detuning` is set.
Matrix drive_only_propagator(const PulseSegment& segment, bool with_detuning);

}  // namespace nvdnp
