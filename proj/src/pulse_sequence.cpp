#include "nvdnp/pulse_sequence.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "nvdnp/errors.hpp"

namespace nvdnp {

double resonance_spacing(int n, double gamma_n, double field) {
  if (n <= 0 || n % 2 == 0) {
    std::ostringstream msg;
    msg << "resonance harmonic n must be odd and positive, got " << n;
    throw ConfigError(msg.str());
  }
  if (!(field > 0.0)) throw ConfigError("resonance spacing needs a positive field");
  if (gamma_n == 0.0) throw ConfigError("resonance spacing needs a non-zero nuclear gyromagnetic ratio");
  return n * kPi / std::abs(gamma_n * field);
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "X";
    case Axis::MinusX: return "-X";
    case Axis::Y: return "Y";
    case Axis::MinusY: return "-Y";
  }
  return "?";
}

DriveSetting axis_phases(Axis a) {
  // NV drive is (W/2)(sx cos p - sy sin p), electron drive W(Ex cos p + Ey sin p),
  // so the y axis needs opposite phase signs on the two channels.
  DriveSetting d;
  switch (a) {
    case Axis::X: d.nv.phase = 0.0; d.electron.phase = 0.0; break;
    case Axis::MinusX: d.nv.phase = kPi; d.electron.phase = kPi; break;
    case Axis::Y: d.nv.phase = -0.5 * kPi; d.electron.phase = 0.5 * kPi; break;
    case Axis::MinusY: d.nv.phase = 0.5 * kPi; d.electron.phase = -0.5 * kPi; break;
  }
  return d;
}

namespace {

struct BracketPulse {
  Axis axis;
  double angle;
  bool free_after;
};

constexpr std::array<BracketPulse, 6> kBracket{{
    {Axis::Y, 0.5 * kPi, true},
    {Axis::MinusX, kPi, true},
    {Axis::Y, 0.5 * kPi, false},
    {Axis::X, 0.5 * kPi, true},
    {Axis::Y, kPi, true},
    {Axis::X, 0.5 * kPi, false},
}};

constexpr double kBracketRotation = 4.0 * kPi;

}  // namespace

std::size_t PulseSchedule::segments_per_sequence() const {
  const std::size_t n = sequence_count();
  return n == 0 ? 0 : segments.size() / n;
}

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

PulseSchedule build_schedule(double tau, double omega, int blocks, const ControlErrors& errors,
                             bool instantaneous) {
  if (!(tau > 0.0)) throw ConfigError("schedule: tau must be positive");
  if (blocks < 0) throw ConfigError("schedule: block count must be non-negative");
  if (!instantaneous && !(omega > 0.0)) throw ConfigError("schedule: finite pulses need a positive Rabi frequency");

  double free_time = 0.25 * tau;
  if (!instantaneous) {
    const double pulse_time = kBracketRotation / omega;
    if (pulse_time >= tau) {
      std::ostringstream msg;
      msg << "schedule infeasible: pulses of " << pulse_time << " us per sequence exceed tau = " << tau
          << " us; minimum Rabi frequency is " << to_linear(kBracketRotation / tau) << " MHz";
      throw InfeasibleScheduleError(msg.str(), to_linear(kBracketRotation / tau));
    }
    free_time = 0.25 * (tau - pulse_time);
  }

  PulseSchedule s;
  s.tau = tau;
  s.block_count = blocks;
  s.instantaneous = instantaneous;
  s.omega = omega;

  PulseSegment free;
  free.kind = SegmentKind::Free;
  free.duration = free_time;
  free.nv.detuning = errors.detuning_nv;
  free.electron.detuning = errors.detuning_e;

  std::vector<PulseSegment> bracket;
  for (const auto& p : kBracket) {
    PulseSegment seg;
    const DriveSetting phases = axis_phases(p.axis);
    seg.axis = p.axis;
    seg.angle = p.angle;
    seg.nv.phase = phases.nv.phase;
    seg.electron.phase = phases.electron.phase;
    if (instantaneous) {
      seg.kind = SegmentKind::Instant;
      seg.duration = 0.0;
      const double scale_nv = omega > 0.0 ? (omega + errors.rabi_error_nv) / omega : 1.0;
      const double scale_e = omega > 0.0 ? (omega + errors.rabi_error_e) / omega : 1.0;
      seg.nv_angle = p.angle * scale_nv;
      seg.electron_angle = p.angle * scale_e;
    } else {
      seg.kind = SegmentKind::Pulse;
      seg.duration = p.angle / omega;
      seg.nv.rabi = omega + errors.rabi_error_nv;
      seg.electron.rabi = omega + errors.rabi_error_e;
      seg.nv.detuning = errors.detuning_nv;
      seg.electron.detuning = errors.detuning_e;
      seg.nv_angle = seg.nv.rabi * seg.duration;
      seg.electron_angle = seg.electron.rabi * seg.duration;
    }
    bracket.push_back(seg);
    if (p.free_after) bracket.push_back(free);
  }

  s.segments.reserve(bracket.size() * s.sequence_count());
  for (std::size_t k = 0; k < s.sequence_count(); ++k) {
    s.segments.insert(s.segments.end(), bracket.begin(), bracket.end());
  }
  return s;
}

Matrix drive_only_propagator(const PulseSegment& segment, bool with_detuning) {
  const SpinRegister bare{};
  DriveSetting d{segment.nv, segment.electron};
  if (!with_detuning) {
    d.nv.detuning = 0.0;
    d.electron.detuning = 0.0;
  }
  if (segment.kind == SegmentKind::Instant) {
    d.nv.rabi = segment.nv_angle;
    d.electron.rabi = segment.electron_angle;
    d.nv.detuning = 0.0;
    d.electron.detuning = 0.0;
    return propagator(build_rotating_hamiltonian(bare, d, false), 1.0);
  }
  return propagator(build_rotating_hamiltonian(bare, d, false), segment.duration);
}

ScheduleDiagnostics validate_schedule(const PulseSchedule& schedule, double tolerance) {
  ScheduleDiagnostics out;
  for (const auto& seg : schedule.segments) {
    out.total_duration += seg.duration;
    if (seg.kind == SegmentKind::Pulse) out.pulse_time += seg.duration;
    if (seg.kind == SegmentKind::Free && seg.duration < 0.0) out.feasible = false;
  }
  out.duty_cycle = out.total_duration > 0.0 ? out.pulse_time / out.total_duration : 0.0;
  if (schedule.block_count == 0 || schedule.segments.empty()) return out;

  const std::size_t per_block = schedule.segments.size() / static_cast<std::size_t>(schedule.block_count);
  for (int b = 0; b < schedule.block_count; ++b) {
    Matrix u = Matrix::Identity(4, 4);
    for (std::size_t k = 0; k < per_block; ++k) {
      const auto& seg = schedule.segments[b * per_block + k];
      if (seg.kind == SegmentKind::Free) continue;
      u = drive_only_propagator(seg, false) * u;
    }
    const Complex tr = u.trace();
    const Complex phase = std::abs(tr) > 0.0 ? tr / std::abs(tr) : Complex(1.0, 0.0);
    const double dev = max_abs(u - phase * Matrix::Identity(4, 4));
    out.block_deviation.push_back(dev);
    out.max_deviation = std::max(out.max_deviation, dev);
  }
  out.audit_pass = out.feasible && out.max_deviation < tolerance;
  return out;
}

}  // namespace nvdnp
