#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace cascade {

enum class InputShape { Exponential, Gaussian };

/// Idler envelope entering the memory at z = 0.
struct InputPulse {
  InputShape shape = InputShape::Exponential;
  /// Exponential: 1/e time of the intensity (amplitude ~ exp(-t / (2 decay))).
  /// Gaussian: intensity exp(-((t - center)/decay)^2), centered at half the truncation time.
  double decay = 6e-9;
  /// The envelope is zero beyond truncation * decay.
  double truncation = 5.0;

  double duration() const noexcept { return truncation * decay; }
  /// Amplitude at time t; at the truncation point the left limit is taken when
  /// `left_limit` is set, so that steps ending there see the pulse tail.
  double amplitude(double t, bool left_limit = false) const noexcept;
};

/// Control Rabi frequency: constant during writing, tanh ramp-off centered at
/// write_off, dark interval, tanh ramp-on centered at write_off + dark_time.
struct ControlPulse {
  double rabi = 10.0 / (2.0 * 27e-9);  // rad/s, ten times the excited decay rate
  double write_off = 30e-9;    // s
  double dark_time = 50e-9;    // s
  double ramp = 2e-9;          // s, 2%..98% transition time
  /// Read control is the time mirror of the write control about the storage
  /// midpoint (so it also switches off after write_off seconds).
  bool mirrored_read = false;

  double read_on() const noexcept { return write_off + dark_time; }
  double rabi_at(double t) const noexcept;
};

struct MemoryConfig {
  double optical_depth = 10.0;
  double excited_decay = 1.0 / (2.0 * 27e-9);  // rad/s, optical coherence decay
  double spin_decay = 0.0;                     // rad/s
  InputPulse input;
  ControlPulse control;
  double read_duration = 300e-9;  // s after read_on
  std::size_t n_z = 200;
  std::size_t n_t = 4000;
  bool store_fields = true;

  double total_time() const noexcept { return control.read_on() + read_duration; }
  double time_step() const noexcept { return total_time() / static_cast<double>(n_t); }
  void validate() const;
};

/// Energy bookkeeping in units of the scaled flux integral int |E|^2 d(gamma t).
struct EnergyLedger {
  double input = 0.0;
  double leaked = 0.0;     // left the medium before the middle of the dark interval
  double retrieved = 0.0;  // left the medium afterwards
  double remaining = 0.0;  // int (|P|^2 + |S|^2) dz at the final time
  double dissipated = 0.0; // 2 int int |P|^2 dz dt + 2 (gamma_s/gamma) int int |S|^2 dz dt

  double accounted() const noexcept { return leaked + retrieved + remaining + dissipated; }
  double closure_error() const noexcept;
};

/// Fields on the (t, z) grid, row-major in time: field[t_index * (n_z + 1) + z_index].
struct MemorySolution {
  std::size_t n_z = 0;
  std::size_t n_t = 0;
  double time_step = 0.0;  // s
  std::vector<std::complex<double>> E, P, S;
  std::vector<std::complex<double>> output;  // E(z = 1, t), n_t + 1 samples
  EnergyLedger ledger;

  double z(std::size_t k) const noexcept { return static_cast<double>(k) / static_cast<double>(n_z); }
  double t(std::size_t n) const noexcept { return static_cast<double>(n) * time_step; }
  std::complex<double> field_E(std::size_t n, std::size_t k) const { return E[n * (n_z + 1) + k]; }
  std::complex<double> field_P(std::size_t n, std::size_t k) const { return P[n * (n_z + 1) + k]; }
  std::complex<double> field_S(std::size_t n, std::size_t k) const { return S[n * (n_z + 1) + k]; }
  bool has_fields() const noexcept { return !E.empty(); }
};

/// Resonant Lambda-system Maxwell-Bloch integration in the co-moving frame,
/// z in [0, 1], time in units of 1/excited_decay:
///   dE/dz = i sqrt(d) P
///   dP/dt = -P + i sqrt(d) E + i Omega(t) S
///   dS/dt = -(gamma_s/gamma) S + i Omega(t)^* P
/// Classical RK4 in time for (P, S); E is rebuilt at every stage by the
/// cumulative trapezoid rule along z.
MemorySolution solve_maxwell_bloch(const MemoryConfig& config);

/// retrieved / input.
double storage_retrieval_efficiency(const MemorySolution& solution);

/// Efficiency per optical depth with otherwise identical configuration.
/// Solves run in parallel; the list must be sorted ascending.
std::vector<std::pair<double, double>> efficiency_curve(std::span<const double> optical_depths,
                                                        const MemoryConfig& base,
                                                        unsigned threads = 0);

}  // namespace cascade
