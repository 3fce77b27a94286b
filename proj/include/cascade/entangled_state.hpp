#pragma once

#include <array>
#include <complex>
#include <string_view>

namespace cascade {

enum class Polarization { H = 0, V = 1 };

/// Two-photon polarization state over {HH, HV, VH, VV}, signal index first.
///
/// This is the two-photon component of the cascade field, post-selected on
/// exactly one pair. The vacuum term and pair-generation probability are
/// handled by the detection simulator.
class PairState {
public:
  using Amplitudes = std::array<std::complex<double>, 4>;

  /// Normalizes the given amplitudes; throws DomainError on a zero vector.
  explicit PairState(const Amplitudes& amplitudes);

  const Amplitudes& amplitudes() const noexcept { return amplitudes_; }

  std::complex<double> amplitude(Polarization signal, Polarization idler) const noexcept {
    return amplitudes_[index(signal, idler)];
  }

  double norm_squared() const noexcept;

  static constexpr std::size_t index(Polarization signal, Polarization idler) noexcept {
    return 2 * static_cast<std::size_t>(signal) + static_cast<std::size_t>(idler);
  }

private:
  Amplitudes amplitudes_;
};

/// Linear polarizer transmission axis, measured from horizontal.
/// Stored modulo pi in [0, pi).
class PolarizerSetting {
public:
  explicit PolarizerSetting(double angle_rad);
  static PolarizerSetting from_degrees(double angle_deg);

  double radians() const noexcept { return angle_; }
  double degrees() const noexcept;
  PolarizerSetting orthogonal() const;

private:
  double angle_;
};

enum class ChiPresetName { LinearParallel, CircularOpposite, Custom };

/// Mixing angle of the cascade state cos(chi)|HH> + sin(chi)|VV>.
struct ChiPreset {
  ChiPresetName name;
  double chi;

  /// Parallel linear pumps: sin(chi) = 2 cos(chi) = 2/sqrt(5).
  static ChiPreset linear_parallel();
  /// Opposite circular pumps: sin(chi) = cos(chi) = 1/sqrt(2).
  static ChiPreset circular_opposite();
  static ChiPreset custom(double chi);
  /// Accepts "linear-parallel" or "circular-opposite".
  static ChiPreset parse(std::string_view name);
};

std::string_view to_string(ChiPresetName name);

/// Cascade state (cos chi, 0, 0, sin chi). Requires chi in (0, pi/2).
PairState pair_state(double chi);

/// |<theta_s| (x) <theta_i| psi>|^2 with <theta| = cos(theta)<H| + sin(theta)<V|.
double projection_probability(const PairState& state, double theta_s, double theta_i);

/// Polarization correlation from the four projector probabilities at
/// (theta_s, theta_i) and their orthogonal complements.
double correlation_E(const PairState& state, double theta_s, double theta_i);

/// |E(s,i) + E(s',i)| + |E(s,i') - E(s',i')|.
double chsh_S(const PairState& state, double theta_s, double theta_s_prime, double theta_i,
              double theta_i_prime);

/// Angle set (theta_s, theta_s', theta_i, theta_i') used for the 776 nm
/// Bell test: 0, 45, -67.5, -22.5 degrees.
struct ChshAngles {
  double theta_s;
  double theta_s_prime;
  double theta_i;
  double theta_i_prime;

  static ChshAngles from_degrees(double s, double s_prime, double i, double i_prime);
  static ChshAngles standard();
};

double chsh_S(const PairState& state, const ChshAngles& angles);

/// Largest S reachable with real linear polarizers: 2 sqrt(1 + sin^2(2 chi)).
double chsh_S_max(double chi);

}  // namespace cascade
