#include "cascade/entangled_state.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cascade/error.hpp"

namespace cascade {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_half_turn(double angle) {
  double wrapped = std::fmod(angle, kPi);
  if (wrapped < 0.0) wrapped += kPi;
  if (wrapped >= kPi) wrapped = 0.0;
  return wrapped;
}

}  // namespace

PairState::PairState(const Amplitudes& amplitudes) : amplitudes_(amplitudes) {
  const double n2 = norm_squared();
  require(std::isfinite(n2) && n2 > 0.0, "pair state amplitudes must be finite and non-zero");
  const double scale = 1.0 / std::sqrt(n2);
  for (auto& a : amplitudes_) a *= scale;
}

double PairState::norm_squared() const noexcept {
  double total = 0.0;
  for (const auto& a : amplitudes_) total += std::norm(a);
  return total;
}

PolarizerSetting::PolarizerSetting(double angle_rad) {
  require(std::isfinite(angle_rad), "polarizer angle must be finite");
  angle_ = wrap_half_turn(angle_rad);
}

PolarizerSetting PolarizerSetting::from_degrees(double angle_deg) {
  return PolarizerSetting(angle_deg * kPi / 180.0);
}

double PolarizerSetting::degrees() const noexcept { return angle_ * 180.0 / kPi; }

PolarizerSetting PolarizerSetting::orthogonal() const { return PolarizerSetting(angle_ + kPi / 2); }

ChiPreset ChiPreset::linear_parallel() { return {ChiPresetName::LinearParallel, std::atan(2.0)}; }

ChiPreset ChiPreset::circular_opposite() { return {ChiPresetName::CircularOpposite, kPi / 4}; }

ChiPreset ChiPreset::custom(double chi) { return {ChiPresetName::Custom, chi}; }

ChiPreset ChiPreset::parse(std::string_view name) {
  if (name == "linear-parallel") return linear_parallel();
  if (name == "circular-opposite") return circular_opposite();
  throw DomainError("unknown chi preset '" + std::string(name) + "'");
}

std::string_view to_string(ChiPresetName name) {
  switch (name) {
    case ChiPresetName::LinearParallel: return "linear-parallel";
    case ChiPresetName::CircularOpposite: return "circular-opposite";
    case ChiPresetName::Custom: return "custom";
  }
  return "custom";
}

PairState pair_state(double chi) {
  if (!(chi > 0.0 && chi < kPi / 2)) {
    throw DomainError("chi must lie in the open interval (0, pi/2)");
  }
  return PairState({std::cos(chi), 0.0, 0.0, std::sin(chi)});
}

double projection_probability(const PairState& state, double theta_s, double theta_i) {
  const std::array<double, 2> s{std::cos(theta_s), std::sin(theta_s)};
  const std::array<double, 2> i{std::cos(theta_i), std::sin(theta_i)};
  const auto& a = state.amplitudes();
  const std::complex<double> overlap = s[0] * i[0] * a[0] + s[0] * i[1] * a[1] +
                                       s[1] * i[0] * a[2] + s[1] * i[1] * a[3];
  return std::norm(overlap);
}

double correlation_E(const PairState& state, double theta_s, double theta_i) {
  const double s_perp = theta_s + kPi / 2;
  const double i_perp = theta_i + kPi / 2;
  const double same = projection_probability(state, theta_s, theta_i) +
                      projection_probability(state, s_perp, i_perp);
  const double crossed = projection_probability(state, s_perp, theta_i) +
                         projection_probability(state, theta_s, i_perp);
  const double total = same + crossed;
  if (!(total > 0.0)) throw NumericalError("correlation denominator vanished");
  return (same - crossed) / total;
}

double chsh_S(const PairState& state, double theta_s, double theta_s_prime, double theta_i,
              double theta_i_prime) {
  return std::abs(correlation_E(state, theta_s, theta_i) +
                  correlation_E(state, theta_s_prime, theta_i)) +
         std::abs(correlation_E(state, theta_s, theta_i_prime) -
                  correlation_E(state, theta_s_prime, theta_i_prime));
}

ChshAngles ChshAngles::from_degrees(double s, double s_prime, double i, double i_prime) {
  constexpr double k = kPi / 180.0;
  return {s * k, s_prime * k, i * k, i_prime * k};
}

ChshAngles ChshAngles::standard() { return from_degrees(0.0, 45.0, -67.5, -22.5); }

double chsh_S(const PairState& state, const ChshAngles& angles) {
  return chsh_S(state, angles.theta_s, angles.theta_s_prime, angles.theta_i,
                angles.theta_i_prime);
}

double chsh_S_max(double chi) {
  const double s = std::sin(2.0 * chi);
  return 2.0 * std::sqrt(1.0 + s * s);
}

}  // namespace cascade
