#include "cascade/source_physics.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cascade/error.hpp"

namespace cascade {

namespace {

constexpr double kPi = std::numbers::pi;

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void EnsembleParams::validate() const {
  require(positive(number_density), "number density must be positive");
  require(positive(wavelength), "wavelength must be positive");
  require(positive(length), "sample length must be positive");
  require(positive(natural_lifetime), "natural lifetime must be positive");
}

void TemporalProfile::validate() const {
  require(positive(decay), "profile decay time must be positive");
  require(std::isfinite(amplitude) && amplitude >= 0.0, "profile amplitude must be >= 0");
  require(std::isfinite(background) && background >= 0.0, "profile background must be >= 0");
  if (kind == ProfileKind::Beat) {
    require(positive(beat_frequency), "beat frequency must be positive");
  }
}

TemporalProfile TemporalProfile::exponential(double decay, double amplitude, double background) {
  TemporalProfile p{ProfileKind::Exponential, decay, 0.0, amplitude, background};
  p.validate();
  return p;
}

TemporalProfile TemporalProfile::beat(double decay, double beat_frequency, double amplitude,
                                      double background) {
  TemporalProfile p{ProfileKind::Beat, decay, beat_frequency, amplitude, background};
  p.validate();
  return p;
}

void CascadeGeometry::validate() const {
  require(positive(pump1_wavelength) && positive(pump2_wavelength) &&
              positive(signal_wavelength) && positive(idler_wavelength),
          "wavelengths must be positive");
  require(std::isfinite(idler_angle) && idler_angle > 0.0 && idler_angle < kPi / 8,
          "idler angle must lie in (0, pi/8)");
}

double optical_thickness(const EnsembleParams& params) {
  params.validate();
  return 3.0 * params.number_density * params.wavelength * params.wavelength * params.length /
         (8.0 * kPi);
}

double superradiant_decay_time(double natural_lifetime, double optical_thickness,
                               double calibration) {
  require(positive(natural_lifetime), "natural lifetime must be positive");
  require(positive(optical_thickness), "optical thickness must be positive");
  require(positive(calibration), "calibration factor must be positive");
  return calibration * natural_lifetime / optical_thickness;
}

double profile_intensity(const TemporalProfile& profile, double tau) {
  require(std::isfinite(tau) && tau >= 0.0, "delay must be non-negative");
  const double envelope = profile.amplitude * std::exp(-tau / profile.decay);
  if (profile.kind == ProfileKind::Exponential) return profile.background + envelope;
  const double s = std::sin(kPi * profile.beat_frequency * tau);
  return profile.background + envelope * s * s;
}

double profile_bin_average(const TemporalProfile& profile, double start, double width) {
  static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights{0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};
  const double mid = start + 0.5 * width;
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    sum += weights[k] * profile_intensity(profile, mid + 0.5 * width * nodes[k]);
  }
  return 0.5 * sum;
}

double sample_delay(const TemporalProfile& profile, RandomStream& rng, double horizon_factor) {
  require(positive(horizon_factor), "sampling horizon must be positive");
  const double alpha = profile.decay;
  const double tail = -std::expm1(-horizon_factor);  // 1 - exp(-H/alpha)
  auto truncated_exponential = [&] { return -alpha * std::log1p(-rng.uniform() * tail); };
  if (profile.kind == ProfileKind::Exponential) return truncated_exponential();
  for (;;) {
    const double tau = truncated_exponential();
    const double s = std::sin(kPi * profile.beat_frequency * tau);
    if (rng.uniform() < s * s) return tau;
  }
}

PhaseMatch phase_match_signal_angle(const CascadeGeometry& g) {
  g.validate();
  const double sin_signal = g.signal_wavelength / g.idler_wavelength * std::sin(g.idler_angle);
  if (sin_signal >= 1.0) throw DomainError("no phase-matched signal direction exists");
  const double signal_angle = std::asin(sin_signal);
  const double mismatch =
      2.0 * kPi *
      ((1.0 / g.pump1_wavelength - 1.0 / g.pump2_wavelength) -
       (std::cos(g.idler_angle) / g.idler_wavelength - std::cos(signal_angle) / g.signal_wavelength));
  return {signal_angle, mismatch};
}

double energy_conservation_residual(const CascadeGeometry& g) {
  return (1.0 / g.pump1_wavelength + 1.0 / g.pump2_wavelength) -
         (1.0 / g.signal_wavelength + 1.0 / g.idler_wavelength);
}

}  // namespace cascade
