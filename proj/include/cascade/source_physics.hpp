#pragma once

#include "cascade/random.hpp"

namespace cascade {

/// Cold-ensemble parameters entering the optical thickness (SI units).
struct EnsembleParams {
  double number_density;    // atoms / m^3
  double wavelength;        // m
  double length;            // m
  double natural_lifetime;  // s, single-atom decay time of the intermediate level

  void validate() const;
};

enum class ProfileKind { Exponential, Beat };

/// Idler arrival-delay intensity model on top of a flat background:
///   exponential: background + amplitude * exp(-tau/decay)
///   beat:        background + amplitude * exp(-tau/decay) * sin^2(pi * beat_frequency * tau)
struct TemporalProfile {
  ProfileKind kind = ProfileKind::Exponential;
  double decay = 0.0;           // s, 1/e time of the intensity
  double beat_frequency = 0.0;  // Hz, beat kind only
  double amplitude = 1.0;       // counts per bin
  double background = 0.0;      // counts per bin

  void validate() const;

  static TemporalProfile exponential(double decay, double amplitude = 1.0,
                                     double background = 0.0);
  static TemporalProfile beat(double decay, double beat_frequency, double amplitude = 1.0,
                              double background = 0.0);
};

/// Counterpropagating-pump cascade geometry. Pump I and the idler travel
/// forward, pump II and the signal backward; idler_angle is measured from
/// the pump axis.
struct CascadeGeometry {
  double pump1_wavelength;   // m
  double pump2_wavelength;   // m
  double signal_wavelength;  // m
  double idler_wavelength;   // m
  double idler_angle;        // rad

  void validate() const;
};

struct PhaseMatch {
  double signal_angle;          // rad, on the opposite side of the axis from the idler
  double longitudinal_mismatch; // 1/m
};

/// 3 n lambda^2 l / (8 pi).
double optical_thickness(const EnsembleParams& params);

/// Superradiant idler decay t_s / d_th, optionally scaled by a calibration factor.
double superradiant_decay_time(double natural_lifetime, double optical_thickness,
                               double calibration = 1.0);

/// Expected counts per bin at delay tau >= 0.
double profile_intensity(const TemporalProfile& profile, double tau);

/// Profile averaged over [start, start + width), with a 5-point Gauss-Legendre rule.
double profile_bin_average(const TemporalProfile& profile, double start, double width);

/// Draws an idler delay from the density proportional to (profile - background)
/// on [0, horizon_factor * decay). Exponential profiles use the inverse CDF; beat
/// profiles use rejection against the exponential envelope.
double sample_delay(const TemporalProfile& profile, RandomStream& rng,
                    double horizon_factor = 10.0);

/// Transverse momentum conservation sin(eps') = (lambda_s / lambda_i) sin(eps), plus
/// the residual longitudinal mismatch for the chosen angles.
PhaseMatch phase_match_signal_angle(const CascadeGeometry& geometry);

/// (1/lambda_1 + 1/lambda_2) - (1/lambda_s + 1/lambda_i), in 1/m.
double energy_conservation_residual(const CascadeGeometry& geometry);

}  // namespace cascade
