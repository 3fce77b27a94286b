#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/source_physics.hpp"
#include "oracles.hpp"

using namespace cascade;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

const TemporalProfile kReferenceBeat = TemporalProfile::beat(11e-9, 117e6, 2972, 63);

// Composite Simpson rule with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

// Chi-square of 1 ns binned samples against the quadrature-normalized density.
double binned_chi2_per_dof(const TemporalProfile& p, std::size_t n_samples, std::uint64_t seed) {
  const double horizon = 10.0 * p.decay;
  const int n_bins = static_cast<int>(std::floor(horizon / 1e-9));
  std::vector<double> counts(n_bins, 0.0);
  RandomStream rng(seed);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double tau = sample_delay(p, rng);
    const int bin = static_cast<int>(tau / 1e-9);
    if (bin < n_bins) counts[bin] += 1;
  }
  auto shape = [&](double t) {
    const double env = std::exp(-t / p.decay);
    if (p.kind == ProfileKind::Exponential) return env;
    const double s = std::sin(kPi * p.beat_frequency * t);
    return env * s * s;
  };
  const double norm = simpson(shape, 0.0, horizon, 20000);
  double chi2 = 0.0;
  int dof = 0;
  for (int b = 0; b < n_bins; ++b) {
    const double expected = n_samples * simpson(shape, b * 1e-9, (b + 1) * 1e-9, 40) / norm;
    if (expected < 5.0) continue;
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    ++dof;
  }
  return chi2 / (dof - 1);
}
}  // namespace

TEST_CASE("optical thickness") {
  const EnsembleParams p{1e16, 780e-9, 3e-3, 27e-9};
  const double hand = 3 * 1e16 * 780e-9 * 780e-9 * 3e-3 / (8 * kPi);
  CHECK(optical_thickness(p) == Approx(hand).epsilon(1e-14));
  CHECK(optical_thickness(p) == Approx(2.18).epsilon(1e-3));
  EnsembleParams doubled = p;
  doubled.number_density *= 2;
  CHECK(optical_thickness(doubled) == Approx(2 * optical_thickness(p)).epsilon(1e-15));
  EnsembleParams empty = p;
  empty.number_density = 0;
  CHECK_THROWS_AS(optical_thickness(empty), DomainError);
}

TEST_CASE("superradiant decay time") {
  CHECK(superradiant_decay_time(27e-9, 8.44) == Approx(3.2e-9).epsilon(2e-3));
  CHECK(superradiant_decay_time(27e-9, 1.0) == Approx(27e-9));
  CHECK(superradiant_decay_time(27e-9, 4.03) == Approx(6.7e-9).epsilon(2e-3));
  CHECK(superradiant_decay_time(27e-9, 4.0, 0.5) == Approx(27e-9 / 8));
  CHECK_THROWS_AS(superradiant_decay_time(27e-9, 0.0), DomainError);
  CHECK_THROWS_AS(superradiant_decay_time(-1e-9, 1.0), DomainError);
}

TEST_CASE("linear superradiant scaling: decay vs 1/d has slope t_s") {
  const double ds[] = {2, 3, 5, 8, 13};
  for (int k = 1; k < 5; ++k) {
    const double slope = (superradiant_decay_time(27e-9, ds[k]) - superradiant_decay_time(27e-9, ds[k - 1])) /
                         (1 / ds[k] - 1 / ds[k - 1]);
    CHECK(slope == Approx(27e-9).epsilon(1e-12));
  }
}

TEST_CASE("profile intensity examples") {
  CHECK(profile_intensity(kReferenceBeat, 0.0) == Approx(63.0));
  CHECK(profile_intensity(TemporalProfile::exponential(3.2e-9), 3.2e-9) == Approx(std::exp(-1.0)));
  // The reference hand value 2087 is 0.4% above the formula's 2078.4.
  CHECK(profile_intensity(kReferenceBeat, 1 / (2 * 117e6)) == Approx(2087).epsilon(5e-3));
  CHECK(profile_intensity(kReferenceBeat, 1 / (2 * 117e6)) == Approx(63 + 2972 * std::exp(-(1 / 117e6 / 2) / 11e-9)));
  CHECK_THROWS_AS(profile_intensity(kReferenceBeat, -1e-9), DomainError);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(TemporalProfile::exponential(0.0), DomainError);
  CHECK_THROWS_AS(TemporalProfile::beat(1e-9, 0.0), DomainError);
  CHECK_THROWS_AS(TemporalProfile::exponential(1e-9, -1.0), DomainError);
  CHECK_THROWS_AS(TemporalProfile::exponential(1e-9, 1.0, -1.0), DomainError);
}

TEST_CASE("beat profile is non-negative") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 2000; ++k) {
    const auto p = TemporalProfile::beat(1e-9 + 50e-9 * u(gen), 1e6 + 500e6 * u(gen), 1e4 * u(gen), 100 * u(gen));
    CHECK(profile_intensity(p, 200e-9 * u(gen)) >= 0.0);
  }
}

TEST_CASE("bin average matches fine quadrature") {
  for (double start : {0.0, 3e-9, 8e-9, 40e-9}) {
    const double ref = simpson([](double t) { return profile_intensity(kReferenceBeat, t); }, start, start + 1e-9, 2000) / 1e-9;
    CHECK(profile_bin_average(kReferenceBeat, start, 1e-9) == Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("exponential sampler mean") {
  RandomStream rng(99);
  const auto p = TemporalProfile::exponential(3.2e-9);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int k = 0; k < n; ++k) sum += sample_delay(p, rng);
  // Horizon truncation at 10 decay times shifts the mean by a negligible 4.5e-4 decay times.
  CHECK(std::abs(sum / n - 3.2e-9) < 3 * 3.2e-9 / 1000);
}

TEST_CASE("beat sampler has a density minimum near 1/Omega") {
  RandomStream rng(4);
  std::vector<int> bins(40, 0);
  for (int k = 0; k < 1'000'000; ++k) {
    const double tau = sample_delay(kReferenceBeat, rng);
    if (tau < 40e-9) ++bins[static_cast<int>(tau / 1e-9)];
  }
  int argmin = 5;
  for (int b = 5; b < 12; ++b) if (bins[b] < bins[argmin]) argmin = b;
  const double zero = 1 / 117e6 / 1e-9;  // 8.55 ns
  CHECK(std::abs(argmin + 0.5 - zero) <= 1.0);
  CHECK(bins[argmin] < bins[argmin - 1]);
  CHECK(bins[argmin] < bins[argmin + 1]);
}

TEST_CASE("sampled histograms match the profile by chi-square") {
  CHECK(binned_chi2_per_dof(kReferenceBeat, 1'000'000, 8) < 1.5);
  CHECK(binned_chi2_per_dof(TemporalProfile::exponential(3.2e-9), 1'000'000, 9) < 1.5);
  CHECK(binned_chi2_per_dof(TemporalProfile::beat(6.7e-9, 117e6), 1'000'000, 10) < 1.5);
}

TEST_CASE("sampler is deterministic for a fixed seed") {
  RandomStream a(5), b(5);
  for (int k = 0; k < 1000; ++k) CHECK(sample_delay(kReferenceBeat, a) == sample_delay(kReferenceBeat, b));
}

TEST_CASE("phase matching: transverse balance") {
  const auto telecom = phase_match_signal_angle({780e-9, 1530e-9, 1530e-9, 780e-9, 1 * kDeg});
  CHECK(telecom.signal_angle == Approx(oracle::signal_angle_by_bisection(1530e-9, 780e-9, kDeg)).epsilon(1e-12));
  CHECK(telecom.signal_angle / kDeg == Approx(1.96182).epsilon(1e-5));

  const auto near_ir = phase_match_signal_angle({780e-9, 776e-9, 776e-9, 780e-9, 1 * kDeg});
  CHECK(near_ir.signal_angle == Approx(oracle::signal_angle_by_bisection(776e-9, 780e-9, kDeg)).epsilon(1e-12));
  CHECK(near_ir.signal_angle / kDeg == Approx(0.99487).epsilon(1e-5));

  CHECK_THROWS_AS(phase_match_signal_angle({780e-9, 5000e-9, 5000e-9, 780e-9, 0.3}), DomainError);
}

TEST_CASE("phase matching reduces to equal angles for equal wavelengths") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(1e-4, kPi / 8 - 1e-4);
  for (int k = 0; k < 100; ++k) {
    const double eps = u(gen);
    CHECK(std::abs(phase_match_signal_angle({780e-9, 780e-9, 780e-9, 780e-9, eps}).signal_angle - eps) < 1e-12);
  }
}

TEST_CASE("longitudinal mismatch from explicit wavevectors") {
  const CascadeGeometry g{780e-9, 1530e-9, 1530e-9, 780e-9, 1 * kDeg};
  const auto pm = phase_match_signal_angle(g);
  // Pump I and idler along +z, pump II and signal along -z.
  const double kz_pumps = 2 * kPi / 780e-9 - 2 * kPi / 1530e-9;
  const double kz_out = 2 * kPi / 780e-9 * std::cos(g.idler_angle) - 2 * kPi / 1530e-9 * std::cos(pm.signal_angle);
  CHECK(pm.longitudinal_mismatch == Approx(kz_pumps - kz_out).epsilon(1e-9));
}

TEST_CASE("energy conservation residual") {
  CHECK(energy_conservation_residual({780e-9, 776e-9, 776e-9, 780e-9, kDeg}) == Approx(0.0));
  CHECK(energy_conservation_residual({780e-9, 1530e-9, 1530e-9, 780e-9, kDeg}) == Approx(0.0));
  // (1/1530 - 1/1480) nm^-1 = -2.208e-5 nm^-1.
  const double r = energy_conservation_residual({780e-9, 1530e-9, 1480e-9, 780e-9, kDeg});
  CHECK(r * 1e-9 == Approx(1 / 1530.0 - 1 / 1480.0).epsilon(1e-10));
  CHECK(r * 1e-9 == Approx(-2.21e-5).epsilon(2e-3));
}
