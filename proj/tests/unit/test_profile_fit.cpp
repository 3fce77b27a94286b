#include <doctest.h>

#include <cmath>
#include <random>

#include "cascade/detection.hpp"
#include "cascade/error.hpp"

using namespace cascade;
using doctest::Approx;

namespace {

BinnedCounts synthetic(const TemporalProfile& p, int n_bins) {
  BinnedCounts data;
  for (int b = 0; b < n_bins; ++b) {
    data.bin_starts.push_back(b * 1e-9);
    data.counts.push_back(profile_bin_average(p, b * 1e-9, 1e-9));
  }
  return data;
}

BinnedCounts poisson_replica(const BinnedCounts& mean, std::mt19937_64& gen) {
  BinnedCounts out = mean;
  for (auto& c : out.counts) c = static_cast<double>(std::poisson_distribution<long>(c)(gen));
  return out;
}

}  // namespace

TEST_CASE("noiseless beat histogram returns the generating parameters") {
  const auto truth = TemporalProfile::beat(11e-9, 117e6, 2972, 63);
  const auto fit = fit_profile(synthetic(truth, 80), ProfileKind::Beat);
  CHECK(fit.profile.kind == ProfileKind::Beat);
  CHECK(fit.profile.background == Approx(63).epsilon(1e-3));
  CHECK(fit.profile.amplitude == Approx(2972).epsilon(1e-3));
  CHECK(fit.profile.decay == Approx(11e-9).epsilon(1e-3));
  CHECK(fit.profile.beat_frequency == Approx(117e6).epsilon(1e-3));
  CHECK(fit.chi_squared < 1e-6);
  CHECK(fit.n_parameters == 4);
  CHECK(fit.degrees_of_freedom == 76);
}

TEST_CASE("noiseless exponential histogram") {
  const auto truth = TemporalProfile::exponential(3.2e-9, 5000, 10);
  const auto fit = fit_profile(synthetic(truth, 40), ProfileKind::Exponential);
  CHECK(fit.profile.decay == Approx(3.2e-9).epsilon(1e-6));
  CHECK(fit.profile.amplitude == Approx(5000).epsilon(1e-6));
  CHECK(fit.profile.background == Approx(10).epsilon(1e-5));
  CHECK(fit.n_parameters == 3);
}

TEST_CASE("noisy exponential at 1e5 counts recovers the decay within 5%") {
  // Amplitude per bin chosen so the total is about 1e5 counts.
  const auto truth = TemporalProfile::exponential(6.7e-9, 1e5 / 6.7, 0);
  std::mt19937_64 gen(12);
  const auto data = poisson_replica(synthetic(truth, 60), gen);
  double total = 0;
  for (double c : data.counts) total += c;
  CHECK(total == Approx(1e5).epsilon(0.02));
  const auto fit = fit_profile(data, ProfileKind::Exponential);
  CHECK(fit.profile.decay == Approx(6.7e-9).epsilon(0.05));
}

TEST_CASE("flat histogram with the beat model") {
  BinnedCounts flat;
  std::mt19937_64 gen(13);
  for (int b = 0; b < 60; ++b) {
    flat.bin_starts.push_back(b * 1e-9);
    flat.counts.push_back(static_cast<double>(std::poisson_distribution<long>(100)(gen)));
  }
  try {
    const auto fit = fit_profile(flat, ProfileKind::Beat);
    CHECK(fit.profile.amplitude <= 2 * fit.sigma_amplitude());
  } catch (const FitError&) {
    CHECK(true);
  }
}

TEST_CASE("too few nonzero bins") {
  BinnedCounts sparse;
  for (int b = 0; b < 30; ++b) {
    sparse.bin_starts.push_back(b * 1e-9);
    sparse.counts.push_back(b < 5 ? 10.0 : 0.0);
  }
  CHECK_THROWS_AS(fit_profile(sparse, ProfileKind::Exponential), DomainError);
}

TEST_CASE("time origin skips bins before zero delay") {
  const auto truth = TemporalProfile::exponential(3.2e-9, 5000, 10);
  BinnedCounts data = synthetic(truth, 40);
  for (auto& s : data.bin_starts) s += 7e-9;
  data.bin_starts.insert(data.bin_starts.begin(), 6e-9);
  data.counts.insert(data.counts.begin(), 1e6);  // junk before the origin
  FitOptions opt;
  opt.time_origin = 7e-9;
  const auto fit = fit_profile(data, ProfileKind::Exponential, opt);
  CHECK(fit.profile.decay == Approx(3.2e-9).epsilon(1e-6));
}

TEST_CASE("reported covariance is calibrated over noisy replicas") {
  const auto truth = TemporalProfile::beat(11e-9, 117e6, 300, 6);
  const auto mean = synthetic(truth, 80);
  std::mt19937_64 gen(14);
  int covered = 0;
  const int replicas = 100;
  for (int r = 0; r < replicas; ++r) {
    const auto fit = fit_profile(poisson_replica(mean, gen), ProfileKind::Beat);
    const bool ok = std::abs(fit.profile.background - 6) < 3 * fit.sigma_background() &&
                    std::abs(fit.profile.amplitude - 300) < 3 * fit.sigma_amplitude() &&
                    std::abs(fit.profile.decay - 11e-9) < 3 * fit.sigma_decay() &&
                    std::abs(fit.profile.beat_frequency - 117e6) < 3 * fit.sigma_beat_frequency();
    covered += ok;
  }
  CHECK(covered >= 90);
}

TEST_CASE("histogram overload matches BinnedCounts") {
  CoincidenceHistogram h;
  h.bin_width_ns = 1;
  h.start_ns = 0;
  const auto truth = TemporalProfile::exponential(3.2e-9, 500, 3);
  std::mt19937_64 gen(15);
  const auto replica = poisson_replica(synthetic(truth, 40), gen);
  for (double c : replica.counts) h.counts.push_back(static_cast<std::uint64_t>(c));
  const auto a = fit_profile(h, ProfileKind::Exponential);
  const auto b = fit_profile(BinnedCounts::from_histogram(h), ProfileKind::Exponential);
  CHECK(a.profile.decay == b.profile.decay);
  CHECK(a.profile.decay == Approx(3.2e-9).epsilon(0.1));
}
