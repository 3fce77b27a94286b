#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cascade/detection.hpp"
#include "cascade/error.hpp"
#include "oracles.hpp"

using namespace cascade;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
const DetectorConfig kIdeal{};

SourceConfig source(double eps, double chi, double rate = 1e6) {
  SourceConfig s;
  s.pair_probability = eps;
  s.chi = chi;
  s.attempt_rate = rate;
  return s;
}

EventStream make_stream(std::initializer_list<std::pair<Channel, std::int64_t>> list) {
  EventStream s;
  for (const auto& [c, t] : list) s.events.push_back({c, t, Origin::Pair});
  return s;
}

// Coincidences with any delay the sampler can produce.
std::uint64_t all_coincidences(const EventStream& ev, const SourceConfig& s) {
  const double reach = s.horizon_factor * s.idler_profile.decay + 2e-9;
  return windowed_counts(ev, reach, 0.5 * reach);
}
}  // namespace

TEST_CASE("no pairs and no dark counts give an empty stream") {
  const auto ev = simulate_run(source(0.0, kPi / 4), kIdeal, kIdeal, 0, 0, 1.0, 1);
  CHECK(ev.events.empty());
}

TEST_CASE("orthogonal polarizers on the symmetric state give no coincidences") {
  const auto s = source(1e-3, kPi / 4);
  const auto ev = simulate_run(s, kIdeal, kIdeal, 0, kPi / 2, 1e8 / s.attempt_rate, 2);
  // Only the rare two-pair attempts (about 1e8 * 1e-6 / 4) can pair up.
  CHECK(all_coincidences(ev, s) <= 25 + 5 * 5);
  // Anti-correlated singles: each side passes half of the pairs.
  const double expected = 1e8 * 1e-3 * 0.5;
  CHECK(std::abs(static_cast<double>(ev.count(Channel::Signal)) - expected) < 5 * std::sqrt(expected));
  CHECK(std::abs(static_cast<double>(ev.count(Channel::Idler)) - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("coincidence count equals the product of probabilities") {
  const auto s = source(0.01, kPi / 4);
  DetectorConfig half;
  half.efficiency = 0.5;
  const auto ev = simulate_run(s, half, half, 0, 0, 1e6 / s.attempt_rate, 3);
  const double expected = 1e6 * 0.01 * 0.5 * 0.25;
  CHECK(std::abs(static_cast<double>(all_coincidences(ev, s)) - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("stream invariants: ordering, integer quanta, origins") {
  auto s = source(0.05, std::atan(2.0));
  DetectorConfig noisy;
  noisy.dark_rate = 2e4;
  noisy.jitter = 0.3e-9;
  const auto ev = simulate_run(s, noisy, noisy, 0.2, 1.1, 0.05, 4);
  CHECK(ev.is_time_ordered());
  std::size_t dark = 0;
  for (const auto& e : ev.events) {
    CHECK(e.timestamp_ns >= -5);
    dark += e.origin == Origin::Dark;
  }
  const double expected_dark = 2 * 2e4 * 0.05;
  CHECK(std::abs(static_cast<double>(dark) - expected_dark) < 5 * std::sqrt(expected_dark));
}

TEST_CASE("determinism for a fixed seed") {
  auto s = source(0.02, std::atan(2.0));
  DetectorConfig d;
  d.dark_rate = 1e3;
  d.jitter = 1e-9;
  const auto a = simulate_run(s, d, d, 0.1, 0.2, 0.01, 77);
  const auto b = simulate_run(s, d, d, 0.1, 0.2, 0.01, 77);
  const auto c = simulate_run(s, d, d, 0.1, 0.2, 0.01, 78);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("attempt cap and invalid configs") {
  const auto s = source(0.01, kPi / 4, 1e9);
  CHECK_THROWS_AS(simulate_run(s, kIdeal, kIdeal, 0, 0, 1.5, 1), ResourceError);
  CHECK_THROWS_AS(simulate_run(source(0.2, kPi / 4), kIdeal, kIdeal, 0, 0, 1.0, 1), DomainError);
  DetectorConfig bad;
  bad.efficiency = 1.5;
  CHECK_THROWS_AS(simulate_run(source(0.01, kPi / 4), bad, kIdeal, 0, 0, 1.0, 1), DomainError);
  CHECK_THROWS_AS(simulate_run(source(0.01, kPi / 4), kIdeal, kIdeal, 0, 0, -1.0, 1), DomainError);
}

TEST_CASE("gating keeps signal events with a preceding idler inside the gate") {
  auto s = source(0.0, kPi / 4);
  DetectorConfig gated;
  gated.dark_rate = 1e5;
  gated.gated_by_partner = true;
  gated.gate_width = 100e-9;
  DetectorConfig idler;
  idler.dark_rate = 1e5;
  const auto ungated = simulate_run(s, DetectorConfig{0.5, 1e5}, idler, 0, 0, 0.1, 5);
  const auto ev = simulate_run(s, gated, idler, 0, 0, 0.1, 5);
  const auto idler_times = ev.timestamps(Channel::Idler);
  for (const auto& e : ev.events) {
    if (e.channel != Channel::Signal) continue;
    auto it = std::lower_bound(idler_times.begin(), idler_times.end(), e.timestamp_ns - 100);
    CHECK((it != idler_times.end() && *it <= e.timestamp_ns));
  }
  // About 1e5 * 100 ns = 1% of signal darks survive.
  const double expected = 1e5 * 0.1 * (1 - std::exp(-1e5 * 100e-9));
  CHECK(std::abs(static_cast<double>(ev.count(Channel::Signal)) - expected) < 5 * std::sqrt(expected));
  CHECK(ev.count(Channel::Idler) == ungated.count(Channel::Idler));
}

TEST_CASE("histogram placement and empty cases") {
  const auto ev = make_stream({{Channel::Signal, 0}, {Channel::Idler, 5}});
  const auto h = coincidence_histogram(ev, 1e-9, 0, 20e-9);
  CHECK(h.counts.size() == 20);
  CHECK(h.total() == 1);
  CHECK(h.counts[5] == 1);
  CHECK(h.bin_start(5) == Approx(5e-9));

  const auto far = make_stream({{Channel::Signal, 0}, {Channel::Idler, 500}});
  CHECK(coincidence_histogram(far, 1e-9, 0, 20e-9).total() == 0);
  CHECK(coincidence_histogram(EventStream{}, 1e-9, 0, 20e-9).total() == 0);
  CHECK_THROWS_AS(coincidence_histogram(ev, 0.5e-9, 0, 20e-9), DomainError);
}

TEST_CASE("histogram pairs all stops and respects bin width") {
  const auto ev = make_stream({{Channel::Signal, 10}, {Channel::Idler, 11}, {Channel::Idler, 14},
                               {Channel::Signal, 12}, {Channel::Idler, 15}});
  const auto h = coincidence_histogram(ev, 2e-9, -4e-9, 6e-9);
  // Delays: 1, 4, 5 from t=10 and -1, 2, 3 from t=12.
  CHECK(h.counts == std::vector<std::uint64_t>{0, 1, 1, 2, 2});
}

TEST_CASE("windowed counts") {
  const auto ev = make_stream({{Channel::Signal, 0}, {Channel::Idler, 5}});
  CHECK(windowed_counts(ev, 2e-9, 5e-9) == 1);
  CHECK(windowed_counts(ev, 2e-9, 0.0) == 0);
  CHECK_THROWS_AS(windowed_counts(ev, 0.0, 0.0), DomainError);
}

TEST_CASE("histogram total equals windowed counts over the full range") {
  auto s = source(0.05, std::atan(2.0));
  DetectorConfig d;
  d.dark_rate = 5e4;
  const auto ev = simulate_run(s, d, d, 0.3, 0.4, 0.02, 6);
  const auto h = coincidence_histogram(ev, 1e-9, -20e-9, 40e-9);
  // Histogram covers integer delays -20..39 inclusive.
  CHECK(h.total() == windowed_counts(ev, 59e-9, 9.5e-9));
  CHECK(h.total() > 0);
}

TEST_CASE("beat profile: peak window beats the window at the first zero") {
  auto s = source(0.05, std::atan(2.0));
  s.idler_profile = TemporalProfile::beat(11e-9, 117e6);
  const auto ev = simulate_run(s, kIdeal, kIdeal, 0, 0, 0.1, 7);
  const double peak = 1 / (2 * 117e6), zero = 1 / 117e6;
  const auto at_peak = windowed_counts(ev, 6e-9, peak);
  const auto at_zero = windowed_counts(ev, 6e-9, zero);
  CHECK(static_cast<double>(at_peak) > 2.0 * static_cast<double>(at_zero));
}

TEST_CASE("estimate_E examples and first-order propagation") {
  CHECK(estimate_E({75, 75, 25, 25}).value == Approx(0.5));
  CHECK(estimate_E({100, 100, 0, 0}).value == Approx(1.0));
  CHECK(estimate_E({100, 100, 0, 0}).sigma == Approx(0.0));
  CHECK_THROWS_AS(estimate_E({0, 0, 0, 0}), NumericalError);

  // Numerical derivative of E with each count treated as independent Poisson.
  const std::array<std::uint64_t, 4> c{812, 790, 140, 171};
  auto E = [](std::array<double, 4> x) { return (x[0] + x[1] - x[2] - x[3]) / (x[0] + x[1] + x[2] + x[3]); };
  double var = 0.0;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 4> up{double(c[0]), double(c[1]), double(c[2]), double(c[3])}, dn = up;
    up[k] += 1e-3;
    dn[k] -= 1e-3;
    const double d = (E(up) - E(dn)) / 2e-3;
    var += d * d * c[k];
  }
  CHECK(estimate_E(c).sigma == Approx(std::sqrt(var)).epsilon(1e-6));
  CHECK(estimate_E(c).total == 1913);
}

TEST_CASE("estimate_S: measured correlation table") {
  auto e = [](double v) { return CorrelationEstimate{v, 0.01, 0}; };
  // Slots (s,i), (s',i), (s,i'), (s',i').
  const auto near_ir = estimate_S({e(-0.670), e(-0.434), e(0.577), e(-0.503)});
  CHECK(near_ir.value == Approx(2.184).epsilon(1e-12));
  CHECK(near_ir.sigma == Approx(0.02));
  CHECK(std::abs(near_ir.value - 2.185) < 0.002);
  const auto telecom = estimate_S({e(-0.554), e(-0.423), e(0.473), e(-0.682)});
  CHECK(telecom.value == Approx(2.132).epsilon(1e-12));
  CHECK(estimate_S({e(1), e(1), e(1), e(-1)}).value == Approx(4.0));
  CHECK_THROWS_AS(estimate_S({e(1.2), e(0), e(0), e(0)}), DomainError);
}

TEST_CASE("estimator consistency over random states and angles") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> angle(0, kPi), chi_d(0.1, kPi / 2 - 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const double chi = chi_d(gen), ts = angle(gen), ti = angle(gen);
    // Small pair probability keeps two-pair accidentals well below 5 sigma.
    const auto s = source(1.5e-4, chi);
    std::array<std::uint64_t, 4> counts{};
    const std::array<std::pair<double, double>, 4> runs{
        std::pair{ts, ti}, std::pair{ts + kPi / 2, ti + kPi / 2}, std::pair{ts + kPi / 2, ti},
        std::pair{ts, ti + kPi / 2}};
    for (int k = 0; k < 4; ++k) {
      const auto ev = simulate_run(s, kIdeal, kIdeal, runs[k].first, runs[k].second, 1e9 / s.attempt_rate,
                                   derive_seed(trial, k));
      counts[k] = all_coincidences(ev, s);
    }
    const auto est = estimate_E(counts);
    CHECK(est.total >= 100000);
    CHECK(std::abs(est.value - oracle::four_projector_E(chi, ts, ti)) < 5 * est.sigma);
  }
}

TEST_CASE("accidental-only runs respect the classical bound") {
  const auto s = source(0.0, std::atan(2.0));
  DetectorConfig dark;
  dark.dark_rate = 2e5;
  ChshRunOptions opt;
  opt.window_center = 0.0;
  const auto est = measure_chsh(s, dark, dark, ChshAngles::standard(), 1.0, 9, opt);
  CHECK(est.n_coincidences > 1000);
  CHECK(est.S.value <= 2.0 + 3 * est.S.sigma);
}

TEST_CASE("CHSH run reports the standard angle slots and is thread-independent") {
  const auto s = source(1e-3, std::atan(2.0));
  ChshRunOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = measure_chsh(s, kIdeal, kIdeal, ChshAngles::standard(), 20.0, 10, one);
  const auto b = measure_chsh(s, kIdeal, kIdeal, ChshAngles::standard(), 20.0, 10, four);
  CHECK(a.S.value == b.S.value);
  CHECK(a.n_coincidences == b.n_coincidences);
  CHECK(a.correlations[1].theta_s_deg == Approx(45.0));
  CHECK(a.correlations[2].theta_i_deg == Approx(-22.5));
  CHECK(a.window_center == Approx(0.5e-9));
  CHECK(std::abs(a.S.value - 2.5456) < 5 * a.S.sigma);
}
