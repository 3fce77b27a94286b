#include "cascade/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cascade/error.hpp"
#include "cascade/parallel.hpp"

namespace cascade {

namespace {

constexpr double kPi = std::numbers::pi;

// Sub-stream indices of one run.
enum StreamId : std::uint64_t { kPairStream = 1, kSignalDarkStream = 2, kIdlerDarkStream = 3 };

std::int64_t to_ns(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e9)); }

std::int64_t quantize_ns(double time_ns) {
  return static_cast<std::int64_t>(std::floor(time_ns));
}

void add_dark_counts(std::vector<DetectionEvent>& out, Channel channel, double rate,
                     double duration_ns, std::uint64_t seed) {
  if (rate <= 0.0) return;
  RandomStream rng(seed);
  const double mean_gap_ns = 1e9 / rate;
  for (double t = rng.exponential(mean_gap_ns); t < duration_ns; t += rng.exponential(mean_gap_ns)) {
    out.push_back({channel, quantize_ns(t), Origin::Dark});
  }
}

// Keeps events of `channel` that have a partner detection within the
// preceding gate window [t - gate, t].
void apply_gate(std::vector<DetectionEvent>& events, Channel channel,
                const std::vector<std::int64_t>& partner, std::int64_t gate_ns) {
  std::erase_if(events, [&](const DetectionEvent& e) {
    if (e.channel != channel) return false;
    auto it = std::lower_bound(partner.begin(), partner.end(), e.timestamp_ns - gate_ns);
    return it == partner.end() || *it > e.timestamp_ns;
  });
}

bool event_less(const DetectionEvent& a, const DetectionEvent& b) {
  if (a.timestamp_ns != b.timestamp_ns) return a.timestamp_ns < b.timestamp_ns;
  if (a.channel != b.channel) return a.channel < b.channel;
  return a.origin < b.origin;
}

// Counts signal-idler pairs with integer delay in [lo, hi].
std::uint64_t count_pairs(const std::vector<std::int64_t>& signal,
                          const std::vector<std::int64_t>& idler, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) return 0;
  std::uint64_t total = 0;
  for (const auto ts : signal) {
    const auto first = std::lower_bound(idler.begin(), idler.end(), ts + lo);
    const auto last = std::upper_bound(first, idler.end(), ts + hi);
    total += static_cast<std::uint64_t>(last - first);
  }
  return total;
}

}  // namespace

void SourceConfig::validate() const {
  require(std::isfinite(pair_probability) && pair_probability >= 0.0 && pair_probability <= 0.1,
          "pair probability per attempt must lie in [0, 0.1]");
  require(std::isfinite(attempt_rate) && attempt_rate > 0.0, "attempt rate must be positive");
  require(chi > 0.0 && chi < kPi / 2, "chi must lie in (0, pi/2)");
  require(std::isfinite(signal_delay), "signal delay must be finite");
  require(std::isfinite(horizon_factor) && horizon_factor > 0.0, "horizon factor must be positive");
  idler_profile.validate();
}

void DetectorConfig::validate() const {
  require(efficiency >= 0.0 && efficiency <= 1.0, "detector efficiency must lie in [0, 1]");
  require(std::isfinite(dark_rate) && dark_rate >= 0.0, "dark rate must be >= 0");
  require(std::isfinite(jitter) && jitter >= 0.0, "timing jitter must be >= 0");
  require(std::isfinite(gate_width) && gate_width >= 0.0, "gate width must be >= 0");
}

std::string_view to_string(Channel channel) {
  return channel == Channel::Signal ? "signal" : "idler";
}

std::string_view to_string(Origin origin) { return origin == Origin::Pair ? "pair" : "dark"; }

bool EventStream::is_time_ordered() const {
  return std::is_sorted(events.begin(), events.end(),
                        [](const auto& a, const auto& b) { return a.timestamp_ns < b.timestamp_ns; });
}

std::size_t EventStream::count(Channel channel) const {
  return static_cast<std::size_t>(std::count_if(
      events.begin(), events.end(), [&](const auto& e) { return e.channel == channel; }));
}

std::vector<std::int64_t> EventStream::timestamps(Channel channel) const {
  std::vector<std::int64_t> out;
  for (const auto& e : events) {
    if (e.channel == channel) out.push_back(e.timestamp_ns);
  }
  std::sort(out.begin(), out.end());
  return out;
}

EventStream simulate_run(const SourceConfig& source, const DetectorConfig& signal_detector,
                         const DetectorConfig& idler_detector, double theta_s, double theta_i,
                         double duration, std::uint64_t seed) {
  source.validate();
  signal_detector.validate();
  idler_detector.validate();
  require(std::isfinite(duration) && duration >= 0.0, "run duration must be non-negative");
  const double attempts_real = std::floor(duration * source.attempt_rate + 1e-9);
  if (attempts_real > kMaxAttemptsPerRun) {
    throw ResourceError("run exceeds the cap of 1e9 excitation attempts");
  }
  const auto attempts = static_cast<std::uint64_t>(attempts_real);
  const double duration_ns = duration * 1e9;
  const double period_ns = 1e9 / source.attempt_rate;

  const PairState state = pair_state(source.chi);
  const double s_perp = theta_s + kPi / 2;
  const double i_perp = theta_i + kPi / 2;
  // Joint polarizer outcomes: both pass, signal only, idler only (blocked-both is the rest).
  const double p_both = projection_probability(state, theta_s, theta_i);
  const double p_signal_only = projection_probability(state, theta_s, i_perp);
  const double p_idler_only = projection_probability(state, s_perp, theta_i);

  std::vector<DetectionEvent> events;
  RandomStream rng(derive_seed(seed, kPairStream));
  const double eps = source.pair_probability;
  if (eps > 0.0) {
    for (std::uint64_t used = 0;;) {
      const std::uint64_t gap = rng.geometric_trials(eps);
      if (gap == 0 || gap > attempts - used) break;
      used += gap;
      const double t_ns = static_cast<double>(used - 1) * period_ns;
      int pairs = 1;
      while (rng.uniform() < eps) ++pairs;
      for (int n = 0; n < pairs; ++n) {
        const double u = rng.uniform();
        const bool signal_passes = u < p_both + p_signal_only;
        const bool idler_passes = u < p_both || (u >= p_both + p_signal_only &&
                                                 u < p_both + p_signal_only + p_idler_only);
        const double tau = sample_delay(source.idler_profile, rng, source.horizon_factor);
        if (signal_passes && rng.uniform() < signal_detector.efficiency) {
          double t = t_ns + source.signal_delay * 1e9;
          if (signal_detector.jitter > 0.0) t += signal_detector.jitter * 1e9 * rng.normal();
          events.push_back({Channel::Signal, quantize_ns(t), Origin::Pair});
        }
        if (idler_passes && rng.uniform() < idler_detector.efficiency) {
          double t = t_ns + tau * 1e9;
          if (idler_detector.jitter > 0.0) t += idler_detector.jitter * 1e9 * rng.normal();
          events.push_back({Channel::Idler, quantize_ns(t), Origin::Pair});
        }
      }
    }
  }
  add_dark_counts(events, Channel::Signal, signal_detector.dark_rate, duration_ns,
                  derive_seed(seed, kSignalDarkStream));
  add_dark_counts(events, Channel::Idler, idler_detector.dark_rate, duration_ns,
                  derive_seed(seed, kIdlerDarkStream));

  std::sort(events.begin(), events.end(), event_less);
  if (signal_detector.gated_by_partner || idler_detector.gated_by_partner) {
    EventStream ungated{events};
    const auto signal_times = ungated.timestamps(Channel::Signal);
    const auto idler_times = ungated.timestamps(Channel::Idler);
    if (signal_detector.gated_by_partner) {
      apply_gate(events, Channel::Signal, idler_times, to_ns(signal_detector.gate_width));
    }
    if (idler_detector.gated_by_partner) {
      apply_gate(events, Channel::Idler, signal_times, to_ns(idler_detector.gate_width));
    }
  }
  return EventStream{std::move(events)};
}

std::uint64_t CoincidenceHistogram::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto c : counts) sum += c;
  return sum;
}

CoincidenceHistogram coincidence_histogram(const EventStream& events, double bin_width,
                                           double range_start, double range_stop) {
  require(std::isfinite(bin_width) && bin_width >= 1e-9 - 1e-15, "bin width must be >= 1 ns");
  require(std::isfinite(range_start) && std::isfinite(range_stop) && range_stop > range_start,
          "histogram range must be non-empty");
  CoincidenceHistogram h;
  h.bin_width_ns = std::max<std::int64_t>(1, to_ns(bin_width));
  h.start_ns = to_ns(range_start);
  const std::int64_t stop_ns = to_ns(range_stop);
  const std::int64_t span = stop_ns - h.start_ns;
  require(span > 0, "histogram range must span at least 1 ns");
  h.counts.assign(static_cast<std::size_t>((span + h.bin_width_ns - 1) / h.bin_width_ns), 0);

  const auto signal = events.timestamps(Channel::Signal);
  const auto idler = events.timestamps(Channel::Idler);
  for (const auto ts : signal) {
    auto it = std::lower_bound(idler.begin(), idler.end(), ts + h.start_ns);
    for (; it != idler.end() && *it - ts < stop_ns; ++it) {
      const auto bin = static_cast<std::size_t>((*it - ts - h.start_ns) / h.bin_width_ns);
      ++h.counts[bin];
    }
  }
  return h;
}

std::uint64_t windowed_counts(const EventStream& events, double width, double center) {
  require(std::isfinite(width) && width > 0.0, "window width must be positive");
  require(std::isfinite(center), "window center must be finite");
  const double lo_ns = (center - 0.5 * width) * 1e9;
  const double hi_ns = (center + 0.5 * width) * 1e9;
  // Inclusive bounds on integer delays; the tolerance absorbs unit conversion.
  const auto lo = static_cast<std::int64_t>(std::ceil(lo_ns - 1e-6));
  const auto hi = static_cast<std::int64_t>(std::floor(hi_ns + 1e-6));
  return count_pairs(events.timestamps(Channel::Signal), events.timestamps(Channel::Idler), lo, hi);
}

CorrelationEstimate estimate_E(const std::array<std::uint64_t, 4>& counts) {
  const double same = static_cast<double>(counts[0]) + static_cast<double>(counts[1]);
  const double crossed = static_cast<double>(counts[2]) + static_cast<double>(counts[3]);
  const double total = same + crossed;
  if (total <= 0.0) throw NumericalError("correlation undefined for zero total counts");
  CorrelationEstimate e;
  e.value = (same - crossed) / total;
  // dE/dC = 2 crossed / N^2 for the same-parity counts, -2 same / N^2 for the others.
  e.sigma = 2.0 * std::sqrt(same * crossed / (total * total * total));
  e.total = counts[0] + counts[1] + counts[2] + counts[3];
  return e;
}

ChshValue estimate_S(const std::array<CorrelationEstimate, 4>& c) {
  for (const auto& e : c) {
    require(std::isfinite(e.value) && std::abs(e.value) <= 1.0 + 1e-12,
            "correlation estimates must satisfy |E| <= 1");
    require(std::isfinite(e.sigma) && e.sigma >= 0.0, "correlation sigma must be >= 0");
  }
  ChshValue s;
  s.value = std::abs(c[0].value + c[1].value) + std::abs(c[2].value - c[3].value);
  s.sigma = std::sqrt(c[0].sigma * c[0].sigma + c[1].sigma * c[1].sigma +
                      c[2].sigma * c[2].sigma + c[3].sigma * c[3].sigma);
  return s;
}

ChshEstimate measure_chsh(const SourceConfig& source, const DetectorConfig& signal_detector,
                          const DetectorConfig& idler_detector, const ChshAngles& angles,
                          double duration_per_run, std::uint64_t seed,
                          const ChshRunOptions& options) {
  require(options.window_width > 0.0, "coincidence window must be positive");
  // Correlation slots in S order: (s, i), (s', i), (s, i'), (s', i').
  const std::array<std::pair<double, double>, 4> settings{
      std::pair{angles.theta_s, angles.theta_i}, std::pair{angles.theta_s_prime, angles.theta_i},
      std::pair{angles.theta_s, angles.theta_i_prime},
      std::pair{angles.theta_s_prime, angles.theta_i_prime}};

  // For each slot, the four polarizer runs in estimate_E order.
  std::array<EventStream, 16> runs;
  parallel_for(runs.size(), options.threads, [&](std::size_t r) {
    const auto [ts, ti] = settings[r / 4];
    double s = ts, i = ti;
    switch (r % 4) {
      case 0: break;
      case 1: s += kPi / 2; i += kPi / 2; break;
      case 2: s += kPi / 2; break;
      case 3: i += kPi / 2; break;
    }
    runs[r] = simulate_run(source, signal_detector, idler_detector, s, i, duration_per_run,
                           derive_seed(seed, r));
  });

  double center = 0.0;
  if (options.window_center) {
    center = *options.window_center;
  } else {
    const double reach = source.horizon_factor * source.idler_profile.decay +
                         std::abs(source.signal_delay) + 10e-9;
    std::vector<std::uint64_t> pooled;
    CoincidenceHistogram first;
    for (const auto& run : runs) {
      const auto h = coincidence_histogram(run, 1e-9, -reach, reach);
      if (pooled.empty()) {
        pooled.assign(h.counts.size(), 0);
        first = h;
      }
      for (std::size_t b = 0; b < h.counts.size(); ++b) pooled[b] += h.counts[b];
    }
    const auto peak = std::max_element(pooled.begin(), pooled.end()) - pooled.begin();
    center = first.bin_start(static_cast<std::size_t>(peak)) + 0.5e-9;
  }

  ChshEstimate out;
  out.window_center = center;
  out.window_width = options.window_width;
  std::array<CorrelationEstimate, 4> correlations;
  for (std::size_t slot = 0; slot < 4; ++slot) {
    std::array<std::uint64_t, 4> counts{};
    for (std::size_t k = 0; k < 4; ++k) {
      counts[k] = windowed_counts(runs[4 * slot + k], options.window_width, center);
    }
    correlations[slot] = estimate_E(counts);
    out.correlations[slot] = {settings[slot].first * 180.0 / kPi,
                              settings[slot].second * 180.0 / kPi, correlations[slot]};
    out.n_coincidences += correlations[slot].total;
  }
  out.S = estimate_S(correlations);
  return out;
}

}  // namespace cascade
