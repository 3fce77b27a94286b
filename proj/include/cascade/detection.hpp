#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/entangled_state.hpp"
#include "cascade/source_physics.hpp"

namespace cascade {

/// Cascade source driven by a train of excitation attempts.
struct SourceConfig {
  double pair_probability = 1e-3;  // per attempt, in (0, 0.1]; 0 disables pair emission
  double attempt_rate = 1e6;      // Hz
  double chi = 1.1071487177940904;  // atan(2)
  TemporalProfile idler_profile = TemporalProfile{ProfileKind::Exponential, 3.2e-9, 0.0, 1.0, 0.0};
  double signal_delay = 0.0;     // s, added to every signal arrival (fiber, cabling)
  double horizon_factor = 10.0;  // idler delays are drawn on [0, horizon_factor * decay)

  void validate() const;
};

struct DetectorConfig {
  double efficiency = 1.0;
  double dark_rate = 0.0;   // Hz
  double jitter = 0.0;      // s, Gaussian sigma applied before quantization
  bool gated_by_partner = false;
  double gate_width = 100e-9;  // s

  void validate() const;
};

enum class Channel : std::uint8_t { Signal = 0, Idler = 1 };
enum class Origin : std::uint8_t { Pair = 0, Dark = 1 };

std::string_view to_string(Channel channel);
std::string_view to_string(Origin origin);

struct DetectionEvent {
  Channel channel;
  std::int64_t timestamp_ns;  // 1 ns time-interval analyzer resolution
  Origin origin;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

/// Time-ordered photodetection records of both channels.
struct EventStream {
  std::vector<DetectionEvent> events;

  bool is_time_ordered() const;
  std::size_t count(Channel channel) const;
  /// Sorted timestamps of one channel.
  std::vector<std::int64_t> timestamps(Channel channel) const;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Upper bound on excitation attempts in one simulated run.
inline constexpr double kMaxAttemptsPerRun = 1e9;

/// Monte Carlo photodetection record for polarizers at (theta_s, theta_i).
EventStream simulate_run(const SourceConfig& source, const DetectorConfig& signal_detector,
                         const DetectorConfig& idler_detector, double theta_s, double theta_i,
                         double duration, std::uint64_t seed);

/// Start-stop histogram of idler-minus-signal delays, all pairs in range.
struct CoincidenceHistogram {
  std::int64_t bin_width_ns = 1;
  std::int64_t start_ns = 0;
  std::vector<std::uint64_t> counts;

  double bin_width() const noexcept { return 1e-9 * static_cast<double>(bin_width_ns); }
  double bin_start(std::size_t i) const noexcept {
    return 1e-9 * static_cast<double>(start_ns + static_cast<std::int64_t>(i) * bin_width_ns);
  }
  std::uint64_t total() const noexcept;
};

/// Bins delays in [range_start, range_stop). Bin width and range are rounded
/// to whole nanoseconds; bin_width must be at least 1 ns.
CoincidenceHistogram coincidence_histogram(const EventStream& events, double bin_width,
                                           double range_start, double range_stop);

/// Signal-idler pairs with delay in [center - width/2, center + width/2].
std::uint64_t windowed_counts(const EventStream& events, double width, double center);

struct CorrelationEstimate {
  double value = 0.0;
  double sigma = 0.0;
  std::uint64_t total = 0;
};

/// Counts ordered (s, i), (s_perp, i_perp), (s_perp, i), (s, i_perp).
/// sigma from first-order propagation with independent Poisson counts.
CorrelationEstimate estimate_E(const std::array<std::uint64_t, 4>& counts);

struct ChshValue {
  double value = 0.0;
  double sigma = 0.0;
};

/// Correlations ordered (s, i), (s', i), (s, i'), (s', i').
ChshValue estimate_S(const std::array<CorrelationEstimate, 4>& correlations);

struct AngleCorrelation {
  double theta_s_deg = 0.0;
  double theta_i_deg = 0.0;
  CorrelationEstimate estimate;
};

struct ChshEstimate {
  std::array<AngleCorrelation, 4> correlations;
  ChshValue S;
  std::uint64_t n_coincidences = 0;
  double window_center = 0.0;  // s
  double window_width = 0.0;   // s
};

struct ChshRunOptions {
  double window_width = 6e-9;
  /// Window center in s; when empty the peak of the pooled 1 ns histogram is used.
  std::optional<double> window_center;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Sixteen polarizer runs (each angle pair with its orthogonal complements),
/// windowed coincidence counts, E per angle pair and S.
ChshEstimate measure_chsh(const SourceConfig& source, const DetectorConfig& signal_detector,
                          const DetectorConfig& idler_detector, const ChshAngles& angles,
                          double duration_per_run, std::uint64_t seed,
                          const ChshRunOptions& options = {});

/// Binned data for fitting; counts may be non-integral (synthetic curves).
struct BinnedCounts {
  std::vector<double> bin_starts;  // s
  std::vector<double> counts;
  double bin_width = 1e-9;         // s

  static BinnedCounts from_histogram(const CoincidenceHistogram& histogram);
};

struct FitOptions {
  int max_iterations = 200;
  double min_beat_frequency = 50e6;
  double max_beat_frequency = 200e6;
  double beat_grid_step = 2.5e6;
  double time_origin = 0.0;  // bins starting before this delay are ignored
};

/// Fitted profile with covariance over (background, amplitude, decay[, beat_frequency]).
struct ProfileFit {
  TemporalProfile profile;
  std::vector<double> covariance;  // row-major, n x n, SI units
  std::size_t n_parameters = 0;
  double chi_squared = 0.0;
  std::size_t degrees_of_freedom = 0;
  int iterations = 0;

  double sigma(std::size_t parameter) const;
  double sigma_background() const { return sigma(0); }
  double sigma_amplitude() const { return sigma(1); }
  double sigma_decay() const { return sigma(2); }
  double sigma_beat_frequency() const { return sigma(3); }
};

/// Levenberg-Marquardt fit of the bin-averaged profile, started with 1 / max(count, 1)
/// weights and reweighted by the model to the Poisson likelihood optimum.
/// Beat fits start from a grid of beat frequencies.
ProfileFit fit_profile(const BinnedCounts& data, ProfileKind kind, const FitOptions& options = {});
ProfileFit fit_profile(const CoincidenceHistogram& histogram, ProfileKind kind,
                       const FitOptions& options = {});

}  // namespace cascade
