#include "cascade/repeater.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/entangled_state.hpp"
#include "cascade/error.hpp"
#include "cascade/parallel.hpp"
#include "cascade/random.hpp"

namespace cascade {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

struct Span {
  double ready;      // s, both end qubits stored and heralded
  double visibility;
};

class ChainTrial {
public:
  ChainTrial(const ChainConfig& config, std::uint64_t seed)
      : config_(config),
        rng_(seed),
        link_p_(link_success_probability(config.segment)),
        swap_p_(config.swap_success_probability()),
        attempts_(config.segments, 0) {}

  ChainOutcome run() {
    const Span full = establish(0, config_.segments, 0.0);
    ChainOutcome out;
    out.total_time = full.ready;
    out.attempts = attempts_;
    out.swap_failures = swap_failures_;
    out.final_visibility = full.visibility;
    out.projected_S = full.visibility * ideal_chsh_S(config_.chi);
    return out;
  }

private:
  // Visibility factor for two stored qubits waiting `wait` seconds.
  double storage_decay(double wait) const {
    if (!std::isfinite(config_.coherence_time)) return 1.0;
    return std::exp(-2.0 * wait / config_.coherence_time);
  }

  Span elementary(std::size_t link, double start) {
    const std::uint64_t k = rng_.geometric_trials(link_p_);
    if (k == 0 || k > config_.max_attempts_per_link - attempts_[link]) {
      throw ResourceError("elementary link exceeded the attempt cap");
    }
    attempts_[link] += k;
    const double herald = config_.segment.herald_delay();
    const double ready = start + static_cast<double>(k) * config_.segment.attempt_period + herald;
    return {ready, config_.initial_visibility * storage_decay(herald)};
  }

  // Entangles the end nodes of links [lo, hi).
  Span establish(std::size_t lo, std::size_t hi, double start) {
    if (hi - lo == 1) return elementary(lo, start);
    const std::size_t split = config_.order == SwapOrder::Sequential ? hi - 1 : lo + (hi - lo) / 2;
    const double farthest_km =
        static_cast<double>(std::max(split - lo, hi - split)) * config_.segment.fiber.length_km;
    const double swap_delay = farthest_km / config_.segment.fiber.speed_km_per_s;
    for (std::uint64_t tries = 0; tries < config_.max_swap_attempts; ++tries) {
      const Span left = establish(lo, split, start);
      const Span right = establish(split, hi, start);
      const double swap_time = std::max(left.ready, right.ready);
      const double done = swap_time + swap_delay;
      if (rng_.uniform() < swap_p_) {
        const double v = left.visibility * storage_decay(swap_time - left.ready) *
                         right.visibility * storage_decay(swap_time - right.ready) *
                         storage_decay(swap_delay);
        return {done, v};
      }
      ++swap_failures_;
      start = done;
    }
    throw ResourceError("entanglement swap exceeded the retry cap");
  }

  const ChainConfig& config_;
  RandomStream rng_;
  double link_p_;
  double swap_p_;
  std::vector<std::uint64_t> attempts_;
  std::uint64_t swap_failures_ = 0;
};

}  // namespace

void FiberLink::validate() const {
  require(std::isfinite(length_km) && length_km >= 0.0, "fiber length must be >= 0");
  require(std::isfinite(attenuation_db_per_km) && attenuation_db_per_km >= 0.0,
          "fiber attenuation must be >= 0");
  require(std::isfinite(speed_km_per_s) && speed_km_per_s > 0.0, "fiber speed must be > 0");
}

double fiber_transmission(const FiberLink& link) {
  link.validate();
  return std::pow(10.0, -link.attenuation_db_per_km * link.length_km / 10.0);
}

void SegmentConfig::validate() const {
  require(is_probability(pair_probability), "pair probability must lie in [0, 1]");
  require(is_probability(detector_efficiency), "detector efficiency must lie in [0, 1]");
  require(std::isfinite(attempt_period) && attempt_period > 0.0, "attempt period must be > 0");
  fiber.validate();
}

double SegmentConfig::herald_delay() const {
  const double km = placement == BsmPlacement::Midpoint ? 0.5 * fiber.length_km : fiber.length_km;
  return km / fiber.speed_km_per_s;
}

double link_success_probability(const SegmentConfig& segment) {
  segment.validate();
  const double source = segment.pair_probability * segment.detector_efficiency;
  if (segment.placement == BsmPlacement::Midpoint) {
    FiberLink half = segment.fiber;
    half.length_km *= 0.5;
    const double arm = source * fiber_transmission(half);
    return 0.5 * arm * arm;
  }
  return 0.5 * source * source * fiber_transmission(segment.fiber);
}

void ChainConfig::validate() const {
  require(segments >= 1, "a chain needs at least one segment");
  segment.validate();
  require(std::isnan(coherence_time) == false && coherence_time > 0.0, "coherence time must be > 0");
  require(is_probability(initial_visibility), "initial visibility must lie in [0, 1]");
  require(is_probability(indistinguishability), "HOM indistinguishability must lie in [0, 1]");
  require(is_probability(swap_ceiling), "swap ceiling must lie in [0, 1]");
  require(is_probability(retrieval_efficiency), "retrieval efficiency must lie in [0, 1]");
  require(chi > 0.0 && chi < 1.5707963267948966, "chi must lie in (0, pi/2)");
  require(max_attempts_per_link > 0 && max_swap_attempts > 0, "caps must be positive");
}

double ideal_chsh_S(double chi) { return chsh_S(pair_state(chi), ChshAngles::standard()); }

std::vector<ChainOutcome> simulate_chain(const ChainConfig& config, std::size_t trials,
                                         std::uint64_t seed, unsigned threads) {
  config.validate();
  require(trials >= 1, "need at least one trial");
  std::vector<ChainOutcome> outcomes(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    outcomes[i] = ChainTrial(config, derive_seed(seed, i)).run();
  });
  return outcomes;
}

double analytic_single_and_double(const ChainConfig& config) {
  config.validate();
  const double p = link_success_probability(config.segment);
  require(p > 0.0, "link success probability must be positive");
  if (config.segments == 1) return 1.0 / p;
  if (config.segments == 2) return 2.0 / p - 1.0 / (2.0 * p - p * p);
  throw DomainError("closed form available only for one or two segments");
}

SweepRow summarize(double total_length_km, std::size_t segments,
                   std::span<const ChainOutcome> outcomes, double chi) {
  require(!outcomes.empty(), "no outcomes to summarize");
  const double n = static_cast<double>(outcomes.size());
  double sum_t = 0.0, sum_v = 0.0;
  for (const auto& o : outcomes) {
    sum_t += o.total_time;
    sum_v += o.final_visibility;
  }
  const double mean_t = sum_t / n;
  double var = 0.0;
  for (const auto& o : outcomes) var += (o.total_time - mean_t) * (o.total_time - mean_t);
  SweepRow row;
  row.total_length_km = total_length_km;
  row.segments = segments;
  row.mean_time = mean_t;
  row.stderr_time = outcomes.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  row.mean_visibility = sum_v / n;
  row.projected_S = row.mean_visibility * ideal_chsh_S(chi);
  return row;
}

std::vector<SweepRow> sweep_chain(const ChainConfig& base, std::span<const double> total_lengths_km,
                                  std::span<const std::size_t> segment_counts, std::size_t trials,
                                  std::uint64_t seed, unsigned threads) {
  std::vector<SweepRow> rows;
  // Common random numbers across lengths for a given segment count.
  for (const std::size_t segments : segment_counts) {
    for (const double length : total_lengths_km) {
      ChainConfig config = base;
      config.segments = segments;
      config.segment.fiber.length_km = length / static_cast<double>(segments);
      const auto outcomes = simulate_chain(config, trials, derive_seed(seed, segments), threads);
      rows.push_back(summarize(length, segments, outcomes, config.chi));
    }
  }
  return rows;
}

}  // namespace cascade
