#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cascade {

struct FiberLink {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.2;
  double speed_km_per_s = 2.0e5;

  void validate() const;
};

/// 10^(-attenuation * length / 10).
double fiber_transmission(const FiberLink& link);

/// Where the Bell-state measurement of an elementary link sits.
enum class BsmPlacement { Midpoint, NodeAdjacent };

enum class SwapOrder { Sequential, Nested };

/// One elementary link: a cascade source at each end sends its signal photon
/// over fiber to the Bell-state measurement; idlers stay in local memories.
struct SegmentConfig {
  double pair_probability = 0.1;     // per attempt and source
  double attempt_period = 1e-6;      // s
  double detector_efficiency = 0.5;  // telecom detectors at the BSM
  FiberLink fiber;                   // full segment length
  BsmPlacement placement = BsmPlacement::Midpoint;

  void validate() const;
  /// One-way classical delay from the BSM to the farther node.
  double herald_delay() const;
};

/// (1/2) [eps * eta * T]^2 with T the transmission to the BSM: T(L/2) at the
/// midpoint, or T(L) for one photon and 1 for the other when node-adjacent.
double link_success_probability(const SegmentConfig& segment);

struct ChainConfig {
  std::size_t segments = 1;
  SegmentConfig segment;
  double coherence_time = std::numeric_limits<double>::infinity();  // s, per stored qubit
  double initial_visibility = 1.0;
  double indistinguishability = 1.0;  // HOM overlap of photons entering a swap
  double swap_ceiling = 0.5;          // linear-optics Bell measurement
  double retrieval_efficiency = 1.0;  // memory read-out per qubit
  SwapOrder order = SwapOrder::Sequential;
  double chi = 1.1071487177940904;    // atan(2)
  std::uint64_t max_attempts_per_link = 1'000'000'000ULL;
  std::uint64_t max_swap_attempts = 10'000'000ULL;

  void validate() const;
  double swap_success_probability() const noexcept {
    return swap_ceiling * retrieval_efficiency * retrieval_efficiency * indistinguishability;
  }
};

struct ChainOutcome {
  double total_time = 0.0;              // s
  std::vector<std::uint64_t> attempts;  // per elementary link, regenerations included
  std::uint64_t swap_failures = 0;
  double final_visibility = 0.0;
  double projected_S = 0.0;             // final_visibility * S of the ideal state
};

/// S of the cascade state at the standard angle set; the visibility threshold
/// for a Bell violation is 2 / ideal_chsh_S(chi).
double ideal_chsh_S(double chi);

/// Independent Monte Carlo trials of entanglement distribution over the chain.
std::vector<ChainOutcome> simulate_chain(const ChainConfig& config, std::size_t trials,
                                         std::uint64_t seed, unsigned threads = 0);

/// Expected generation rounds for N = 1 (1/p) and N = 2 with parallel links
/// (E[max(G1, G2)] = 2/p - 1/(2p - p^2)). Throws DomainError for N > 2.
double analytic_single_and_double(const ChainConfig& config);

struct SweepRow {
  double total_length_km = 0.0;
  std::size_t segments = 0;
  double mean_time = 0.0;
  double stderr_time = 0.0;
  double mean_visibility = 0.0;
  double projected_S = 0.0;
};

SweepRow summarize(double total_length_km, std::size_t segments,
                   std::span<const ChainOutcome> outcomes, double chi);

/// Chain statistics for every (total length, segment count); each segment
/// spans total_length / segments.
std::vector<SweepRow> sweep_chain(const ChainConfig& base, std::span<const double> total_lengths_km,
                                  std::span<const std::size_t> segment_counts, std::size_t trials,
                                  std::uint64_t seed, unsigned threads = 0);

}  // namespace cascade
