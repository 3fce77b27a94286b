#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cascade/detection.hpp"
#include "cascade/memory.hpp"
#include "cascade/repeater.hpp"

namespace cascade::io {

/// Shortest round-trip decimal form; identical output for identical doubles.
std::string format_number(double value);

/// `channel,timestamp_ns,origin`
void write_events_csv(std::ostream& out, const EventStream& events);
/// Throws DomainError on a malformed header or row.
EventStream read_events_csv(std::istream& in);

/// `bin_start_ns,count`
void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& histogram);

/// Fields E (four objects with angles in degrees, value, sigma), S, sigma_S,
/// n_coincidences, plus the window used.
nlohmann::json chsh_report(const ChshEstimate& estimate);

nlohmann::json fit_report(const ProfileFit& fit);

/// `optical_depth,efficiency`
void write_curve_csv(std::ostream& out, std::span<const std::pair<double, double>> curve);

/// Whitespace-separated `z t_s abs_E2 abs_S2` rows, every `stride`-th time step.
void write_field_dump(std::ostream& out, const MemorySolution& solution, std::size_t stride = 1);

nlohmann::json ledger_report(const EnergyLedger& ledger);

/// `total_length_km,segments,mean_time_s,stderr_time_s,mean_visibility,projected_S`
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace cascade::io
