#include "cascade/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "cascade/error.hpp"

namespace cascade::io {

std::string format_number(double value) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.precision(17);
  s << value;
  // Prefer the shortest form that still round-trips.
  for (int digits = 6; digits < 17; ++digits) {
    std::ostringstream t;
    t.imbue(std::locale::classic());
    t.precision(digits);
    t << value;
    if (std::stod(t.str()) == value) return t.str();
  }
  return s.str();
}

void write_events_csv(std::ostream& out, const EventStream& events) {
  out << "channel,timestamp_ns,origin\n";
  for (const auto& e : events.events) {
    out << to_string(e.channel) << ',' << e.timestamp_ns << ',' << to_string(e.origin) << '\n';
  }
}

EventStream read_events_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "channel,timestamp_ns,origin") {
    throw DomainError("event file must start with the header 'channel,timestamp_ns,origin'");
  }
  EventStream stream;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw DomainError("malformed event row at line " + std::to_string(line_no));
    }
    const std::string channel = line.substr(0, c1);
    const std::string origin = line.substr(c2 + 1);
    DetectionEvent e{};
    if (channel == "signal") e.channel = Channel::Signal;
    else if (channel == "idler") e.channel = Channel::Idler;
    else throw DomainError("unknown channel '" + channel + "' at line " + std::to_string(line_no));
    if (origin == "pair") e.origin = Origin::Pair;
    else if (origin == "dark") e.origin = Origin::Dark;
    else throw DomainError("unknown origin '" + origin + "' at line " + std::to_string(line_no));
    const char* first = line.data() + c1 + 1;
    const char* last = line.data() + c2;
    const auto [ptr, ec] = std::from_chars(first, last, e.timestamp_ns);
    if (ec != std::errc() || ptr != last) {
      throw DomainError("malformed timestamp at line " + std::to_string(line_no));
    }
    stream.events.push_back(e);
  }
  if (!stream.is_time_ordered()) throw DomainError("event timestamps must be non-decreasing");
  return stream;
}

void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& histogram) {
  out << "bin_start_ns,count\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    out << histogram.start_ns + static_cast<std::int64_t>(i) * histogram.bin_width_ns << ','
        << histogram.counts[i] << '\n';
  }
}

nlohmann::json chsh_report(const ChshEstimate& estimate) {
  nlohmann::json report;
  report["E"] = nlohmann::json::array();
  for (const auto& c : estimate.correlations) {
    report["E"].push_back({{"theta_s_deg", c.theta_s_deg},
                           {"theta_i_deg", c.theta_i_deg},
                           {"value", c.estimate.value},
                           {"sigma", c.estimate.sigma},
                           {"counts", c.estimate.total}});
  }
  report["S"] = estimate.S.value;
  report["sigma_S"] = estimate.S.sigma;
  report["n_coincidences"] = estimate.n_coincidences;
  report["window_center_ns"] = estimate.window_center * 1e9;
  report["window_width_ns"] = estimate.window_width * 1e9;
  return report;
}

nlohmann::json fit_report(const ProfileFit& fit) {
  nlohmann::json r;
  r["kind"] = fit.profile.kind == ProfileKind::Beat ? "beat" : "exponential";
  r["background"] = fit.profile.background;
  r["amplitude"] = fit.profile.amplitude;
  r["decay_ns"] = fit.profile.decay * 1e9;
  r["sigma_background"] = fit.sigma_background();
  r["sigma_amplitude"] = fit.sigma_amplitude();
  r["sigma_decay_ns"] = fit.sigma_decay() * 1e9;
  if (fit.profile.kind == ProfileKind::Beat) {
    r["beat_frequency_mhz"] = fit.profile.beat_frequency * 1e-6;
    r["sigma_beat_frequency_mhz"] = fit.sigma_beat_frequency() * 1e-6;
  }
  r["chi_squared"] = fit.chi_squared;
  r["degrees_of_freedom"] = fit.degrees_of_freedom;
  r["iterations"] = fit.iterations;
  return r;
}

void write_curve_csv(std::ostream& out, std::span<const std::pair<double, double>> curve) {
  out << "optical_depth,efficiency\n";
  for (const auto& [d, eta] : curve) out << format_number(d) << ',' << format_number(eta) << '\n';
}

void write_field_dump(std::ostream& out, const MemorySolution& solution, std::size_t stride) {
  require(solution.has_fields(), "solution does not carry field grids");
  require(stride >= 1, "dump stride must be >= 1");
  out << "# z t_s abs_E2 abs_S2\n";
  for (std::size_t n = 0; n <= solution.n_t; n += stride) {
    for (std::size_t k = 0; k <= solution.n_z; ++k) {
      out << format_number(solution.z(k)) << ' ' << format_number(solution.t(n)) << ' '
          << format_number(std::norm(solution.field_E(n, k))) << ' '
          << format_number(std::norm(solution.field_S(n, k))) << '\n';
    }
  }
}

nlohmann::json ledger_report(const EnergyLedger& ledger) {
  return {{"input", ledger.input},         {"leaked", ledger.leaked},
          {"retrieved", ledger.retrieved}, {"remaining", ledger.remaining},
          {"dissipated", ledger.dissipated}, {"closure_error", ledger.closure_error()}};
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "total_length_km,segments,mean_time_s,stderr_time_s,mean_visibility,projected_S\n";
  for (const auto& r : rows) {
    out << format_number(r.total_length_km) << ',' << r.segments << ',' << format_number(r.mean_time)
        << ',' << format_number(r.stderr_time) << ',' << format_number(r.mean_visibility) << ','
        << format_number(r.projected_S) << '\n';
  }
}

}  // namespace cascade::io
