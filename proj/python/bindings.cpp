#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cascade/cli.hpp"
#include "cascade/clebsch_gordan.hpp"
#include "cascade/detection.hpp"
#include "cascade/entangled_state.hpp"
#include "cascade/error.hpp"
#include "cascade/memory.hpp"
#include "cascade/repeater.hpp"
#include "cascade/source_physics.hpp"

namespace py = pybind11;
using namespace cascade;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cascade-photon repeater simulation core";

  auto base = py::register_exception<Error>(m, "CascadeError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  py::register_exception<FitError>(m, "FitError", numerical.ptr());

  m.attr("CHI_LINEAR_PARALLEL") = ChiPreset::linear_parallel().chi;
  m.attr("CHI_CIRCULAR_OPPOSITE") = ChiPreset::circular_opposite().chi;

  m.def("pair_amplitudes", [](double chi) {
    const auto a = pair_state(chi).amplitudes();
    return std::vector<double>{a[0].real(), a[1].real(), a[2].real(), a[3].real()};
  }, py::arg("chi"), "Real amplitudes (HH, HV, VH, VV) of the cascade state.");
  m.def("projection_probability", [](double chi, double ts, double ti) {
    return projection_probability(pair_state(chi), ts, ti);
  }, py::arg("chi"), py::arg("theta_s"), py::arg("theta_i"));
  m.def("correlation_E", [](double chi, double ts, double ti) {
    return correlation_E(pair_state(chi), ts, ti);
  }, py::arg("chi"), py::arg("theta_s"), py::arg("theta_i"));
  m.def("chsh_S", [](double chi, double s, double sp, double i, double ip) {
    return chsh_S(pair_state(chi), s, sp, i, ip);
  }, py::arg("chi"), py::arg("theta_s"), py::arg("theta_s_prime"), py::arg("theta_i"),
     py::arg("theta_i_prime"));
  m.def("chsh_S_max", &chsh_S_max, py::arg("chi"));
  m.def("clebsch_gordan",
        py::overload_cast<double, double, double, double, double, double>(&clebsch_gordan),
        py::arg("j1"), py::arg("m1"), py::arg("j2"), py::arg("m2"), py::arg("J"), py::arg("M"));

  m.def("optical_thickness", [](double n, double wavelength, double length) {
    return optical_thickness(EnsembleParams{n, wavelength, length, 27e-9});
  }, py::arg("number_density"), py::arg("wavelength"), py::arg("length"));
  m.def("superradiant_decay_time", &superradiant_decay_time, py::arg("natural_lifetime"),
        py::arg("optical_thickness"), py::arg("calibration") = 1.0);
  m.def("profile_intensity", [](double tau, double decay, double amplitude, double background,
                                double beat_frequency) {
    const auto p = beat_frequency > 0.0
                       ? TemporalProfile::beat(decay, beat_frequency, amplitude, background)
                       : TemporalProfile::exponential(decay, amplitude, background);
    return profile_intensity(p, tau);
  }, py::arg("tau"), py::arg("decay"), py::arg("amplitude") = 1.0, py::arg("background") = 0.0,
     py::arg("beat_frequency") = 0.0);
  m.def("phase_match", [](double signal, double idler, double epsilon) {
    const auto pm = phase_match_signal_angle(CascadeGeometry{idler, signal, signal, idler, epsilon});
    return py::make_tuple(pm.signal_angle, pm.longitudinal_mismatch);
  }, py::arg("signal_wavelength"), py::arg("idler_wavelength"), py::arg("idler_angle"),
     "Returns (signal angle [rad], longitudinal mismatch [1/m]).");

  m.def("simulate_coincidences", [](double chi, double epsilon, double attempts, double theta_s,
                                    double theta_i, double window, std::uint64_t seed) {
    SourceConfig src;
    src.chi = chi;
    src.pair_probability = epsilon;
    const auto events = simulate_run(src, DetectorConfig{}, DetectorConfig{}, theta_s, theta_i,
                                     attempts / src.attempt_rate, seed);
    return windowed_counts(events, window, 0.5 * window);
  }, py::arg("chi"), py::arg("epsilon"), py::arg("attempts"), py::arg("theta_s"),
     py::arg("theta_i"), py::arg("window") = 30e-9, py::arg("seed") = 1,
     "Coincidences in [0, window] for ideal detectors.");
  m.def("estimate_E", [](std::array<std::uint64_t, 4> counts) {
    const auto e = estimate_E(counts);
    return py::make_tuple(e.value, e.sigma);
  }, py::arg("counts"));
  m.def("estimate_S", [](std::array<double, 4> values, std::array<double, 4> sigmas) {
    std::array<CorrelationEstimate, 4> e{};
    for (std::size_t k = 0; k < 4; ++k) e[k] = {values[k], sigmas[k], 0};
    const auto s = estimate_S(e);
    return py::make_tuple(s.value, s.sigma);
  }, py::arg("values"), py::arg("sigmas"));

  m.def("efficiency_curve", [](std::vector<double> depths, unsigned threads) {
    py::gil_scoped_release release;
    return efficiency_curve(depths, MemoryConfig{}, threads);
  }, py::arg("optical_depths"), py::arg("threads") = 0,
     "Storage/retrieval efficiency for each optical depth with the default memory config.");

  m.def("fiber_transmission", [](double length_km, double attenuation) {
    return fiber_transmission(FiberLink{length_km, attenuation, 2.0e5});
  }, py::arg("length_km"), py::arg("attenuation_db_per_km") = 0.2);
  m.def("mean_attempts", [](std::size_t segments, double link_probability, std::size_t trials,
                            std::uint64_t seed) {
    // Lossless link whose success probability is set through the pair probability.
    ChainConfig c;
    c.segments = segments;
    c.segment.pair_probability = std::sqrt(2.0 * link_probability);
    c.segment.detector_efficiency = 1.0;
    c.segment.fiber.length_km = 0.0;
    c.swap_ceiling = 1.0;
    std::vector<ChainOutcome> outcomes;
    {
      py::gil_scoped_release release;
      outcomes = simulate_chain(c, trials, seed);
    }
    double sum = 0.0;
    for (const auto& o : outcomes) {
      std::uint64_t worst = 0;
      for (auto a : o.attempts) worst = std::max(worst, a);
      sum += static_cast<double>(worst);
    }
    return py::make_tuple(sum / static_cast<double>(trials), analytic_single_and_double(c));
  }, py::arg("segments"), py::arg("link_probability"), py::arg("trials"), py::arg("seed") = 1,
     "Monte Carlo mean attempts to joint readiness and the closed form.");

  m.def("run_cli", [](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line driver; returns (exit code, stdout, stderr).");
}
