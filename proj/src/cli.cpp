#include "cascade/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade/detection.hpp"
#include "cascade/entangled_state.hpp"
#include "cascade/error.hpp"
#include "cascade/io.hpp"
#include "cascade/memory.hpp"
#include "cascade/repeater.hpp"
#include "cascade/source_physics.hpp"

namespace cascade::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

struct Common {
  std::uint64_t seed = 1;
  std::string out_dir;
  unsigned threads = 0;
};

struct SourceOptions {
  std::string chi_preset = "linear-parallel";
  std::optional<double> chi_deg;
  double pair_probability = 1e-3;
  double attempt_rate = 1e6;
  std::string profile = "exponential";
  double decay_ns = 3.2;
  double beat_mhz = 117.0;
  double signal_delay_ns = 0.0;
  double horizon_factor = 10.0;
  // Detector defaults: silicon idler detector, InGaAs signal detector.
  double eta_signal = 0.1;
  double eta_idler = 0.5;
  double dark_signal_hz = 1e3;
  double dark_idler_hz = 100.0;
  double jitter_signal_ns = 0.0;
  double jitter_idler_ns = 0.0;
  bool gate_signal = false;
  double gate_width_ns = 100.0;

  double chi() const {
    return chi_deg ? *chi_deg * kDeg : ChiPreset::parse(chi_preset).chi;
  }

  SourceConfig source() const {
    SourceConfig s;
    s.pair_probability = pair_probability;
    s.attempt_rate = attempt_rate;
    s.chi = chi();
    if (profile == "exponential") {
      s.idler_profile = TemporalProfile::exponential(decay_ns * 1e-9);
    } else if (profile == "beat") {
      s.idler_profile = TemporalProfile::beat(decay_ns * 1e-9, beat_mhz * 1e6);
    } else {
      throw DomainError("profile must be 'exponential' or 'beat'");
    }
    s.signal_delay = signal_delay_ns * 1e-9;
    s.horizon_factor = horizon_factor;
    s.validate();
    return s;
  }

  DetectorConfig signal_detector() const {
    DetectorConfig d{eta_signal, dark_signal_hz, jitter_signal_ns * 1e-9, gate_signal,
                     gate_width_ns * 1e-9};
    d.validate();
    return d;
  }

  DetectorConfig idler_detector() const {
    DetectorConfig d{eta_idler, dark_idler_hz, jitter_idler_ns * 1e-9, false, gate_width_ns * 1e-9};
    d.validate();
    return d;
  }

  json echo() const {
    return {{"chi_preset", chi_deg ? "custom" : chi_preset},
            {"chi_rad", chi()},
            {"pair_probability", pair_probability},
            {"attempt_rate_hz", attempt_rate},
            {"profile", profile},
            {"decay_ns", decay_ns},
            {"beat_mhz", beat_mhz},
            {"signal_delay_ns", signal_delay_ns},
            {"horizon_factor", horizon_factor},
            {"eta_signal", eta_signal},
            {"eta_idler", eta_idler},
            {"dark_signal_hz", dark_signal_hz},
            {"dark_idler_hz", dark_idler_hz},
            {"jitter_signal_ns", jitter_signal_ns},
            {"jitter_idler_ns", jitter_idler_ns},
            {"gate_signal", gate_signal},
            {"gate_width_ns", gate_width_ns}};
  }
};

void add_source_options(CLI::App* app, SourceOptions& o) {
  app->add_option("--chi-preset", o.chi_preset, "linear-parallel | circular-opposite")
      ->check(CLI::IsMember({"linear-parallel", "circular-opposite"}))
      ->capture_default_str();
  app->add_option("--chi-deg", o.chi_deg, "Custom mixing angle chi in degrees (overrides preset)");
  app->add_option("--epsilon", o.pair_probability, "Pair probability per excitation attempt")
      ->capture_default_str();
  app->add_option("--attempt-rate", o.attempt_rate, "Excitation attempts per second")
      ->capture_default_str();
  app->add_option("--profile", o.profile, "Idler temporal profile: exponential | beat")
      ->check(CLI::IsMember({"exponential", "beat"}))
      ->capture_default_str();
  app->add_option("--decay-ns", o.decay_ns, "Idler intensity decay time [ns]")->capture_default_str();
  app->add_option("--beat-mhz", o.beat_mhz, "Quantum-beat frequency [MHz]")->capture_default_str();
  app->add_option("--signal-delay-ns", o.signal_delay_ns, "Extra signal path delay [ns]")
      ->capture_default_str();
  app->add_option("--horizon", o.horizon_factor, "Idler delay horizon in decay times")
      ->capture_default_str();
  app->add_option("--eta-signal", o.eta_signal, "Signal detector efficiency")->capture_default_str();
  app->add_option("--eta-idler", o.eta_idler, "Idler detector efficiency")->capture_default_str();
  app->add_option("--dark-signal", o.dark_signal_hz, "Signal dark-count rate [Hz]")
      ->capture_default_str();
  app->add_option("--dark-idler", o.dark_idler_hz, "Idler dark-count rate [Hz]")
      ->capture_default_str();
  app->add_option("--jitter-signal-ns", o.jitter_signal_ns, "Signal timing jitter sigma [ns]")
      ->capture_default_str();
  app->add_option("--jitter-idler-ns", o.jitter_idler_ns, "Idler timing jitter sigma [ns]")
      ->capture_default_str();
  app->add_flag("--gate-signal", o.gate_signal, "Gate the signal detector on idler detections");
  app->add_option("--gate-width-ns", o.gate_width_ns, "Gate width [ns]")->capture_default_str();
}

void add_common_options(CLI::App* app, Common& c) {
  // Consumed by expand_config before parsing; registered here for the help text.
  app->add_option("--config", "TOML/INI file of option values keyed by long flag name; flags override it");
  app->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  app->add_option("--out-dir", c.out_dir,
                  std::string("Output directory (default: $") + kOutDirEnv + " or .)");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores); never changes results")
      ->capture_default_str();
}

// Accepts "1e6" style counts.
std::uint64_t as_count(double value, const char* what) {
  require(std::isfinite(value) && value >= 0.0 && value <= 1e15 && std::floor(value) == value,
          std::string(what) + " must be a non-negative whole number");
  return static_cast<std::uint64_t>(value);
}

class Outputs {
public:
  explicit Outputs(const std::string& requested) {
    if (!requested.empty()) {
      dir_ = requested;
    } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
      dir_ = env;
    } else {
      dir_ = ".";
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DomainError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw DomainError("cannot write " + path(name).string());
    return f;
  }

  void write_json(const std::string& name, const json& j) const {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

private:
  fs::path dir_;
};

json common_echo(const std::string& command, const Common& c) {
  return {{"command", command}, {"seed", c.seed}};
}

// ---------------------------------------------------------------- pairs

struct PairsOptions {
  Common common;
  SourceOptions source;
  double theta_s_deg = 0.0;
  double theta_i_deg = 0.0;
  double attempts = 1e6;
};

int run_pairs(const PairsOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  const auto src = o.source.source();
  const auto attempts = as_count(o.attempts, "--attempts");
  const double duration = static_cast<double>(attempts) / src.attempt_rate;
  const auto events = simulate_run(src, o.source.signal_detector(), o.source.idler_detector(),
                                   o.theta_s_deg * kDeg, o.theta_i_deg * kDeg, duration, o.common.seed);
  {
    auto f = outputs.open("events.csv");
    io::write_events_csv(f, events);
  }
  json config = common_echo("pairs", o.common);
  config["source"] = o.source.echo();
  config["theta_s_deg"] = o.theta_s_deg;
  config["theta_i_deg"] = o.theta_i_deg;
  config["attempts"] = attempts;
  json report{{"config", config},
              {"n_signal", events.count(Channel::Signal)},
              {"n_idler", events.count(Channel::Idler)},
              {"events_file", "events.csv"}};
  outputs.write_json("pairs.json", report);
  out << "pairs: " << events.events.size() << " detections (" << events.count(Channel::Signal)
      << " signal, " << events.count(Channel::Idler) << " idler) -> "
      << outputs.path("events.csv").string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- histogram

struct HistogramOptions {
  Common common;
  SourceOptions source;
  std::string events_file;
  double theta_s_deg = 0.0;
  double theta_i_deg = 0.0;
  double attempts = 1e7;
  double bin_ns = 1.0;
  std::vector<double> range_ns;
  std::string fit = "auto";
};

int run_histogram(const HistogramOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  const auto src = o.source.source();
  EventStream events;
  json config = common_echo("histogram", o.common);
  if (!o.events_file.empty()) {
    std::ifstream f(o.events_file, std::ios::binary);
    if (!f) throw DomainError("cannot read " + o.events_file);
    events = io::read_events_csv(f);
    config["events_file"] = fs::path(o.events_file).filename().string();
  } else {
    const auto attempts = as_count(o.attempts, "--attempts");
    events = simulate_run(src, o.source.signal_detector(), o.source.idler_detector(),
                          o.theta_s_deg * kDeg, o.theta_i_deg * kDeg,
                          static_cast<double>(attempts) / src.attempt_rate, o.common.seed);
    config["theta_s_deg"] = o.theta_s_deg;
    config["theta_i_deg"] = o.theta_i_deg;
    config["attempts"] = attempts;
  }
  config["source"] = o.source.echo();

  // Default range: the sampling horizon, starting at zero idler delay.
  const double origin_ns = -o.source.signal_delay_ns;
  double start_ns = origin_ns;
  double stop_ns = origin_ns + std::ceil(o.source.horizon_factor * o.source.decay_ns);
  if (!o.range_ns.empty()) {
    require(o.range_ns.size() == 2, "--range-ns takes start,stop");
    start_ns = o.range_ns[0];
    stop_ns = o.range_ns[1];
  }
  const auto h = coincidence_histogram(events, o.bin_ns * 1e-9, start_ns * 1e-9, stop_ns * 1e-9);
  {
    auto f = outputs.open("histogram.csv");
    io::write_histogram_csv(f, h);
  }
  config["bin_ns"] = o.bin_ns;
  config["range_ns"] = {start_ns, stop_ns};
  config["fit"] = o.fit;

  json report{{"config", config}, {"total_coincidences", h.total()}, {"histogram_file", "histogram.csv"}};
  std::ostringstream summary;
  summary << "histogram: " << h.total() << " coincidences in " << h.counts.size() << " bins";
  std::string kind = o.fit == "auto" ? o.source.profile : o.fit;
  if (kind != "none") {
    FitOptions fit_options;
    fit_options.time_origin = origin_ns * 1e-9;
    const auto fit = fit_profile(h, kind == "beat" ? ProfileKind::Beat : ProfileKind::Exponential,
                                 fit_options);
    report["fit"] = io::fit_report(fit);
    summary << "; fitted decay " << io::format_number(fit.profile.decay * 1e9) << " ns";
    if (fit.profile.kind == ProfileKind::Beat) {
      summary << ", beat " << io::format_number(fit.profile.beat_frequency * 1e-6) << " MHz";
    }
  }
  outputs.write_json("histogram.json", report);
  out << summary.str() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- chsh

struct ChshOptions {
  Common common;
  SourceOptions source;
  std::vector<double> angles_deg{0.0, 45.0, -67.5, -22.5};
  double pairs = 1e6;
  double window_ns = 6.0;
  std::optional<double> center_ns;
};

int run_chsh(const ChshOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  require(o.angles_deg.size() == 4, "--angles takes theta_s,theta_s',theta_i,theta_i' in degrees");
  const auto src = o.source.source();
  require(src.pair_probability > 0.0, "--epsilon must be positive for a CHSH run");
  const auto pairs = as_count(o.pairs, "--pairs");
  const double attempts = std::round(static_cast<double>(pairs) / src.pair_probability);
  const auto angles = ChshAngles::from_degrees(o.angles_deg[0], o.angles_deg[1], o.angles_deg[2],
                                               o.angles_deg[3]);
  ChshRunOptions run_options;
  run_options.window_width = o.window_ns * 1e-9;
  if (o.center_ns) run_options.window_center = *o.center_ns * 1e-9;
  run_options.threads = o.common.threads;
  const auto estimate = measure_chsh(src, o.source.signal_detector(), o.source.idler_detector(),
                                     angles, attempts / src.attempt_rate, o.common.seed, run_options);

  json config = common_echo("chsh", o.common);
  config["source"] = o.source.echo();
  config["angles_deg"] = o.angles_deg;
  config["pairs_per_setting"] = pairs;
  config["window_ns"] = o.window_ns;
  config["center_ns"] = o.center_ns ? json(*o.center_ns) : json("peak");
  json report = io::chsh_report(estimate);
  report["S_ideal"] = chsh_S(pair_state(src.chi), angles);
  report["config"] = config;
  outputs.write_json("chsh.json", report);
  out << "chsh: S = " << io::format_number(estimate.S.value) << " +/- "
      << io::format_number(estimate.S.sigma) << " from " << estimate.n_coincidences
      << " coincidences (ideal " << io::format_number(report["S_ideal"].get<double>()) << ")\n";
  return kSuccess;
}

// ---------------------------------------------------------------- phase-match

struct PhaseMatchOptions {
  Common common;
  double signal = 1530e-9;
  double idler = 780e-9;
  std::optional<double> pump1;
  std::optional<double> pump2;
  double epsilon_deg = 1.0;
};

int run_phase_match(const PhaseMatchOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  // Two-photon resonance: pump I on the lower transition, pump II on the upper.
  CascadeGeometry g{o.pump1.value_or(o.idler), o.pump2.value_or(o.signal), o.signal, o.idler,
                    o.epsilon_deg * kDeg};
  const auto pm = phase_match_signal_angle(g);
  const double signal_deg = pm.signal_angle / kDeg;
  json config = common_echo("phase-match", o.common);
  config["signal_m"] = o.signal;
  config["idler_m"] = o.idler;
  config["pump1_m"] = g.pump1_wavelength;
  config["pump2_m"] = g.pump2_wavelength;
  config["epsilon_deg"] = o.epsilon_deg;
  json report{{"config", config},
              {"signal_angle_deg", signal_deg},
              {"angle_ratio", signal_deg / o.epsilon_deg},
              {"longitudinal_mismatch_per_m", pm.longitudinal_mismatch},
              {"energy_residual_per_m", energy_conservation_residual(g)}};
  outputs.write_json("phase_match.json", report);
  out << "phase-match: epsilon'=" << io::format_number(std::round(signal_deg * 1e4) / 1e4)
      << " deg (epsilon'/epsilon = " << io::format_number(std::round(signal_deg / o.epsilon_deg * 1e4) / 1e4)
      << "), longitudinal mismatch " << io::format_number(pm.longitudinal_mismatch) << " 1/m\n";
  return kSuccess;
}

// ---------------------------------------------------------------- memory

struct MemoryOptions {
  Common common;
  std::vector<double> d_list{1, 5, 10, 25, 50};
  MemoryConfig base;
  double rabi_over_gamma = 0.0;  // filled from base in setup
  double input_decay_ns = 6.0;
  std::string input_shape = "exponential";
  double truncation = 5.0;
  double write_off_ns = 30.0;
  double dark_ns = 50.0;
  double ramp_ns = 2.0;
  double read_ns = 300.0;
  double excited_lifetime_ns = 27.0;
  double spin_decay_hz = 0.0;
  bool mirrored_read = false;
  bool dump_fields = false;
  std::optional<double> dump_d;
  std::size_t dump_stride = 10;

  MemoryConfig config() const {
    MemoryConfig c = base;
    c.excited_decay = 1.0 / (2.0 * excited_lifetime_ns * 1e-9);
    c.spin_decay = spin_decay_hz;
    c.input.decay = input_decay_ns * 1e-9;
    c.input.truncation = truncation;
    if (input_shape == "exponential") c.input.shape = InputShape::Exponential;
    else if (input_shape == "gaussian") c.input.shape = InputShape::Gaussian;
    else throw DomainError("input shape must be 'exponential' or 'gaussian'");
    c.control.rabi = rabi_over_gamma * c.excited_decay;
    c.control.write_off = write_off_ns * 1e-9;
    c.control.dark_time = dark_ns * 1e-9;
    c.control.ramp = ramp_ns * 1e-9;
    c.control.mirrored_read = mirrored_read;
    c.read_duration = read_ns * 1e-9;
    return c;
  }
};

int run_memory(const MemoryOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  require(!o.d_list.empty(), "--d-list must not be empty");
  const MemoryConfig base = o.config();
  base.validate();

  std::vector<MemorySolution> solutions(o.d_list.size());
  require(std::is_sorted(o.d_list.begin(), o.d_list.end()), "--d-list must be ascending");
  const auto curve = efficiency_curve(o.d_list, base, o.common.threads);
  {
    auto f = outputs.open("memory_curve.csv");
    io::write_curve_csv(f, curve);
  }

  json config = common_echo("memory", o.common);
  config["d_list"] = o.d_list;
  config["rabi_over_gamma"] = o.rabi_over_gamma;
  config["excited_lifetime_ns"] = o.excited_lifetime_ns;
  config["spin_decay_hz"] = o.spin_decay_hz;
  config["input_shape"] = o.input_shape;
  config["input_decay_ns"] = o.input_decay_ns;
  config["truncation"] = o.truncation;
  config["write_off_ns"] = o.write_off_ns;
  config["dark_ns"] = o.dark_ns;
  config["ramp_ns"] = o.ramp_ns;
  config["read_ns"] = o.read_ns;
  config["mirrored_read"] = o.mirrored_read;
  config["n_z"] = base.n_z;
  config["n_t"] = base.n_t;
  json report{{"config", config}, {"curve_file", "memory_curve.csv"}};
  report["curve"] = json::array();
  for (const auto& [d, eta] : curve) report["curve"].push_back({{"optical_depth", d}, {"efficiency", eta}});

  if (o.dump_fields) {
    MemoryConfig c = base;
    c.optical_depth = o.dump_d.value_or(o.d_list.back());
    const auto sol = solve_maxwell_bloch(c);
    auto f = outputs.open("memory_fields.txt");
    io::write_field_dump(f, sol, o.dump_stride);
    report["field_dump"] = {{"file", "memory_fields.txt"},
                            {"optical_depth", c.optical_depth},
                            {"stride", o.dump_stride},
                            {"ledger", io::ledger_report(sol.ledger)}};
  }
  outputs.write_json("memory.json", report);
  out << "memory:";
  for (const auto& [d, eta] : curve) out << " d=" << io::format_number(d) << ":eta=" << io::format_number(std::round(eta * 1e4) / 1e4);
  out << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------- repeater

struct RepeaterOptions {
  Common common;
  std::vector<double> lengths_km{50, 100, 200, 400, 800};
  std::vector<std::size_t> segments{1, 2, 4};
  double trials = 1000;
  std::string chi_preset = "linear-parallel";
  double pair_probability = 0.1;
  double attempt_period_us = 1.0;
  double eta_det = 0.5;
  double attenuation = 0.2;
  double speed = 2.0e5;
  double coherence_time = std::numeric_limits<double>::infinity();
  double visibility = 1.0;
  double xi = 1.0;
  double retrieval = 1.0;
  double swap_ceiling = 0.5;
  std::string order = "sequential";
  std::string placement = "midpoint";
};

int run_repeater(const RepeaterOptions& o, std::ostream& out) {
  const Outputs outputs(o.common.out_dir);
  ChainConfig c;
  c.segment.pair_probability = o.pair_probability;
  c.segment.attempt_period = o.attempt_period_us * 1e-6;
  c.segment.detector_efficiency = o.eta_det;
  c.segment.fiber.attenuation_db_per_km = o.attenuation;
  c.segment.fiber.speed_km_per_s = o.speed;
  c.segment.placement = o.placement == "midpoint" ? BsmPlacement::Midpoint : BsmPlacement::NodeAdjacent;
  c.coherence_time = o.coherence_time;
  c.initial_visibility = o.visibility;
  c.indistinguishability = o.xi;
  c.retrieval_efficiency = o.retrieval;
  c.swap_ceiling = o.swap_ceiling;
  c.order = o.order == "sequential" ? SwapOrder::Sequential : SwapOrder::Nested;
  c.chi = ChiPreset::parse(o.chi_preset).chi;
  const auto trials = as_count(o.trials, "--trials");
  require(trials >= 1, "--trials must be >= 1");
  require(!o.lengths_km.empty() && !o.segments.empty(), "lengths and segment counts must be given");

  const auto rows = sweep_chain(c, o.lengths_km, o.segments, trials, o.common.seed, o.common.threads);
  {
    auto f = outputs.open("repeater_sweep.csv");
    io::write_sweep_csv(f, rows);
  }
  json config = common_echo("repeater", o.common);
  config["lengths_km"] = o.lengths_km;
  config["segments"] = o.segments;
  config["trials"] = trials;
  config["chi_preset"] = o.chi_preset;
  config["pair_probability"] = o.pair_probability;
  config["attempt_period_us"] = o.attempt_period_us;
  config["eta_det"] = o.eta_det;
  config["attenuation_db_per_km"] = o.attenuation;
  config["speed_km_per_s"] = o.speed;
  config["coherence_time_s"] = std::isfinite(o.coherence_time) ? json(o.coherence_time) : json("inf");
  config["initial_visibility"] = o.visibility;
  config["indistinguishability"] = o.xi;
  config["retrieval_efficiency"] = o.retrieval;
  config["swap_ceiling"] = o.swap_ceiling;
  config["order"] = o.order;
  config["placement"] = o.placement;
  json report{{"config", config},
              {"sweep_file", "repeater_sweep.csv"},
              {"ideal_S", ideal_chsh_S(c.chi)},
              {"visibility_threshold", 2.0 / ideal_chsh_S(c.chi)}};
  outputs.write_json("repeater.json", report);
  out << "repeater: " << rows.size() << " sweep points -> " << outputs.path("repeater_sweep.csv").string()
      << '\n';
  return kSuccess;
}

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Replaces `--config FILE` with the file's key/value pairs as long flags,
// skipping keys that are also given on the command line. Keys may sit at top
// level or in a section named after the subcommand.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return a == "--config" || a.rfind("--config=", 0) == 0;
  });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw CLI::ArgumentMismatch("--config", 1, 0);
    path = *std::next(it);
    args.erase(it, std::next(it, 2));
  } else {
    path = it->substr(std::string("--config=").size());
    args.erase(it);
  }
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  const std::string subcommand = args.empty() ? "" : args.front();
  std::vector<std::string> extra;
  for (const auto& item : CLI::ConfigTOML().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    const bool in_scope = item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == subcommand);
    if (!in_scope || flag_given(args, item.name)) continue;
    std::string joined;
    for (const auto& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
    extra.push_back("--" + item.name + "=" + joined);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cascade-photon quantum repeater simulator", "cascade"};
  app.require_subcommand(1);

  PairsOptions pairs;
  auto* pairs_cmd = app.add_subcommand("pairs", "Simulate one polarizer setting and write the event stream");
  add_common_options(pairs_cmd, pairs.common);
  add_source_options(pairs_cmd, pairs.source);
  pairs_cmd->add_option("--theta-s", pairs.theta_s_deg, "Signal polarizer [deg]")->capture_default_str();
  pairs_cmd->add_option("--theta-i", pairs.theta_i_deg, "Idler polarizer [deg]")->capture_default_str();
  pairs_cmd->add_option("--attempts", pairs.attempts, "Excitation attempts")->capture_default_str();

  HistogramOptions hist;
  auto* hist_cmd = app.add_subcommand("histogram", "Signal-idler delay histogram and profile fit");
  add_common_options(hist_cmd, hist.common);
  add_source_options(hist_cmd, hist.source);
  hist_cmd->add_option("--events", hist.events_file, "Analyze an existing events CSV instead of simulating");
  hist_cmd->add_option("--theta-s", hist.theta_s_deg, "Signal polarizer [deg]")->capture_default_str();
  hist_cmd->add_option("--theta-i", hist.theta_i_deg, "Idler polarizer [deg]")->capture_default_str();
  hist_cmd->add_option("--attempts", hist.attempts, "Excitation attempts")->capture_default_str();
  hist_cmd->add_option("--bin-ns", hist.bin_ns, "Bin width [ns]")->capture_default_str();
  hist_cmd->add_option("--range-ns", hist.range_ns, "Delay range start,stop [ns]")->delimiter(',');
  hist_cmd->add_option("--fit", hist.fit, "auto | exponential | beat | none")
      ->check(CLI::IsMember({"auto", "exponential", "beat", "none"}))
      ->capture_default_str();

  ChshOptions chsh;
  auto* chsh_cmd = app.add_subcommand("chsh", "CHSH Bell test from simulated coincidence counts");
  add_common_options(chsh_cmd, chsh.common);
  add_source_options(chsh_cmd, chsh.source);
  chsh_cmd->add_option("--angles", chsh.angles_deg, "theta_s,theta_s',theta_i,theta_i' [deg]")
      ->delimiter(',')
      ->expected(4);
  chsh_cmd->add_option("--pairs", chsh.pairs, "Expected pairs per polarizer setting")->capture_default_str();
  chsh_cmd->add_option("--window-ns", chsh.window_ns, "Coincidence window width [ns]")->capture_default_str();
  chsh_cmd->add_option("--center-ns", chsh.center_ns, "Window center [ns] (default: histogram peak)");

  PhaseMatchOptions pm;
  auto* pm_cmd = app.add_subcommand("phase-match", "Phase-matched signal emission angle");
  add_common_options(pm_cmd, pm.common);
  pm_cmd->add_option("--signal", pm.signal, "Signal wavelength [m]")->capture_default_str();
  pm_cmd->add_option("--idler", pm.idler, "Idler wavelength [m]")->capture_default_str();
  pm_cmd->add_option("--pump1", pm.pump1, "Pump I wavelength [m] (default: idler)");
  pm_cmd->add_option("--pump2", pm.pump2, "Pump II wavelength [m] (default: signal)");
  pm_cmd->add_option("--epsilon-deg", pm.epsilon_deg, "Idler angle [deg]")->capture_default_str();

  MemoryOptions mem;
  mem.rabi_over_gamma = mem.base.control.rabi / mem.base.excited_decay;
  auto* mem_cmd = app.add_subcommand("memory", "Storage/retrieval efficiency vs optical depth");
  add_common_options(mem_cmd, mem.common);
  mem_cmd->add_option("--d-list", mem.d_list, "Optical depths (ascending)")->delimiter(',');
  mem_cmd->add_option("--rabi", mem.rabi_over_gamma, "Control Rabi frequency in units of gamma")
      ->capture_default_str();
  mem_cmd->add_option("--excited-lifetime-ns", mem.excited_lifetime_ns,
                      "Excited-state lifetime [ns]; gamma = 1/(2 lifetime)")
      ->capture_default_str();
  mem_cmd->add_option("--spin-decay", mem.spin_decay_hz, "Spin-wave decay rate [1/s]")->capture_default_str();
  mem_cmd->add_option("--input-shape", mem.input_shape, "exponential | gaussian")
      ->check(CLI::IsMember({"exponential", "gaussian"}))
      ->capture_default_str();
  mem_cmd->add_option("--input-decay-ns", mem.input_decay_ns, "Input intensity decay time [ns]")
      ->capture_default_str();
  mem_cmd->add_option("--truncation", mem.truncation, "Input length in decay times")->capture_default_str();
  mem_cmd->add_option("--write-off-ns", mem.write_off_ns, "Control ramp-off center [ns]")->capture_default_str();
  mem_cmd->add_option("--dark-ns", mem.dark_ns, "Storage (dark) interval [ns]")->capture_default_str();
  mem_cmd->add_option("--ramp-ns", mem.ramp_ns, "Control ramp duration [ns]")->capture_default_str();
  mem_cmd->add_option("--read-ns", mem.read_ns, "Read window after read-on [ns]")->capture_default_str();
  mem_cmd->add_option("--nz", mem.base.n_z, "Spatial grid intervals")->capture_default_str();
  mem_cmd->add_option("--nt", mem.base.n_t, "Time steps")->capture_default_str();
  mem_cmd->add_flag("--mirrored-read", mem.mirrored_read, "Read control mirrors the write control");
  mem_cmd->add_flag("--dump-fields", mem.dump_fields, "Write the (z, t, |E|^2, |S|^2) grid");
  mem_cmd->add_option("--dump-d", mem.dump_d, "Optical depth of the field dump (default: last)");
  mem_cmd->add_option("--dump-stride", mem.dump_stride, "Time-step stride of the field dump")
      ->capture_default_str();

  RepeaterOptions rep;
  auto* rep_cmd = app.add_subcommand("repeater", "Repeater-chain distribution time and visibility sweep");
  add_common_options(rep_cmd, rep.common);
  rep_cmd->add_option("--lengths-km", rep.lengths_km, "Total chain lengths [km]")->delimiter(',');
  rep_cmd->add_option("--segments", rep.segments, "Segment counts")->delimiter(',');
  rep_cmd->add_option("--trials", rep.trials, "Monte Carlo trials per point")->capture_default_str();
  rep_cmd->add_option("--chi-preset", rep.chi_preset, "linear-parallel | circular-opposite")
      ->check(CLI::IsMember({"linear-parallel", "circular-opposite"}))
      ->capture_default_str();
  rep_cmd->add_option("--epsilon", rep.pair_probability, "Pair probability per attempt")->capture_default_str();
  rep_cmd->add_option("--attempt-period-us", rep.attempt_period_us, "Attempt period [us]")->capture_default_str();
  rep_cmd->add_option("--eta-det", rep.eta_det, "Telecom detector efficiency")->capture_default_str();
  rep_cmd->add_option("--attenuation", rep.attenuation, "Fiber loss [dB/km]")->capture_default_str();
  rep_cmd->add_option("--speed", rep.speed, "Fiber signal speed [km/s]")->capture_default_str();
  rep_cmd->add_option("--coherence-time", rep.coherence_time, "Memory coherence time [s]");
  rep_cmd->add_option("--visibility", rep.visibility, "Elementary-link visibility")->capture_default_str();
  rep_cmd->add_option("--xi", rep.xi, "HOM indistinguishability")->capture_default_str();
  rep_cmd->add_option("--retrieval", rep.retrieval, "Memory retrieval efficiency")->capture_default_str();
  rep_cmd->add_option("--swap-ceiling", rep.swap_ceiling, "Bell-measurement success ceiling")
      ->capture_default_str();
  rep_cmd->add_option("--order", rep.order, "sequential | nested")
      ->check(CLI::IsMember({"sequential", "nested"}))
      ->capture_default_str();
  rep_cmd->add_option("--placement", rep.placement, "midpoint | node-adjacent")
      ->check(CLI::IsMember({"midpoint", "node-adjacent"}))
      ->capture_default_str();

  try {
    const auto expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    if (*pairs_cmd) return run_pairs(pairs, out);
    if (*hist_cmd) return run_histogram(hist, out);
    if (*chsh_cmd) return run_chsh(chsh, out);
    if (*pm_cmd) return run_phase_match(pm, out);
    if (*mem_cmd) return run_memory(mem, out);
    if (*rep_cmd) return run_repeater(rep, out);
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kConfigError;
}

}  // namespace cascade::cli
