#include "cascade/memory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cascade/error.hpp"
#include "cascade/parallel.hpp"

namespace cascade {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

double smooth_off(double t, double center, double ramp) {
  return 0.5 * (1.0 - std::tanh(4.0 * (t - center) / ramp));
}

// Right-hand side of the atomic equations in scaled units. Rebuilds E along
// z from the boundary value and the polarization.
struct Dynamics {
  std::size_t n_z;
  double sqrt_d;
  double spin_rate;  // gamma_s / gamma
  double dz;

  void field(cplx boundary, const std::vector<cplx>& P, std::vector<cplx>& E) const {
    E[0] = boundary;
    cplx integral = 0.0;
    for (std::size_t k = 1; k <= n_z; ++k) {
      integral += 0.5 * dz * (P[k - 1] + P[k]);
      E[k] = boundary + kI * sqrt_d * integral;
    }
  }

  void rhs(cplx boundary, double rabi, const std::vector<cplx>& P, const std::vector<cplx>& S,
           std::vector<cplx>& E, std::vector<cplx>& dP, std::vector<cplx>& dS) const {
    field(boundary, P, E);
    for (std::size_t k = 0; k <= n_z; ++k) {
      dP[k] = -P[k] + kI * sqrt_d * E[k] + kI * rabi * S[k];
      dS[k] = -spin_rate * S[k] + kI * rabi * P[k];
    }
  }
};

double trapezoid_norm(const std::vector<cplx>& f, double dz) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) sum += 0.5 * dz * (std::norm(f[k]) + std::norm(f[k + 1]));
  return sum;
}

}  // namespace

double InputPulse::amplitude(double t, bool left_limit) const noexcept {
  // Grid times carry rounding error; within this tolerance t counts as the end point.
  const double end = duration();
  const double tol = 1e-9 * end;
  if (t < -tol || t > end + tol || (!left_limit && t > end - tol)) return 0.0;
  t = std::clamp(t, 0.0, end);
  if (shape == InputShape::Exponential) return std::exp(-t / (2.0 * decay));
  const double x = (t - 0.5 * end) / decay;
  return std::exp(-0.5 * x * x);
}

double ControlPulse::rabi_at(double t) const noexcept {
  const double write = smooth_off(t, write_off, ramp);
  if (mirrored_read) {
    const double mirror_point = write_off + read_on();
    if (t < 0.5 * mirror_point) return rabi * write;
    const double mirrored = mirror_point - t;  // the write control starts at t = 0
    return mirrored < 0.0 ? 0.0 : rabi * smooth_off(mirrored, write_off, ramp);
  }
  return rabi * (write + (1.0 - smooth_off(t, read_on(), ramp)));
}

double EnergyLedger::closure_error() const noexcept {
  return input > 0.0 ? std::abs(input - accounted()) / input : 0.0;
}

void MemoryConfig::validate() const {
  require(std::isfinite(optical_depth) && optical_depth >= 0.0, "optical depth must be >= 0");
  require(std::isfinite(excited_decay) && excited_decay > 0.0, "excited-state decay must be > 0");
  require(std::isfinite(spin_decay) && spin_decay >= 0.0, "spin decay must be >= 0");
  require(n_z >= 50, "need at least 50 spatial grid points");
  require(n_t >= 500, "need at least 500 time steps");
  require(input.decay > 0.0 && input.truncation > 0.0, "input pulse decay and truncation must be > 0");
  require(std::isfinite(control.rabi) && control.rabi >= 0.0, "control Rabi frequency must be >= 0");
  require(control.write_off > 0.0, "write-off time must be > 0");
  require(control.dark_time > 0.0, "read-on must come after write-off");
  require(control.ramp > 0.0, "control ramp duration must be > 0");
  require(read_duration > 0.0, "read duration must be > 0");
  if (time_step() * excited_decay > 0.1) {
    std::ostringstream msg;
    msg << "time step violates the stability bound dt * gamma <= 0.1 (got "
        << time_step() * excited_decay << "); increase n_t";
    throw DomainError(msg.str());
  }
}

MemorySolution solve_maxwell_bloch(const MemoryConfig& config) {
  config.validate();
  const double gamma = config.excited_decay;
  const std::size_t nz = config.n_z;
  const std::size_t nt = config.n_t;
  const double h = config.time_step() * gamma;  // scaled step
  const double split = (config.control.write_off + 0.5 * config.control.dark_time) * gamma;

  Dynamics dyn{nz, std::sqrt(config.optical_depth), config.spin_decay / gamma, 1.0 / static_cast<double>(nz)};
  auto boundary = [&](double s, bool left) { return cplx(config.input.amplitude(s / gamma, left)); };
  auto rabi = [&](double s) { return config.control.rabi_at(s / gamma) / gamma; };

  MemorySolution sol;
  sol.n_z = nz;
  sol.n_t = nt;
  sol.time_step = config.time_step();
  const std::size_t row = nz + 1;
  if (config.store_fields) {
    sol.E.assign((nt + 1) * row, 0.0);
    sol.P.assign((nt + 1) * row, 0.0);
    sol.S.assign((nt + 1) * row, 0.0);
  }
  sol.output.assign(nt + 1, 0.0);

  std::vector<cplx> P(row, 0.0), S(row, 0.0), E(row, 0.0);
  std::vector<cplx> Pt(row), St(row), Et(row);
  std::array<std::vector<cplx>, 4> kP, kS;
  for (auto& v : kP) v.resize(row);
  for (auto& v : kS) v.resize(row);

  dyn.field(boundary(0.0, false), P, E);
  sol.output[0] = E[nz];
  if (config.store_fields) std::copy(E.begin(), E.end(), sol.E.begin());

  EnergyLedger& ledger = sol.ledger;
  double p_norm_prev = 0.0, s_norm_prev = 0.0;

  for (std::size_t n = 0; n < nt; ++n) {
    const double t0 = static_cast<double>(n) * h;
    const double t1 = static_cast<double>(n + 1) * h;
    const double tm = t0 + 0.5 * h;
    const double in_start = boundary(t0, false).real();
    const double out_start = std::norm(E[nz]);

    dyn.rhs(boundary(t0, false), rabi(t0), P, S, Et, kP[0], kS[0]);
    for (std::size_t k = 0; k < row; ++k) {
      Pt[k] = P[k] + 0.5 * h * kP[0][k];
      St[k] = S[k] + 0.5 * h * kS[0][k];
    }
    dyn.rhs(boundary(tm, false), rabi(tm), Pt, St, Et, kP[1], kS[1]);
    for (std::size_t k = 0; k < row; ++k) {
      Pt[k] = P[k] + 0.5 * h * kP[1][k];
      St[k] = S[k] + 0.5 * h * kS[1][k];
    }
    dyn.rhs(boundary(tm, false), rabi(tm), Pt, St, Et, kP[2], kS[2]);
    for (std::size_t k = 0; k < row; ++k) {
      Pt[k] = P[k] + h * kP[2][k];
      St[k] = S[k] + h * kS[2][k];
    }
    dyn.rhs(boundary(t1, true), rabi(t1), Pt, St, Et, kP[3], kS[3]);
    for (std::size_t k = 0; k < row; ++k) {
      P[k] += h / 6.0 * (kP[0][k] + 2.0 * kP[1][k] + 2.0 * kP[2][k] + kP[3][k]);
      S[k] += h / 6.0 * (kS[0][k] + 2.0 * kS[1][k] + 2.0 * kS[2][k] + kS[3][k]);
    }

    // Step-end field with the left limit of the input, for the flux integrals.
    dyn.field(boundary(t1, true), P, E);
    const double in_end = boundary(t1, true).real();
    const double out_end = std::norm(E[nz]);
    const double p_norm = trapezoid_norm(P, dyn.dz);
    const double s_norm = trapezoid_norm(S, dyn.dz);
    if (!std::isfinite(out_end) || !std::isfinite(p_norm) || !std::isfinite(s_norm)) {
      std::ostringstream msg;
      msg << "Maxwell-Bloch integration produced a non-finite value at step " << n + 1 << " of "
          << nt << " (t = " << t1 / gamma << " s)";
      throw NumericalError(msg.str());
    }
    ledger.input += 0.5 * h * (in_start * in_start + in_end * in_end);
    const double flux = 0.5 * h * (out_start + out_end);
    (t1 <= split ? ledger.leaked : ledger.retrieved) += flux;
    ledger.dissipated += h * (p_norm_prev + p_norm) + dyn.spin_rate * h * (s_norm_prev + s_norm);
    p_norm_prev = p_norm;
    s_norm_prev = s_norm;

    // Continue from the right limit.
    dyn.field(boundary(t1, false), P, E);
    sol.output[n + 1] = E[nz];
    if (config.store_fields) {
      std::copy(E.begin(), E.end(), sol.E.begin() + static_cast<std::ptrdiff_t>((n + 1) * row));
      std::copy(P.begin(), P.end(), sol.P.begin() + static_cast<std::ptrdiff_t>((n + 1) * row));
      std::copy(S.begin(), S.end(), sol.S.begin() + static_cast<std::ptrdiff_t>((n + 1) * row));
    }
  }
  ledger.remaining = p_norm_prev + s_norm_prev;
  return sol;
}

double storage_retrieval_efficiency(const MemorySolution& solution) {
  if (!(solution.ledger.input > 0.0)) throw NumericalError("efficiency undefined for zero input");
  return solution.ledger.retrieved / solution.ledger.input;
}

std::vector<std::pair<double, double>> efficiency_curve(std::span<const double> optical_depths,
                                                        const MemoryConfig& base, unsigned threads) {
  require(std::is_sorted(optical_depths.begin(), optical_depths.end()),
          "optical depth list must be sorted ascending");
  std::vector<std::pair<double, double>> curve(optical_depths.size());
  parallel_for(optical_depths.size(), threads, [&](std::size_t i) {
    MemoryConfig config = base;
    config.optical_depth = optical_depths[i];
    config.store_fields = false;
    curve[i] = {optical_depths[i], storage_retrieval_efficiency(solve_maxwell_bloch(config))};
  });
  return curve;
}

}  // namespace cascade
