#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "cascade/detection.hpp"
#include "cascade/error.hpp"

namespace cascade {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<double, 5> kNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                       0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kWeights{0.2369268850561891, 0.4786286704993665,
                                         0.5688888888888889, 0.4786286704993665,
                                         0.2369268850561891};

// Parameters in fit units: background, amplitude, decay [ns], beat frequency [GHz].
using Params = Eigen::VectorXd;

struct Problem {
  std::vector<double> starts_ns;
  std::vector<double> counts;
  std::vector<double> weights;
  double width_ns;
  ProfileKind kind;

  std::size_t n_params() const { return kind == ProfileKind::Beat ? 4 : 3; }
};

// Bin-averaged envelope shape exp(-tau/alpha) g(tau), without amplitude.
double shape(const Problem& p, std::size_t bin, double alpha, double omega) {
  double sum = 0.0;
  const double mid = p.starts_ns[bin] + 0.5 * p.width_ns;
  for (std::size_t k = 0; k < kNodes.size(); ++k) {
    const double tau = mid + 0.5 * p.width_ns * kNodes[k];
    double v = std::exp(-tau / alpha);
    if (p.kind == ProfileKind::Beat) {
      const double s = std::sin(kPi * omega * tau);
      v *= s * s;
    }
    sum += kWeights[k] * v;
  }
  return 0.5 * sum;
}

// Model values and Jacobian (rows = bins).
void evaluate(const Problem& p, const Params& theta, Eigen::VectorXd& model, Eigen::MatrixXd& jac) {
  const std::size_t n = p.counts.size();
  const std::size_t m = p.n_params();
  model.resize(static_cast<Eigen::Index>(n));
  jac.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  const double background = theta[0], amplitude = theta[1], alpha = theta[2];
  const double omega = m == 4 ? theta[3] : 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double mid = p.starts_ns[b] + 0.5 * p.width_ns;
    double f = 0.0, d_amp = 0.0, d_alpha = 0.0, d_omega = 0.0;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
      const double tau = mid + 0.5 * p.width_ns * kNodes[k];
      const double w = 0.5 * kWeights[k];
      const double e = std::exp(-tau / alpha);
      double g = 1.0, dg = 0.0;
      if (p.kind == ProfileKind::Beat) {
        const double s = std::sin(kPi * omega * tau);
        g = s * s;
        dg = kPi * tau * std::sin(2.0 * kPi * omega * tau);
      }
      f += w * amplitude * e * g;
      d_amp += w * e * g;
      d_alpha += w * amplitude * e * g * tau / (alpha * alpha);
      d_omega += w * amplitude * e * dg;
    }
    const auto i = static_cast<Eigen::Index>(b);
    model[i] = background + f;
    jac(i, 0) = 1.0;
    jac(i, 1) = d_amp;
    jac(i, 2) = d_alpha;
    if (m == 4) jac(i, 3) = d_omega;
  }
}

double chi_squared(const Problem& p, const Eigen::VectorXd& model) {
  double chi2 = 0.0;
  for (std::size_t b = 0; b < p.counts.size(); ++b) {
    const double r = p.counts[b] - model[static_cast<Eigen::Index>(b)];
    chi2 += p.weights[b] * r * r;
  }
  return chi2;
}

struct Start {
  double chi2;
  Params theta;
};

// Linear weighted least squares for (background, amplitude) at fixed shape.
Start linear_start(const Problem& p, double alpha, double omega) {
  double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0;
  std::vector<double> phi(p.counts.size());
  for (std::size_t b = 0; b < p.counts.size(); ++b) {
    phi[b] = shape(p, b, alpha, omega);
    const double w = p.weights[b];
    s00 += w;
    s01 += w * phi[b];
    s11 += w * phi[b] * phi[b];
    r0 += w * p.counts[b];
    r1 += w * phi[b] * p.counts[b];
  }
  const double det = s00 * s11 - s01 * s01;
  double background = r0 / s00, amplitude = 0.0;
  if (std::abs(det) > 1e-300) {
    background = (r0 * s11 - r1 * s01) / det;
    amplitude = (s00 * r1 - s01 * r0) / det;
  }
  Params theta(static_cast<Eigen::Index>(p.n_params()));
  theta[0] = background;
  theta[1] = amplitude;
  theta[2] = alpha;
  if (p.n_params() == 4) theta[3] = omega;
  double chi2 = 0.0;
  for (std::size_t b = 0; b < p.counts.size(); ++b) {
    const double r = p.counts[b] - background - amplitude * phi[b];
    chi2 += p.weights[b] * r * r;
  }
  return {chi2, theta};
}

struct LmResult {
  Params theta;
  double chi2;
  int iterations;
  bool converged;
};

LmResult levenberg_marquardt(const Problem& p, Params theta, int max_iterations) {
  Eigen::VectorXd model;
  Eigen::MatrixXd jac;
  evaluate(p, theta, model, jac);
  double chi2 = chi_squared(p, model);
  double lambda = 1e-3;
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      p.weights.data(), static_cast<Eigen::Index>(p.weights.size()));
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      p.counts.data(), static_cast<Eigen::Index>(p.counts.size()));

  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd normal = jac.transpose() * w.asDiagonal() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * (w.asDiagonal() * (y - model));
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = normal;
      for (Eigen::Index k = 0; k < damped.rows(); ++k) {
        damped(k, k) += lambda * std::max(normal(k, k), 1e-12);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(gradient);
      const Params trial = theta + step;
      const bool feasible = step.allFinite() && trial[2] > 0.0 &&
                            (p.n_params() < 4 || trial[3] > 0.0);
      if (feasible) {
        Eigen::VectorXd trial_model;
        Eigen::MatrixXd trial_jac;
        evaluate(p, trial, trial_model, trial_jac);
        const double trial_chi2 = chi_squared(p, trial_model);
        if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
          const double drop = chi2 - trial_chi2;
          double rel_step = 0.0;
          for (Eigen::Index k = 0; k < step.size(); ++k) {
            rel_step = std::max(rel_step, std::abs(step[k]) / std::max(std::abs(trial[k]), 1e-12));
          }
          theta = trial;
          model = std::move(trial_model);
          jac = std::move(trial_jac);
          chi2 = trial_chi2;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (rel_step < 1e-10 || drop <= 1e-12 * std::max(chi2, 1e-300)) {
            return {theta, chi2, it, true};
          }
        }
      }
      if (!accepted) {
        lambda *= 10.0;
        // No downhill direction left at any damping: a minimum within precision.
        if (lambda > 1e14) return {theta, chi2, it, true};
      }
    }
  }
  return {theta, chi2, max_iterations, false};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  }
  return out;
}

}  // namespace

double ProfileFit::sigma(std::size_t parameter) const {
  require(parameter < n_parameters, "fit parameter index out of range");
  return std::sqrt(covariance[parameter * n_parameters + parameter]);
}

BinnedCounts BinnedCounts::from_histogram(const CoincidenceHistogram& histogram) {
  BinnedCounts out;
  out.bin_width = histogram.bin_width();
  out.bin_starts.reserve(histogram.counts.size());
  out.counts.reserve(histogram.counts.size());
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    out.bin_starts.push_back(histogram.bin_start(i));
    out.counts.push_back(static_cast<double>(histogram.counts[i]));
  }
  return out;
}

ProfileFit fit_profile(const BinnedCounts& data, ProfileKind kind, const FitOptions& options) {
  require(data.bin_starts.size() == data.counts.size(), "bin starts and counts differ in length");
  require(data.bin_width > 0.0, "bin width must be positive");
  require(options.max_iterations > 0, "iteration limit must be positive");

  Problem p;
  p.kind = kind;
  p.width_ns = data.bin_width * 1e9;
  std::size_t nonzero = 0;
  for (std::size_t b = 0; b < data.counts.size(); ++b) {
    if (data.bin_starts[b] < options.time_origin - 1e-15) continue;
    require(std::isfinite(data.counts[b]) && data.counts[b] >= 0.0, "counts must be >= 0");
    p.starts_ns.push_back((data.bin_starts[b] - options.time_origin) * 1e9);
    p.counts.push_back(data.counts[b]);
    p.weights.push_back(1.0 / std::max(data.counts[b], 1.0));
    if (data.counts[b] > 0.0) ++nonzero;
  }
  if (nonzero < 10) throw DomainError("profile fit needs at least 10 non-zero bins");
  const std::size_t m = p.n_params();
  if (p.counts.size() <= m) throw DomainError("profile fit needs more bins than parameters");

  const double span_ns = p.starts_ns.back() + p.width_ns - p.starts_ns.front();
  const auto alphas = log_grid(0.25 * p.width_ns, span_ns, 40);
  std::vector<double> omegas{0.0};
  if (kind == ProfileKind::Beat) {
    require(options.max_beat_frequency > options.min_beat_frequency &&
                options.min_beat_frequency > 0.0 && options.beat_grid_step > 0.0,
            "beat frequency grid is invalid");
    omegas.clear();
    for (double f = options.min_beat_frequency; f <= options.max_beat_frequency * (1 + 1e-12);
         f += options.beat_grid_step) {
      omegas.push_back(f * 1e-9);
    }
  }

  std::vector<Start> starts;
  for (const double omega : omegas) {
    for (const double alpha : alphas) starts.push_back(linear_start(p, alpha, omega));
  }
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.chi2 < b.chi2; });

  std::optional<LmResult> best;
  const std::size_t tries = std::min<std::size_t>(starts.size(), kind == ProfileKind::Beat ? 5 : 2);
  for (std::size_t s = 0; s < tries; ++s) {
    const auto result = levenberg_marquardt(p, starts[s].theta, options.max_iterations);
    if (result.converged && (!best || result.chi2 < best->chi2)) best = result;
  }
  if (!best) {
    std::ostringstream msg;
    msg << "profile fit did not converge within " << options.max_iterations << " iterations from "
        << tries << " starts; best grid chi2 = " << starts.front().chi2;
    throw FitError(msg.str());
  }

  // Reweight with the model (Pearson) until the weights settle. The fixed point is the
  // Poisson maximum-likelihood estimate, which avoids the low-count bias of 1/N weights.
  Eigen::VectorXd model;
  Eigen::MatrixXd jac;
  for (int round = 0; round < 20; ++round) {
    evaluate(p, best->theta, model, jac);
    double change = 0.0;
    for (std::size_t b = 0; b < p.counts.size(); ++b) {
      const double w = 1.0 / std::max(model[static_cast<Eigen::Index>(b)], 1e-3);
      change = std::max(change, std::abs(w - p.weights[b]) / w);
      p.weights[b] = w;
    }
    if (change < 1e-8) break;
    const auto refined = levenberg_marquardt(p, best->theta, options.max_iterations);
    if (!refined.converged) throw FitError("profile fit did not converge while reweighting");
    best = refined;
  }
  evaluate(p, best->theta, model, jac);
  best->chi2 = chi_squared(p, model);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      p.weights.data(), static_cast<Eigen::Index>(p.weights.size()));
  const Eigen::MatrixXd normal = jac.transpose() * w.asDiagonal() * jac;
  // Conditioning check on the unit-diagonal form of the normal matrix.
  Eigen::VectorXd scale = normal.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = scale.asDiagonal() * normal * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double max_eig = eig.eigenvalues().maxCoeff();
  if (!(min_eig > 1e-12 * max_eig)) {
    std::ostringstream msg;
    msg << "profile fit parameters are not identifiable (normal-matrix eigenvalue ratio "
        << min_eig / max_eig << ", fitted amplitude " << best->theta[1] << ")";
    throw FitError(msg.str());
  }
  const Eigen::MatrixXd cov_fit = scale.asDiagonal() * scaled.inverse() * scale.asDiagonal();

  // Back to SI: decay ns -> s, beat GHz -> Hz.
  const std::array<double, 4> to_si{1.0, 1.0, 1e-9, 1e9};
  ProfileFit fit;
  fit.n_parameters = m;
  fit.covariance.resize(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      fit.covariance[r * m + c] = cov_fit(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                                  to_si[r] * to_si[c];
    }
  }
  fit.profile.kind = kind;
  fit.profile.background = best->theta[0];
  fit.profile.amplitude = best->theta[1];
  fit.profile.decay = best->theta[2] * 1e-9;
  fit.profile.beat_frequency = kind == ProfileKind::Beat ? best->theta[3] * 1e9 : 0.0;
  fit.chi_squared = best->chi2;
  fit.degrees_of_freedom = p.counts.size() - m;
  fit.iterations = best->iterations;
  return fit;
}

ProfileFit fit_profile(const CoincidenceHistogram& histogram, ProfileKind kind,
                       const FitOptions& options) {
  return fit_profile(BinnedCounts::from_histogram(histogram), kind, options);
}

}  // namespace cascade
