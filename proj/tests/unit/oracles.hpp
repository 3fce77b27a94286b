#pragma once
// Independent reference computations used to check the library.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// Two-qubit state as a plain 4-vector; kron builds product bras explicitly.
using Vec4 = std::array<double, 4>;

inline Vec4 kron(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
}

inline std::array<double, 2> polarizer_bra(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline double projection(double chi, double theta_s, double theta_i) {
  const Vec4 psi{std::cos(chi), 0.0, 0.0, std::sin(chi)};
  const Vec4 bra = kron(polarizer_bra(theta_s), polarizer_bra(theta_i));
  double overlap = 0.0;
  for (int k = 0; k < 4; ++k) overlap += bra[k] * psi[k];
  return overlap * overlap;
}

inline double four_projector_E(double chi, double s, double i) {
  const double sp = s + kPi / 2, ip = i + kPi / 2;
  const double a = projection(chi, s, i), b = projection(chi, sp, ip);
  const double c = projection(chi, sp, i), d = projection(chi, s, ip);
  return (a + b - c - d) / (a + b + c + d);
}

inline double chsh(double chi, const std::array<double, 4>& x) {
  return std::abs(four_projector_E(chi, x[0], x[2]) + four_projector_E(chi, x[1], x[2])) +
         std::abs(four_projector_E(chi, x[0], x[3]) - four_projector_E(chi, x[1], x[3]));
}

// Golden-section search for the maximum of f on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc; c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + g * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Coarse grid over all four angles, then cyclic coordinate refinement.
inline double max_chsh(double chi) {
  const int n = 24;
  const double step = kPi / n;
  std::array<double, 4> best{};
  double best_s = -1.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          const std::array<double, 4> x{a * step, b * step, c * step, d * step};
          const double s = chsh(chi, x);
          if (s > best_s) { best_s = s; best = x; }
        }
  for (int sweep = 0; sweep < 60; ++sweep) {
    for (int k = 0; k < 4; ++k) {
      auto f = [&](double v) { auto x = best; x[k] = v; return chsh(chi, x); };
      best[k] = golden_max(f, best[k] - step, best[k] + step);
    }
  }
  return chsh(chi, best);
}

// Signal angle from transverse wavevector balance, found by bisection.
inline double signal_angle_by_bisection(double lambda_s, double lambda_i, double eps) {
  const double k_s = 2 * kPi / lambda_s, k_i = 2 * kPi / lambda_i;
  auto residual = [&](double e) { return k_s * std::sin(e) - k_i * std::sin(eps); };
  double lo = 0.0, hi = kPi / 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
