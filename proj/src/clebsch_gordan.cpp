#include "cascade/clebsch_gordan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "cascade/error.hpp"

namespace cascade {

namespace {

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

void check_pair(HalfInteger j, HalfInteger m, const char* label) {
  if (j.twice() < 0) throw DomainError(std::string(label) + ": j must be non-negative");
  if (std::abs(m.twice()) > j.twice()) throw DomainError(std::string(label) + ": |m| > j");
  if ((j.twice() - m.twice()) % 2 != 0) {
    throw DomainError(std::string(label) + ": j and m must both be integer or half-integer");
  }
}

}  // namespace

HalfInteger::HalfInteger(double value) {
  const double twice = 2.0 * value;
  const double rounded = std::round(twice);
  if (!std::isfinite(value) || std::abs(twice - rounded) > 1e-9 || std::abs(rounded) > 1e6) {
    throw DomainError("quantum number must be a multiple of 1/2");
  }
  twice_ = static_cast<int>(rounded);
}

double clebsch_gordan(HalfInteger j1, HalfInteger m1, HalfInteger j2, HalfInteger m2,
                      HalfInteger J, HalfInteger M) {
  check_pair(j1, m1, "j1");
  check_pair(j2, m2, "j2");
  check_pair(J, M, "J");
  const int a = j1.twice(), b = j2.twice(), c = J.twice();
  if (c < std::abs(a - b) || c > a + b || (a + b + c) % 2 != 0) {
    throw DomainError("(j1, j2, J) violates the triangle rule");
  }
  if (m1.twice() + m2.twice() != M.twice()) return 0.0;

  // Integer arguments of the factorials, all halved from doubled units.
  const int jpj_m_J = (a + b - c) / 2;
  const int j1_m_m1 = (a - m1.twice()) / 2;
  const int j2_p_m2 = (b + m2.twice()) / 2;
  const int J_m_j2_p_m1 = (c - b + m1.twice()) / 2;
  const int J_m_j1_m_m2 = (c - a - m2.twice()) / 2;

  const double log_prefactor =
      0.5 * (std::log(c + 1.0) + log_factorial(jpj_m_J) + log_factorial((a - b + c) / 2) +
             log_factorial((-a + b + c) / 2) - log_factorial((a + b + c) / 2 + 1) +
             log_factorial((a + m1.twice()) / 2) + log_factorial(j1_m_m1) +
             log_factorial((b - m2.twice()) / 2) + log_factorial(j2_p_m2) +
             log_factorial((c + M.twice()) / 2) + log_factorial((c - M.twice()) / 2));

  const int k_min = std::max({0, -J_m_j2_p_m1, -J_m_j1_m_m2});
  const int k_max = std::min({jpj_m_J, j1_m_m1, j2_p_m2});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double log_den = log_factorial(k) + log_factorial(jpj_m_J - k) +
                           log_factorial(j1_m_m1 - k) + log_factorial(j2_p_m2 - k) +
                           log_factorial(J_m_j2_p_m1 + k) + log_factorial(J_m_j1_m_m2 + k);
    const double term = std::exp(log_prefactor - log_den);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M) {
  return clebsch_gordan(HalfInteger(j1), HalfInteger(m1), HalfInteger(j2), HalfInteger(m2),
                        HalfInteger(J), HalfInteger(M));
}

}  // namespace cascade
