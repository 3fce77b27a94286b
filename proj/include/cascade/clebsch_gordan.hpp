#pragma once

namespace cascade {

/// Angular-momentum quantum number stored as twice its value.
class HalfInteger {
public:
  constexpr HalfInteger() = default;
  /// Throws DomainError unless `value` is an exact multiple of 1/2.
  explicit HalfInteger(double value);

  static constexpr HalfInteger from_twice(int twice) noexcept {
    HalfInteger h;
    h.twice_ = twice;
    return h;
  }

  constexpr int twice() const noexcept { return twice_; }
  constexpr double value() const noexcept { return 0.5 * twice_; }

private:
  int twice_ = 0;
};

/// <j1 m1; j2 m2 | J M> from the Racah closed-form sum (Condon-Shortley phase).
///
/// Returns 0 when M != m1 + m2. Throws DomainError for |m| > j, negative j,
/// m and j of different parity, or (j1, j2, J) violating the triangle rule.
double clebsch_gordan(HalfInteger j1, HalfInteger m1, HalfInteger j2, HalfInteger m2,
                      HalfInteger J, HalfInteger M);

double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M);

}  // namespace cascade
