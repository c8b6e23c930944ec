#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>

namespace quasidiff {

/// Closed interval [lo, hi] enclosing an exact real quantity.
///
/// Arithmetic is ordinary interval arithmetic without directed rounding; the
/// quantities handled here are sums of a few thousand terms, so floating
/// point slack is far below every tolerance the library certifies.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Bracket() = default;
  constexpr Bracket(double v) : lo(v), hi(v) {}  // NOLINT(implicit)
  constexpr Bracket(double l, double h) : lo(l), hi(h) {}

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
  bool exact() const { return lo == hi; }

  Bracket& operator+=(const Bracket& o) {
    lo += o.lo;
    hi += o.hi;
    return *this;
  }
  Bracket& operator-=(const Bracket& o) {
    lo -= o.hi;
    hi -= o.lo;
    return *this;
  }
};

inline Bracket operator+(Bracket a, const Bracket& b) { return a += b; }
inline Bracket operator-(Bracket a, const Bracket& b) { return a -= b; }
inline Bracket operator-(const Bracket& a) { return {-a.hi, -a.lo}; }

inline Bracket operator*(const Bracket& a, const Bracket& b) {
  if (a.exact() && b.exact()) return Bracket(a.lo * b.lo);
  const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

/// Requires b not to contain zero.
inline Bracket operator/(const Bracket& a, const Bracket& b) {
  if (a.exact() && b.exact()) return Bracket(a.lo / b.lo);
  return a * Bracket(1.0 / b.hi, 1.0 / b.lo);
}

inline Bracket square(const Bracket& a) {
  if (a.exact()) return Bracket(a.lo * a.lo);
  const double l2 = a.lo * a.lo, h2 = a.hi * a.hi;
  if (a.lo <= 0.0 && a.hi >= 0.0) return {0.0, std::max(l2, h2)};
  return {std::min(l2, h2), std::max(l2, h2)};
}

inline Bracket hull(const Bracket& a, const Bracket& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

/// Widens symmetrically by e.
inline Bracket widen(const Bracket& a, double e) { return {a.lo - e, a.hi + e}; }

inline std::ostream& operator<<(std::ostream& os, const Bracket& b) {
  return os << '[' << b.lo << ", " << b.hi << ']';
}

}  // namespace quasidiff
