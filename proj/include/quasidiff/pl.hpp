#pragma once

#include <vector>

namespace quasidiff {

/// Continuous piecewise-linear function of x, constant outside its breaks.
class PLFunction {
 public:
  PLFunction(std::vector<double> breaks, std::vector<double> values);

  static PLFunction identity(double lo, double hi) { return PLFunction({lo, hi}, {lo, hi}); }
  static PLFunction constant(double v, double lo, double hi) { return PLFunction({lo, hi}, {v, v}); }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t pieces() const { return breaks_.size() - 1; }
  /// Slope on [breaks[i], breaks[i+1]].
  double slope(std::size_t i) const;
  double operator()(double x) const;
  double lipschitz() const;

  PLFunction clamped(double lo, double hi) const;
  PLFunction scaled(double c) const;
  friend PLFunction operator+(const PLFunction& a, const PLFunction& b);

  bool operator==(const PLFunction&) const = default;

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

}  // namespace quasidiff
