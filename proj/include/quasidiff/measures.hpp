#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quasidiff/bracket.hpp"
#include "quasidiff/pl.hpp"
#include "quasidiff/sets.hpp"

namespace quasidiff {

struct Atom {
  double x;
  double w;
  bool operator==(const Atom&) const = default;
};

/// Density c0 + c1 x on a closed interval.
struct DensityPiece {
  Interval support;
  double c0 = 1.0;
  double c1 = 0.0;

  double at(double x) const { return c0 + c1 * x; }
  bool operator==(const DensityPiece&) const = default;
};

/// coef * 1_A(x) dx.
struct IndicatorPiece {
  MeasurableSubset set;
  double coef = 1.0;
};

/// Radon measure on R made of atoms, affine densities and indicator
/// densities, doubling as the increasing function m it induces:
/// m(x) = anchor_value + mass((anchor, x]), m = -inf left of l0 and
/// m = +inf from r0 on.
class StieltjesMeasure {
 public:
  std::vector<Atom> atoms;
  std::vector<DensityPiece> densities;
  std::vector<IndicatorPiece> indicators;
  double l0 = -kInf;
  double r0 = kInf;
  std::optional<double> anchor;  // default: l0 if finite, else left of the support
  double anchor_value = 0.0;

  static StieltjesMeasure lebesgue(Interval iv, double density = 1.0);
  static StieltjesMeasure atomic(std::vector<Atom> atoms);
  /// coef times Lebesgue measure restricted to E.
  static StieltjesMeasure restricted_lebesgue(const NearlyClosedSet& e, double coef = 1.0);

  /// Throws InvalidInput on negative densities, non-positive masses or
  /// unbounded indicator sets.
  void validate() const;

  /// Bracket for the mass of (a,b]; a may be -inf, b may be +inf.
  Bracket mass(double a, double b, double tol) const;
  Bracket total_mass(double tol) const { return mass(-kInf, kInf, tol); }
  /// Closed interval containing the support; nullopt for the zero measure.
  std::optional<Interval> support_hull() const;
  double anchor_point() const;

  StieltjesMeasure scaled(double c) const;
  /// Sum of the component lists; function-form fields are taken from a.
  friend StieltjesMeasure operator+(const StieltjesMeasure& a, const StieltjesMeasure& b);
  bool is_atomic() const { return densities.empty() && indicators.empty(); }
};

/// m(x) with the right-continuous convention. InfiniteValue outside [l0, r0).
Bracket cumulative(const StieltjesMeasure& m, double x, double tol);

struct StateSpaceDerivation {
  double l0, r0, l, r;
  NearlyClosedSet e_m;
  bool qk_satisfied;
};

/// E_m is the closed support of dm cut to (l0, r0). Support comes from the
/// component structure; indicator sets must be leaves or unions of leaves.
StateSpaceDerivation derive_state_space(const StieltjesMeasure& m);

/// Bracket for the integral of f against mu.
Bracket integrate(const PLFunction& f, const StieltjesMeasure& mu, double tol);

}  // namespace quasidiff
