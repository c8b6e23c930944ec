#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quasidiff/bracket.hpp"
#include "quasidiff/measures.hpp"
#include "quasidiff/pl.hpp"
#include "quasidiff/sets.hpp"

namespace quasidiff {

/// Piece of [l,r] on which the extended scale has constant slope.
struct ScaleSegment {
  double lo;
  double hi;
  double slope;
  bool chord;  // a gap of E crossed by a break of the PL scale
};

/// Scale function on a nearly closed set E. Values are normalized to
/// s(l) = 0; the extended scale is affine on every gap of E.
class ScaleFunction {
 public:
  enum class Variant { Natural, CharSet, PL };

  static ScaleFunction natural(NearlyClosedSet e);
  /// s(x) = |Gbar cap (l, x]| with Gbar = G u (I \ E). No density check; use
  /// scale_from_charset for a certified construction.
  static ScaleFunction charset(NearlyClosedSet e, MeasurableSubset g);
  /// s is given on E by a nondecreasing PL function whose breaks cover [l,r].
  static ScaleFunction general_pl(NearlyClosedSet e, PLFunction s);

  Variant variant() const { return variant_; }
  const NearlyClosedSet& set() const { return e_; }
  const MeasurableSubset& charset_g() const { return g_; }
  const PLFunction& pl() const { return *pl_; }
  bool certified() const { return certified_; }

  /// Extended scale at x in [l, r].
  Bracket extended(double x, double tol) const;
  /// s(b) - s(a) for a <= b in [l, r].
  Bracket increment(double a, double b, double tol) const;
  /// Slope segments of the extended scale; Natural gives one slope-1 piece,
  /// CharSet has no piecewise-constant description and throws Unsupported.
  std::vector<ScaleSegment> segments() const;

  bool operator==(const ScaleFunction& o) const;

 private:
  friend ScaleFunction scale_from_charset(const NearlyClosedSet&, const MeasurableSubset&, double, double);
  ScaleFunction(Variant v, NearlyClosedSet e) : variant_(v), e_(std::move(e)) {}

  Variant variant_;
  NearlyClosedSet e_;
  MeasurableSubset g_;
  std::optional<PLFunction> pl_;
  bool certified_ = false;
};

/// The extended scale as a function on [l, r].
class ExtendedScale {
 public:
  explicit ExtendedScale(ScaleFunction s) : s_(std::move(s)) {}
  const ScaleFunction& scale() const { return s_; }
  Bracket operator()(double x, double tol) const { return s_.extended(x, tol); }
  /// Slope across the gap (a,b).
  Bracket gap_slope(Interval gap, double tol) const;

 private:
  ScaleFunction s_;
};

ExtendedScale extend_scale(const ScaleFunction& s);

/// Outcome of the measure-density check of Gbar = G u (I \ E).
struct DensityCertificate {
  enum class Outcome { Dense, NotDense, Unknown } outcome;
  std::optional<Interval> witness;  // interval where |G cap J| < tol
  Bracket witness_measure;
};
DensityCertificate certify_measure_dense(const NearlyClosedSet& e, const MeasurableSubset& g, double tol);

/// Certified CharScale. The anchor e must lie in E; values are normalized to
/// s(l) = 0, so e only fixes the reference point of the construction.
/// Throws NotMeasureDense with a witness, or CertificateUnknown.
ScaleFunction scale_from_charset(const NearlyClosedSet& e, const MeasurableSubset& g, double anchor, double tol);

struct SVerdict {
  enum class Outcome { Yes, No, Unknown } outcome;
  std::optional<Interval> witness;
  std::string reason;
};
SVerdict is_in_S(const ScaleFunction& s, double tol);

/// G = {x in E : s'(x) = 1}. Throws NotInS.
MeasurableSubset characteristic_set_of(const ScaleFunction& s, double tol);

/// F(y) = integral over (l, y] of (sbar'^2 - sbar') dx.
Bracket defect_cumulative(const ScaleFunction& s, double y, double tol);

/// Image measure mu o s^{-1}. Non-atomic measures need a piecewise-linear
/// scale; NotInjective if s is flat on the support.
StieltjesMeasure pushforward(const StieltjesMeasure& mu, const ScaleFunction& s, double tol);

}  // namespace quasidiff
