#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quasidiff/bracket.hpp"
#include "quasidiff/measures.hpp"
#include "quasidiff/pl.hpp"
#include "quasidiff/scale.hpp"
#include "quasidiff/sets.hpp"

namespace quasidiff {

/// Test function h(x) = v0 + sum_j slope_j |A cap (x_j, min(x, x_{j+1})]|,
/// constant outside [x_0, x_n]. A is the whole line for the natural
/// coordinate (h is then piecewise linear in x) and Gbar_c = G_c u (I \ E_c)
/// for a characteristic-set coordinate c, so that h is piecewise linear in c.
class TestFunction {
 public:
  static TestFunction natural(const PLFunction& f);
  static TestFunction in_scale(const ScaleFunction& coordinate, std::vector<double> knots,
                               std::vector<double> slopes, double v0 = 0.0);
  /// The scale itself, as a function of x.
  static TestFunction scale_of(const ScaleFunction& s);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& slopes() const { return slopes_; }
  double base_value() const { return v0_; }
  /// Unset for the natural coordinate.
  const std::optional<ScaleFunction>& coordinate() const { return coord_; }
  bool is_natural() const { return !coord_; }
  /// G_c: where h may vary on E_c. Unset for the natural coordinate.
  std::optional<MeasurableSubset> active_on_E() const;

  Bracket operator()(double x, double tol) const;
  /// Slope at x in the coordinate variable (0 outside the knot range).
  double slope_at(double x) const;
  /// h(b) - h(a) for an interval (a,b) inside a gap of the coordinate's E.
  double gap_increment(double a, double b) const;
  /// Bound on |h(b) - h(a)| / (b - a) across any gap.
  double lipschitz() const;

  /// The natural PL function; throws Unsupported for other coordinates.
  PLFunction as_pl() const;
  TestFunction clamped(double lo, double hi) const;
  TestFunction scaled(double c) const;

 private:
  std::vector<double> knots_;
  std::vector<double> slopes_;
  double v0_ = 0.0;
  std::optional<ScaleFunction> coord_;
};

struct DomainVerdict {
  enum class Outcome { Yes, No, Unknown } outcome;
  std::string reason;
};

/// Dirichlet form of the skip-free process with state space E, scale s and
/// symmetrizing measure mu.
struct FormDescriptor {
  NearlyClosedSet e;
  ScaleFunction s;
  StieltjesMeasure mu;
  bool dirichlet_l = false;  // l not in E and s(l) finite
  bool dirichlet_r = false;

  /// Checks s lives on E and mu satisfies (QK); sets the boundary flags.
  static FormDescriptor make(NearlyClosedSet e, ScaleFunction s, StieltjesMeasure mu);
  /// Natural scale with mu the Lebesgue measure restricted to E, atoms on points.
  static FormDescriptor natural(const NearlyClosedSet& e);
};

DomainVerdict in_domain(const FormDescriptor& form, const TestFunction& f, double tol);

struct EnergyResult {
  Bracket value;
  Bracket local;           // 1/2 int_E (df/ds)(dg/ds) ds
  Bracket jump;            // 1/2 sum over gaps
  std::size_t explicit_gaps = 0;
  std::size_t aggregated_blocks = 0;  // stage intervals summed in closed form
  double tail_bound = 0.0;            // Lipschitz bound on truncated blocks
};

/// Energy of the form. In strict mode inputs outside the domain throw
/// DomainViolation; otherwise the functional is evaluated with the singular
/// part (df on a flat region of s) dropped.
EnergyResult energy_detailed(const FormDescriptor& form, const TestFunction& f, const TestFunction& g, double tol,
                             bool strict = false);
Bracket energy(const FormDescriptor& form, const TestFunction& f, const TestFunction& g, double tol,
               bool strict = false);

struct JumpWeight {
  Interval gap;
  double weight;  // J of each ordered pair of endpoints
};
std::vector<JumpWeight> jump_weights(const NearlyClosedSet& e, std::size_t max_count);

struct ProbeRow {
  std::size_t index;
  DomainVerdict child_domain;
  DomainVerdict parent_domain;
  Bracket child_energy;
  Bracket parent_energy;
  double gap;                       // |child - parent|
  Bracket scale_integral;           // int (dh/dsbar)^2 dsbar over I
  Bracket x_integral;               // int h'^2 dx over I
  std::optional<Bracket> predicted; // 1/2 int (dh/dsbar)^2 dnu, equals parent - child
  bool pass;
  std::string note;
};

struct SubspaceReport {
  SVerdict membership;
  std::vector<ProbeRow> rows;
  bool pass;
  double tol;
};

/// Compares a child form against the natural-scale parent on shared E and mu.
SubspaceReport verify_subspace(const FormDescriptor& child, const FormDescriptor& parent,
                               const std::vector<TestFunction>& probes, double tol);
std::string to_csv(const SubspaceReport& report);

/// Random PL probes for verify_subspace, written in the coordinate of the
/// form's scale when it is a characteristic-set scale and in x otherwise.
/// Knots include l and r; slopes lie in [-2, 2].
std::vector<TestFunction> random_probes(const FormDescriptor& form, std::size_t n, std::uint64_t seed,
                                        std::size_t inner_knots = 3);

struct TraceIdentity {
  Bracket lhs;  // E(f|E, f|E) with the natural scale
  Bracket rhs;  // 1/2 int_I (Hf)'^2, Hf affine on gaps
  double gap;
};
TraceIdentity trace_energy_identity(const NearlyClosedSet& e, const PLFunction& f, double tol);

}  // namespace quasidiff
