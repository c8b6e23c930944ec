#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "quasidiff/bracket.hpp"

namespace quasidiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Tri { In, Out, Unknown };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Removal fractions rho_n = coef * ratio^{-n}, each a fraction of the base
/// length, removed as 2^{n-1} centered open intervals at stage n.
struct RemovalSchedule {
  double coef = 1.0;
  double ratio = 4.0;

  double rho(int n) const;
  /// Sum over all stages of 2^{n-1} rho_n.
  double removed_fraction() const;
  /// Sum over stages n > depth of 2^{n-1} rho_n.
  double removed_fraction_after(int depth) const;

  /// "4^-n" or "2*4^-n".
  std::string to_string() const;
  static RemovalSchedule parse(const std::string& text);

  bool operator==(const RemovalSchedule&) const = default;
};

/// Smith-Volterra-Cantor generator on a closed base interval.
class SVCSet {
 public:
  static constexpr int kMaxStage = 60;

  SVCSet(Interval base, RemovalSchedule schedule = {});

  const Interval& base() const { return base_; }
  const RemovalSchedule& schedule() const { return schedule_; }

  double measure() const;
  bool null() const { return measure() <= 0.0; }
  /// Length of every stage-n remaining closed interval (stage 0 is the base).
  double stage_length(int n) const;
  /// Length of every open interval removed at stage n >= 1.
  double gap_length(int n) const;
  /// Lebesgue measure of the generator inside one stage-n interval.
  double stage_mass(int n) const;
  /// Total length of the removed intervals.
  double total_gap_length() const;

  SVCSet affine(double scale, double shift) const;

  /// Removed interval containing x among stages 1..depth; x must be strictly inside it.
  std::optional<Interval> gap_containing(double x, int depth) const;
  Tri contains(double x, int depth) const;

  bool operator==(const SVCSet& o) const { return base_ == o.base_ && schedule_ == o.schedule_; }

 private:
  Interval base_;
  RemovalSchedule schedule_;
  std::vector<double> stage_len_;  // relative to base length
};

/// Measure-dense Borel subset of (c,d) with 0 < |U cap J| < |J| for every
/// subinterval J. A fat SVC set fills the base; every removed interval
/// carries a rescaled copy at the next level, with shrinking budgets so that
/// the total measure equals budget * (d - c).
class UbiquitousSet {
 public:
  UbiquitousSet(Interval base, double budget = 0.5);

  const Interval& base() const { return base_; }
  double budget() const { return budget_; }
  double measure() const { return budget_ * base_.length(); }

  /// Measure fraction of the level-k SVC generator within its own base.
  double level_fraction(int k) const;
  /// Measure fraction of the level-k ubiquitous construction within its base.
  double fill_fraction(int k) const;
  /// The SVC generator placed on base g at level k.
  SVCSet level_generator(Interval g, int k) const;

  UbiquitousSet affine(double scale, double shift) const;

  bool operator==(const UbiquitousSet& o) const { return base_ == o.base_ && budget_ == o.budget_; }

 private:
  Interval base_;
  double budget_;
};

/// A cell of a measure approximation: bracket for |A cap [lo,hi]|.
struct Cell {
  double lo;
  double hi;
  double mass_lo;
  double mass_hi;
  double moment_lo = 0.0;  // bracket for the first moment of A cap [lo,hi]
  double moment_hi = 0.0;

  double length() const { return hi - lo; }
};

/// Borel subset of R modulo null sets, as an expression tree over interval
/// unions, SVC generators and ubiquitous sets.
class MeasurableSubset {
 public:
  enum class Op { Union, Intersection, Difference };

  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Composite {
    Op op;
    std::vector<NodePtr> operands;  // Difference: exactly two
  };
  struct Node {
    std::variant<std::vector<Interval>, SVCSet, UbiquitousSet, Composite> value;
  };

  MeasurableSubset();  // empty set
  static MeasurableSubset empty() { return {}; }
  static MeasurableSubset interval(double lo, double hi);
  static MeasurableSubset intervals(std::vector<Interval> pieces);
  static MeasurableSubset point(double x) { return interval(x, x); }
  static MeasurableSubset svc(SVCSet s);
  static MeasurableSubset ubiquitous(UbiquitousSet u);

  friend MeasurableSubset operator|(const MeasurableSubset& a, const MeasurableSubset& b);
  friend MeasurableSubset operator&(const MeasurableSubset& a, const MeasurableSubset& b);
  friend MeasurableSubset operator-(const MeasurableSubset& a, const MeasurableSubset& b);
  static MeasurableSubset unite(const std::vector<MeasurableSubset>& parts);

  /// Closed interval containing the set; nullopt when empty.
  std::optional<Interval> hull() const;
  bool is_empty_expression() const;

  /// Cells of width at most h covering window, cut at the expression's own
  /// breakpoints and at any extra ones; empty cells are dropped.
  std::vector<Cell> approximate(Interval window, double h, const std::vector<double>& breaks = {}) const;

  Tri contains(double x, int depth) const;

  MeasurableSubset affine(double scale, double shift) const;

  const Node& node() const { return *node_; }
  NodePtr node_ptr() const { return node_; }
  explicit MeasurableSubset(NodePtr n) : node_(std::move(n)) {}

  /// Structural equality of the expression trees.
  bool same_expression(const MeasurableSubset& o) const;

 private:
  NodePtr node_;
};

/// Bracket of width <= 2 tol containing |A|. Throws TolNotAchievable only when
/// the refinement budget is exhausted.
Bracket lebesgue_measure(const MeasurableSubset& a, double tol);
Bracket lebesgue_measure(const MeasurableSubset& a, Interval window, double tol);

struct MeasureQuery {
  Bracket value;
  bool converged;  // width <= 2 tol
};
/// Best-effort bracket: refines until the width reaches 2 tol or the cell
/// budget runs out. Heterogeneous generator combinations may stop wider.
MeasureQuery measure_query(const MeasurableSubset& a, Interval window, double tol);
MeasureQuery measure_query(const MeasurableSubset& a, double tol);

/// True when a is contained in b up to a null set, proven from the
/// expression structure alone; false means "not proven".
bool provably_subset(const MeasurableSubset& a, const MeasurableSubset& b);

enum class SetRelation { Equal, Different, Unknown };
/// a.e. equality decided via the measure of the symmetric difference.
SetRelation ae_compare(const MeasurableSubset& a, const MeasurableSubset& b, double tol);

/// Nearly closed subset of R: closure pieces plus endpoint membership.
class NearlyClosedSet {
 public:
  enum class Kind { Interval, Point, Generator };
  struct Piece {
    Kind kind;
    double lo;
    double hi;
    std::optional<SVCSet> generator;
  };

  NearlyClosedSet(std::vector<Piece> pieces, bool l_in_E = true, bool r_in_E = true);

  static Piece interval_piece(double c, double d) { return {Kind::Interval, c, d, std::nullopt}; }
  static Piece point_piece(double c) { return {Kind::Point, c, c, std::nullopt}; }
  static Piece generator_piece(SVCSet s) {
    const auto b = s.base();
    return {Kind::Generator, b.lo, b.hi, std::move(s)};
  }
  static NearlyClosedSet interval(double c, double d, bool l_in = true, bool r_in = true) {
    return NearlyClosedSet({interval_piece(c, d)}, l_in, r_in);
  }
  static NearlyClosedSet points(const std::vector<double>& xs);
  static NearlyClosedSet svc(SVCSet s) { return NearlyClosedSet({generator_piece(std::move(s))}); }

  const std::vector<Piece>& pieces() const { return pieces_; }
  double l() const { return pieces_.front().lo; }
  double r() const { return pieces_.back().hi; }
  bool l_in_E() const { return l_in_E_; }
  bool r_in_E() const { return r_in_E_; }
  bool bounded() const;
  /// Some certified point of E, for anchoring scales. Excluded endpoints are skipped.
  double member() const;
  /// Throws UnboundedDomain when l or r is infinite.
  void require_bounded(const char* op) const;

  /// The closure pieces as a measurable set (endpoint flags are null sets).
  MeasurableSubset as_subset() const;
  /// [l, r] minus E, the union of the gaps.
  MeasurableSubset gap_subset() const;

  /// Exact membership where decidable; generator pieces use contains(depth).
  Tri contains(double x, int depth = 40) const;
  /// Gap (a,b) of I minus E containing x, if any (x strictly inside).
  std::optional<Interval> gap_containing(double x, int depth = SVCSet::kMaxStage) const;

  Bracket measure() const;
  double total_gap_length() const;

  NearlyClosedSet affine(double scale, double shift) const;

  bool operator==(const NearlyClosedSet& o) const;

 private:
  std::vector<Piece> pieces_;
  bool l_in_E_;
  bool r_in_E_;
};

struct GapList {
  std::vector<Interval> gaps;  // decreasing length, ties left to right
  double tail = 0.0;           // total length of gaps not listed
};

/// Gaps of I minus E in decreasing length, at most max_count of them. With a
/// tolerance, stops as soon as the tail falls to tol and throws
/// TolNotAchievable when the tail still exceeds tol after max_count gaps.
GapList gaps(const NearlyClosedSet& e, std::size_t max_count, std::optional<double> tol = std::nullopt);

bool is_nowhere_dense(const NearlyClosedSet& e);

}  // namespace quasidiff
